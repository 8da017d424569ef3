//! Special coordinates: with `dG = θ_1` and `r_i = c_i e^{−G}`, the fields
//! `v_1, r_2 v_2` commute. Exact for the model metric, second order for the
//! sine-Gordon kink.

use pseudosphere::models::{hyperbolic_frame, sg_forms, sg_solution, KinkKind};
use pseudosphere::rotation::{solve_phi_2d, special_coordinates_check, SolveOptions};
use pseudosphere::GridChart;

fn main() -> pseudosphere::Result<()> {
    let opts = SolveOptions::default();
    let chart = GridChart::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[41, 41])?;
    let fd = hyperbolic_frame(&chart)?;
    let rep = solve_phi_2d(&fd, 0.0, &chart.center(), &opts)?;
    let chk = special_coordinates_check(&fd, &rep, &[1.0], 1e-6, 1e-8)?;
    println!("dx² + e^(-2x) dy²: max commutator {:.3e}", chk.max());

    for m in [25, 49, 97] {
        let chart = GridChart::from_bounds(&[0.5, -2.0], &[3.5, 2.0], &[m, m])?;
        let fd = sg_forms(&sg_solution(&chart, KinkKind::Static)?)?;
        let rep = solve_phi_2d(&fd, 0.0, &chart.center(), &opts)?;
        let chk = special_coordinates_check(&fd, &rep, &[1.0], 1.0, 1e-8)?;
        println!(
            "kink, h={:.4}: max commutator {:.3e}",
            chart.max_spacing(),
            chk.max()
        );
    }
    Ok(())
}
