//! Special frame of the sine-Gordon kink: solves for the angle φ, checks it
//! against the explicit angle system and cross-checks the matrix solver.

use pseudosphere::models::{sg_forms, sg_phi_system_check, sg_solution, KinkKind};
use pseudosphere::rotation::{solve_l_nd, solve_phi_2d, SolveOptions};
use pseudosphere::GridChart;

fn main() -> pseudosphere::Result<()> {
    let opts = SolveOptions::default();
    for m in [65, 129, 257] {
        let chart = GridChart::from_bounds(&[-8.0, -8.0], &[8.0, 8.0], &[m, m])?;
        let sol = sg_solution(&chart, KinkKind::Static)?;
        let fd = sg_forms(&sol)?;
        let base = chart.center();
        let angle = solve_phi_2d(&fd, 0.0, &base, &opts)?;
        let matrix = solve_l_nd(&fd, &[1.0, 0.0, 0.0, 1.0], &base, &opts)?;
        let phi = angle.angle().expect("2D solve");
        let l11 = (0..chart.len())
            .map(|p| (matrix.rotation.entry(p, 0, 0) - phi.at(p).cos()).abs())
            .fold(0.0, f64::max);
        let chk = sg_phi_system_check(&sol, phi)?;
        println!(
            "{m:>3}²: closed={:.3e} compat={:.3e} orth={:.1e} |L11-cosφ|={:.1e} system={:.2e}",
            angle.closed_residual,
            angle.compat_residual,
            matrix.orth_residual,
            l11,
            chk.residual_x1.max(chk.residual_x2)
        );
    }
    Ok(())
}
