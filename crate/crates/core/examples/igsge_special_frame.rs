//! The explicit three-dimensional IGSGE solution: residuals of the system,
//! the matrix rotation solve with a rotated initial frame, and the
//! conservation laws of the resulting closed form.

use pseudosphere::conservation::analyze;
use pseudosphere::frames::structure_residuals;
use pseudosphere::models::{igsge_explicit_solution, igsge_forms, igsge_residual};
use pseudosphere::rotation::{solve_l_nd, SolveOptions};
use pseudosphere::GridChart;

fn main() -> pseudosphere::Result<()> {
    // rotation by 0.5 rad about (1, 1, 1)
    let l0 = [
        0.9183883745935818,
        -0.23599065106630884,
        0.31760227647272704,
        0.31760227647272704,
        0.9183883745935818,
        -0.23599065106630884,
        -0.23599065106630884,
        0.31760227647272704,
        0.9183883745935818,
    ];
    for k in [1, 2] {
        let chart = GridChart::from_bounds(&[0.5, -4.0, -4.0], &[6.0, 4.0, 4.0], &[12, 17, 17])?
            .refined(2 * k)?;
        let s = igsge_explicit_solution(&chart, &[0.6, 0.8])?;
        let fd = igsge_forms(&s)?;
        let r = igsge_residual(&s);
        let rep = solve_l_nd(&fd, &l0, &chart.center(), &SolveOptions::default())?;
        let cons = analyze(&rep.theta1, 0)?;
        println!(
            "h={:.4}: system={:.2e} structure={:.2e} {}",
            chart.max_spacing(),
            r.max(),
            structure_residuals(&fd, -1.0).max(),
            rep.summary_line()
        );
        for q in &cons.quantities {
            println!(
                "    axis {}: flux residual {:.3e}, boundary jump {:.3e}",
                q.axis, q.flux_residual.max, q.boundary_jump
            );
        }
    }
    Ok(())
}
