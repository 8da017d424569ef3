//! Structure equations with curvature −1 for model frames, and the gate that
//! refuses frame data which does not satisfy them.

use pseudosphere::frames::{structure_gate, structure_residuals};
use pseudosphere::models::{cosh_frame, flat_frame, hyperbolic_frame};
use pseudosphere::GridChart;

fn main() -> pseudosphere::Result<()> {
    for m in [21, 41, 81] {
        let chart = GridChart::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[m, m])?;
        let hyp = structure_residuals(&hyperbolic_frame(&chart)?, -1.0);
        let cosh = structure_residuals(&cosh_frame(&chart)?, -1.0);
        println!(
            "h={:.4}: e^(-2x) frame res={:.3e}  cosh frame res={:.3e}",
            chart.max_spacing(),
            hyp.max(),
            cosh.max()
        );
    }
    let chart = GridChart::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[41, 41])?;
    match structure_gate(&flat_frame(&chart)?, 10.0, 1e-8) {
        Ok(_) => println!("flat frame passed the gate (unexpected)"),
        Err(e) => println!("flat frame rejected: {e}"),
    }
    Ok(())
}
