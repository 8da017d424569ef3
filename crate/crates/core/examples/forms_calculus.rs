//! Discrete exterior calculus on a grid: exterior derivative, wedge product,
//! closedness and recovery of a potential.

use pseudosphere::forms::{closedness_residual, d_oneform, d_scalar, potential, wedge};
use pseudosphere::{GridChart, OneFormField, ScalarField};

fn main() -> pseudosphere::Result<()> {
    let chart = GridChart::from_bounds(&[0.0, 0.0], &[1.0, 2.0], &[41, 81])?;

    // d(dG) = 0 holds exactly for the discrete operators.
    let g = ScalarField::from_fn(&chart, |x| (x[0] * x[1]).sin() + x[0] * x[0])?;
    let dg = d_scalar(&g);
    println!("max |d(dG)|          = {:.3e}", closedness_residual(&dg));

    // x dy is not closed: d(x dy) = dx ∧ dy.
    let x_dy = OneFormField::from_fn(&chart, |x| vec![0.0, x[0]])?;
    let two = d_oneform(&x_dy);
    println!(
        "d(x dy) coefficient  = {:.6}",
        two.coeff(0, 1).at(chart.node(&[20, 40])?)
    );

    let area = wedge(
        &OneFormField::coordinate(&chart, 0),
        &OneFormField::coordinate(&chart, 1),
    );
    println!("dx ∧ dy coefficient  = {:.6}", area.coeff(0, 1).at(0));

    // Integrating dG back recovers G up to its value at the base node.
    let base = chart.center();
    let pot = potential(&dg, &base, 1e-3)?;
    let b = chart.node(&base)?;
    let err = (0..chart.len())
        .map(|p| (pot.g.at(p) - (g.at(p) - g.at(b))).abs())
        .fold(0.0, f64::max);
    println!(
        "potential error      = {err:.3e} (path residual {:.3e})",
        pot.path_residual
    );
    Ok(())
}
