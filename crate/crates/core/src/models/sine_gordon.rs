//! Sine-Gordon equation `u_{x1x1} − u_{x2x2} = sin u` as the two-dimensional
//! reduction of the IGSGE with `V = (cos u/2, sin u/2)`.
//!
//! Frame: `ω_1 = cos(u/2) dx_1`, `ω_2 = sin(u/2) dx_2`,
//! `ω_12 = (u_{x2}/2) dx_1 + (u_{x1}/2) dx_2`. The axis `x_1` plays the role
//! of time in conservation reports.

use crate::error::{Error, Result};
use crate::forms::{closedness_residual, partial, ConnectionField, OneFormField};
use crate::frames::FrameData;
use crate::grid::{GridChart, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KinkKind {
    /// `u = 4 arctan(e^{x_1})`.
    Static,
    /// `u = 4 arctan(exp((x_1 − v x_2)/√(1 − v²)))`, `|v| < 1`.
    Moving { velocity: f64 },
}

/// A solution with its first derivatives.
#[derive(Debug, Clone)]
pub struct SineGordonSolution {
    pub u: ScalarField,
    pub u_x1: ScalarField,
    pub u_x2: ScalarField,
}

impl SineGordonSolution {
    /// Derivatives by finite differences, for user-supplied samples.
    pub fn from_samples(u: ScalarField) -> Result<Self> {
        if u.chart().dim() != 2 {
            return Err(Error::Dimension(format!(
                "sine-Gordon needs a 2D chart, got dim {}",
                u.chart().dim()
            )));
        }
        Ok(Self {
            u_x1: partial(&u, 0),
            u_x2: partial(&u, 1),
            u,
        })
    }

    pub fn chart(&self) -> &GridChart {
        self.u.chart()
    }
}

/// Samples a kink with analytic derivatives.
pub fn sg_solution(chart: &GridChart, kind: KinkKind) -> Result<SineGordonSolution> {
    if chart.dim() != 2 {
        return Err(Error::Dimension(format!(
            "sine-Gordon needs a 2D chart, got dim {}",
            chart.dim()
        )));
    }
    let v = match kind {
        KinkKind::Static => 0.0,
        KinkKind::Moving { velocity } => {
            if !(velocity.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "kink velocity {velocity} must satisfy |v| < 1"
                )));
            }
            velocity
        }
    };
    let gamma = 1.0 / (1.0 - v * v).sqrt();
    let xi = |x: &[f64]| gamma * (x[0] - v * x[1]);
    let sech = |x: &[f64]| 1.0 / xi(x).cosh();
    Ok(SineGordonSolution {
        u: ScalarField::from_fn(chart, |x| 4.0 * xi(x).exp().atan())?,
        u_x1: ScalarField::from_fn(chart, |x| 2.0 * gamma * sech(x))?,
        u_x2: ScalarField::from_fn(chart, |x| -2.0 * gamma * v * sech(x))?,
    })
}

/// Finite-difference residual of `u_{x1x1} − u_{x2x2} − sin u` over interior
/// nodes.
pub fn sg_pde_residual(u: &ScalarField) -> f64 {
    let chart = u.chart();
    let (h1, h2) = (chart.spacing()[0], chart.spacing()[1]);
    let (s1, s2) = (chart.stride(0), chart.stride(1));
    let v = u.values();
    chart
        .interior_nodes()
        .map(|p| {
            let d11 = (v[p + s1] - 2.0 * v[p] + v[p - s1]) / (h1 * h1);
            let d22 = (v[p + s2] - 2.0 * v[p] + v[p - s2]) / (h2 * h2);
            (d11 - d22 - v[p].sin()).abs()
        })
        .fold(0.0, f64::max)
}

pub fn sg_forms(sol: &SineGordonSolution) -> Result<FrameData> {
    let chart = sol.chart();
    let zero = ScalarField::zeros(chart);
    let w1 = OneFormField::new(vec![sol.u.map(|u| (0.5 * u).cos()), zero.clone()])?;
    let w2 = OneFormField::new(vec![zero, sol.u.map(|u| (0.5 * u).sin())])?;
    let w12 = OneFormField::new(vec![sol.u_x2.map(|d| 0.5 * d), sol.u_x1.map(|d| 0.5 * d)])?;
    FrameData::new(vec![w1, w2], ConnectionField::new(chart, vec![w12])?)
}

/// Residuals of the angle system and the closed form it produces.
#[derive(Debug, Clone)]
pub struct SgPhiCheck {
    /// Max of `|φ_{x1} − u_{x2}/2 − sin φ cos(u/2)|` over interior nodes.
    pub residual_x1: f64,
    /// Max of `|φ_{x2} − u_{x1}/2 − cos φ sin(u/2)|` over interior nodes.
    pub residual_x2: f64,
    /// `cos φ cos(u/2) dx_1 − sin φ sin(u/2) dx_2`.
    pub theta: OneFormField,
    pub closed_residual: f64,
}

pub fn sg_phi_system_check(sol: &SineGordonSolution, phi: &ScalarField) -> Result<SgPhiCheck> {
    let chart = sol.chart();
    chart.check_same(phi.chart())?;
    let (d1, d2) = (partial(phi, 0), partial(phi, 1));
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for p in chart.interior_nodes() {
        let (s, c) = phi.at(p).sin_cos();
        let (su, cu) = (0.5 * sol.u.at(p)).sin_cos();
        r1 = r1.max((d1.at(p) - 0.5 * sol.u_x2.at(p) - s * cu).abs());
        r2 = r2.max((d2.at(p) - 0.5 * sol.u_x1.at(p) - c * su).abs());
    }
    let a = phi.zip_with(&sol.u, |f, u| f.cos() * (0.5 * u).cos());
    let b = phi.zip_with(&sol.u, |f, u| -f.sin() * (0.5 * u).sin());
    let theta = OneFormField::new(vec![a, b])?;
    Ok(SgPhiCheck {
        residual_x1: r1,
        residual_x2: r2,
        closed_residual: closedness_residual(&theta),
        theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::wedge;
    use crate::frames::structure_residuals;
    use crate::rotation::{solve_phi_2d, SolveOptions};

    fn chart(m: usize) -> GridChart {
        GridChart::from_bounds(&[-8.0, -8.0], &[8.0, 8.0], &[m, m]).unwrap()
    }

    #[test]
    fn kink_solves_the_pde() {
        let r = |m: usize, kind| sg_pde_residual(&sg_solution(&chart(m), kind).unwrap().u);
        for kind in [KinkKind::Static, KinkKind::Moving { velocity: 0.6 }] {
            let ratio = r(65, kind) / r(129, kind);
            assert!(ratio > 3.5 && ratio < 4.5, "{kind:?}: {ratio}");
        }
    }

    #[test]
    fn kink_limits_and_static_case() {
        let c = chart(33);
        let s = sg_solution(&c, KinkKind::Static).unwrap();
        let m = sg_solution(&c, KinkKind::Moving { velocity: 0.0 }).unwrap();
        assert_eq!(s.u, m.u);
        assert_eq!(s.u_x1, m.u_x1);
        let lo = c.node(&[0, 5]).unwrap();
        let hi = c.node(&[32, 5]).unwrap();
        assert!(s.u.at(lo) < 2e-3 && (s.u.at(hi) - std::f64::consts::TAU).abs() < 2e-3);
        assert!(sg_solution(&c, KinkKind::Moving { velocity: 1.0 }).is_err());
    }

    #[test]
    fn forms_and_structure() {
        let c = chart(65);
        let sol = sg_solution(&c, KinkKind::Static).unwrap();
        let fd = sg_forms(&sol).unwrap();
        let w = wedge(&fd.omega()[0], &fd.omega()[1]);
        for p in 0..c.len() {
            let u = sol.u.at(p);
            assert_eq!(w.coeff(0, 1).at(p), (0.5 * u).cos() * (0.5 * u).sin());
            assert!(((0.5 * u).cos().powi(2) + (0.5 * u).sin().powi(2) - 1.0).abs() < 1e-15);
        }
        let h = c.max_spacing();
        let r = structure_residuals(&fd, -1.0);
        assert!(r.max() < h * h, "{r:?}");
        // ω_1 vanishes on x_1 = 0
        assert!(r.masked_nodes > 0);
    }

    #[test]
    fn degenerate_constant_pi() {
        let c = chart(9);
        let sol = SineGordonSolution::from_samples(ScalarField::constant(&c, std::f64::consts::PI))
            .unwrap();
        let fd = sg_forms(&sol).unwrap();
        assert!(fd.nondegenerate_mask(1e-8).iter().all(|k| !k));
    }

    #[test]
    fn zero_solution_has_zero_residuals() {
        let c = chart(9);
        let sol = SineGordonSolution::from_samples(ScalarField::zeros(&c)).unwrap();
        let chk = sg_phi_system_check(&sol, &ScalarField::zeros(&c)).unwrap();
        assert_eq!(
            (chk.residual_x1, chk.residual_x2, chk.closed_residual),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn solver_angle_satisfies_the_system() {
        let c = chart(129);
        let sol = sg_solution(&c, KinkKind::Static).unwrap();
        let rep = solve_phi_2d(
            &sg_forms(&sol).unwrap(),
            0.0,
            &c.center(),
            &SolveOptions::default(),
        )
        .unwrap();
        let chk = sg_phi_system_check(&sol, rep.angle().unwrap()).unwrap();
        let h = c.max_spacing();
        assert!(
            chk.residual_x1 < h * h && chk.residual_x2 < h * h,
            "{} {}",
            chk.residual_x1,
            chk.residual_x2
        );
        for axis in 0..2 {
            for p in 0..c.len() {
                assert!((chk.theta.coeff(axis).at(p) - rep.theta1.coeff(axis).at(p)).abs() < 1e-14);
            }
        }
    }
}
