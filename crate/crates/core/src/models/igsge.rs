//! Intrinsic generalized sine-Gordon equation for a unit vector field `V`
//! and an off-diagonal matrix `h`:
//!
//! ```text
//! V Vᵗ = 1
//! ∂V_i/∂x_j = V_j h_ji                                   i ≠ j
//! ∂h_ij/∂x_i + ∂h_ji/∂x_j + Σ_{s≠i,j} h_si h_sj = V_i V_j   i ≠ j
//! ∂h_ij/∂x_s = h_is h_sj                                 i, j, s distinct
//! ```
//!
//! Solutions give `ω_i = V_i dx_i`, `ω_ij = h_ij dx_j − h_ji dx_i`.

use crate::error::{Error, Result};
use crate::forms::{pairs, partial, ConnectionField, OneFormField};
use crate::frames::FrameData;
use crate::grid::{GridChart, Norms, ScalarField};

/// `{V, h}` sampled on an `n`-dimensional chart; `h` is stored as a full
/// `n × n` row-major list whose diagonal is zero.
#[derive(Debug, Clone)]
pub struct IgsgeState {
    v: Vec<ScalarField>,
    h: Vec<ScalarField>,
}

impl IgsgeState {
    pub fn new(v: Vec<ScalarField>, h: Vec<ScalarField>) -> Result<Self> {
        let n = v.len();
        let chart = v
            .first()
            .ok_or_else(|| Error::Dimension("V has no components".into()))?
            .chart();
        if chart.dim() != n {
            return Err(Error::Dimension(format!(
                "V has {n} components on a {}-dimensional chart",
                chart.dim()
            )));
        }
        if h.len() != n * n {
            return Err(Error::Dimension(format!(
                "h needs {} entries, got {}",
                n * n,
                h.len()
            )));
        }
        for f in v.iter().chain(&h) {
            chart.check_same(f.chart())?;
        }
        if let Some(i) = (0..n).find(|i| h[i * n + i].max_abs() != 0.0) {
            return Err(Error::InvalidParameter(format!("h_{i}{i} must vanish")));
        }
        Ok(Self { v, h })
    }

    pub fn chart(&self) -> &GridChart {
        self.v[0].chart()
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn v(&self) -> &[ScalarField] {
        &self.v
    }

    pub fn h(&self, i: usize, j: usize) -> &ScalarField {
        &self.h[i * self.dim() + j]
    }

    /// Max of `|Σ V_i² − 1|` over all nodes.
    pub fn unit_defect(&self) -> f64 {
        (0..self.chart().len())
            .map(|p| (self.v.iter().map(|f| f.at(p) * f.at(p)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// One norm per equation group, over interior nodes (the unit-length group
/// over all nodes).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IgsgeResiduals {
    pub unit: Norms,
    pub first_order: Norms,
    pub gauss: Norms,
    pub codazzi: Norms,
}

impl IgsgeResiduals {
    pub fn max(&self) -> f64 {
        self.unit
            .max
            .max(self.first_order.max)
            .max(self.gauss.max)
            .max(self.codazzi.max)
    }
}

pub fn igsge_residual(s: &IgsgeState) -> IgsgeResiduals {
    let n = s.dim();
    let chart = s.chart();
    let unit = Norms::accumulate(
        (0..chart.len()).map(|p| s.v.iter().map(|f| f.at(p) * f.at(p)).sum::<f64>() - 1.0),
    );
    let dv: Vec<Vec<ScalarField>> =
        s.v.iter()
            .map(|f| (0..n).map(|j| partial(f, j)).collect())
            .collect();
    let dh: Vec<Vec<ScalarField>> =
        s.h.iter()
            .map(|f| (0..n).map(|k| partial(f, k)).collect())
            .collect();
    let h = |i: usize, j: usize, p: usize| s.h[i * n + j].at(p);
    let dh_at = |i: usize, j: usize, k: usize, p: usize| dh[i * n + j][k].at(p);

    let mut first = Vec::new();
    let mut gauss = Vec::new();
    let mut codazzi = Vec::new();
    for p in chart.interior_nodes() {
        for i in 0..n {
            for j in (0..n).filter(|j| *j != i) {
                first.push(dv[i][j].at(p) - s.v[j].at(p) * h(j, i, p));
            }
        }
        for (i, j) in pairs(n) {
            let sum: f64 = (0..n)
                .filter(|k| *k != i && *k != j)
                .map(|k| h(k, i, p) * h(k, j, p))
                .sum();
            gauss.push(dh_at(i, j, i, p) + dh_at(j, i, j, p) + sum - s.v[i].at(p) * s.v[j].at(p));
        }
        for i in 0..n {
            for j in (0..n).filter(|j| *j != i) {
                for k in (0..n).filter(|k| *k != i && *k != j) {
                    codazzi.push(dh_at(i, j, k, p) - h(i, k, p) * h(k, j, p));
                }
            }
        }
    }
    IgsgeResiduals {
        unit,
        first_order: Norms::accumulate(first.into_iter()),
        gauss: Norms::accumulate(gauss.into_iter()),
        codazzi: Norms::accumulate(codazzi.into_iter()),
    }
}

/// `h_ji = (∂V_i/∂x_j) / V_j` by finite differences; entries are set to zero
/// at nodes where `|V_j| ≤ threshold`, which are reported in the mask
/// (`true` = usable).
pub fn igsge_h_from_v(v: &[ScalarField], threshold: f64) -> Result<(Vec<ScalarField>, Vec<bool>)> {
    let n = v.len();
    let chart = v
        .first()
        .ok_or_else(|| Error::Dimension("V has no components".into()))?
        .chart();
    let mask: Vec<bool> = (0..chart.len())
        .map(|p| v.iter().all(|f| f.at(p).abs() > threshold))
        .collect();
    if !mask.iter().any(|k| *k) {
        return Err(Error::Degenerate {
            count: chart.len(),
            first: 0,
        });
    }
    let mut h = vec![ScalarField::zeros(chart); n * n];
    for i in 0..n {
        for j in (0..n).filter(|j| *j != i) {
            let d = partial(&v[i], j);
            let vals = (0..chart.len())
                .map(|p| if mask[p] { d.at(p) / v[j].at(p) } else { 0.0 })
                .collect();
            h[j * n + i] = ScalarField::new(chart.clone(), vals)?;
        }
    }
    Ok((h, mask))
}

pub fn igsge_forms(s: &IgsgeState) -> Result<FrameData> {
    let n = s.dim();
    let chart = s.chart();
    let zero = ScalarField::zeros(chart);
    let omega = (0..n)
        .map(|i| {
            OneFormField::new(
                (0..n)
                    .map(|k| if k == i { s.v[i].clone() } else { zero.clone() })
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let upper = pairs(n)
        .map(|(i, j)| {
            OneFormField::new(
                (0..n)
                    .map(|k| match k {
                        _ if k == j => s.h(i, j).clone(),
                        _ if k == i => s.h(j, i).map(|x| -x),
                        _ => zero.clone(),
                    })
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    FrameData::new(omega, ConnectionField::new(chart, upper)?)
}

/// `V_1 = tanh x_1`, `V_j = c_j sech x_1` with `Σ c_j² = 1`, on `x_1 > 0`;
/// `h_1j = −c_j sech x_1` and every other entry zero.
pub fn igsge_explicit_solution(chart: &GridChart, c: &[f64]) -> Result<IgsgeState> {
    let n = chart.dim();
    if c.len() != n - 1 {
        return Err(Error::Dimension(format!(
            "need {} constants c_j, got {}",
            n - 1,
            c.len()
        )));
    }
    let norm: f64 = c.iter().map(|x| x * x).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "Σ c_j² = {norm}, expected 1"
        )));
    }
    if !(chart.origin()[0] > 0.0) {
        return Err(Error::InvalidChart(format!(
            "explicit solution needs x_1 > 0, chart starts at {}",
            chart.origin()[0]
        )));
    }
    let sech = |x: &[f64]| 1.0 / x[0].cosh();
    let mut v = vec![ScalarField::from_fn(chart, |x| x[0].tanh())?];
    for cj in c {
        v.push(ScalarField::from_fn(chart, |x| cj * sech(x))?);
    }
    let mut h = vec![ScalarField::zeros(chart); n * n];
    for (j, cj) in c.iter().enumerate() {
        h[j + 1] = ScalarField::from_fn(chart, |x| -cj * sech(x))?;
    }
    IgsgeState::new(v, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{frame_vector_fields, structure_residuals};
    use crate::models::sine_gordon::{sg_forms, sg_solution, KinkKind};

    fn chart3(m: usize) -> GridChart {
        GridChart::from_bounds(&[0.5, -4.0, -4.0], &[6.0, 4.0, 4.0], &[m, m, m]).unwrap()
    }

    #[test]
    fn explicit_solution_is_unit_and_solves() {
        for m in [9usize, 17] {
            let c = chart3(m);
            let s = igsge_explicit_solution(&c, &[0.6, 0.8]).unwrap();
            assert!(s.unit_defect() < 1e-15);
            let r = igsge_residual(&s);
            let h = c.max_spacing();
            assert!(r.max() < h * h, "{r:?}");
            let fd = igsge_forms(&s).unwrap();
            assert!(structure_residuals(&fd, -1.0).max() < h * h);
        }
    }

    #[test]
    fn explicit_solution_validates_inputs() {
        let c = chart3(5);
        assert!(igsge_explicit_solution(&c, &[0.6, 0.7]).is_err());
        assert!(igsge_explicit_solution(&c, &[1.0]).is_err());
        let bad = GridChart::from_bounds(&[-1.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &[5, 5, 5]).unwrap();
        assert!(igsge_explicit_solution(&bad, &[0.6, 0.8]).is_err());
    }

    #[test]
    fn h_from_v_matches_analytic() {
        let c = chart3(33);
        let s = igsge_explicit_solution(&c, &[0.6, 0.8]).unwrap();
        let (h, mask) = igsge_h_from_v(s.v(), 1e-8).unwrap();
        assert!(mask.iter().all(|k| *k));
        let hs = c.max_spacing();
        for i in 0..3 {
            for j in 0..3 {
                let diff = c
                    .interior_nodes()
                    .map(|p| (h[i * 3 + j].at(p) - s.h(i, j).at(p)).abs())
                    .fold(0.0, f64::max);
                assert!(diff < hs * hs, "h_{i}{j}: {diff}");
            }
        }
    }

    #[test]
    fn constant_v_detects_gauss_defect() {
        let c = GridChart::from_bounds(&[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
        let (a, b) = (0.6, 0.8);
        let v = vec![ScalarField::constant(&c, a), ScalarField::constant(&c, b)];
        let (h, _) = igsge_h_from_v(&v, 1e-8).unwrap();
        assert!(h.iter().all(|f| f.max_abs() < 1e-14));
        let s = IgsgeState::new(v, h).unwrap();
        let r = igsge_residual(&s);
        assert!((r.gauss.max - a * b).abs() < 1e-13);
        assert!(igsge_forms(&s).unwrap().connection().upper()[0].coeffs()[0].max_abs() < 1e-14);
    }

    #[test]
    fn two_dimensional_case_is_sine_gordon() {
        let c = GridChart::from_bounds(&[-8.0, -8.0], &[8.0, 8.0], &[65, 65]).unwrap();
        let sol = sg_solution(&c, KinkKind::Moving { velocity: 0.4 }).unwrap();
        let v = vec![
            sol.u.map(|u| (0.5 * u).cos()),
            sol.u.map(|u| (0.5 * u).sin()),
        ];
        let h = vec![
            ScalarField::zeros(&c),
            sol.u_x1.map(|d| 0.5 * d),
            sol.u_x2.map(|d| -0.5 * d),
            ScalarField::zeros(&c),
        ];
        let s = IgsgeState::new(v, h).unwrap();
        let hs = c.max_spacing();
        assert!(igsge_residual(&s).max() < hs * hs);
        let a = igsge_forms(&s).unwrap();
        let b = sg_forms(&sol).unwrap();
        assert_eq!(a.omega(), b.omega());
        assert_eq!(a.connection(), b.connection());
    }

    #[test]
    fn frame_vectors_are_diagonal_inverse() {
        let c = chart3(9);
        let s = igsge_explicit_solution(&c, &[0.6, 0.8]).unwrap();
        let e = frame_vector_fields(&igsge_forms(&s).unwrap(), 1e-8).unwrap();
        for p in 0..c.len() {
            for i in 0..3 {
                for a in 0..3 {
                    let want = if a == i { 1.0 / s.v()[i].at(p) } else { 0.0 };
                    assert!((e.component(p, a, i) - want).abs() < 1e-12 * want.abs().max(1.0));
                }
            }
        }
    }
}
