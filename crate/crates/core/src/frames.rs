//! Orthonormal frame data, frame rotations and the structure equations.
//!
//! Conventions: `ω_i` is the coframe, `ω_ij = ⟨de_i, e_j⟩` the connection, and
//! the structure equations read
//! `dω_i = Σ_j ω_j∧ω_ji`, `dω_ij = Σ_k ω_ik∧ω_kj − K ω_i∧ω_j`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::forms::{d_oneform, pairs, partial, wedge, ConnectionField, OneFormField, TwoFormField};
use crate::grid::{GridChart, Norms, ScalarField};

/// Default relative threshold on `|det F|` below which a node is degenerate.
pub const DEFAULT_NONDEGENERACY: f64 = 1e-8;

/// Coframe and connection forms of an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameData {
    chart: GridChart,
    omega: Vec<OneFormField>,
    connection: ConnectionField,
}

impl FrameData {
    pub fn new(omega: Vec<OneFormField>, connection: ConnectionField) -> Result<Self> {
        let chart = connection.chart().clone();
        if omega.len() != chart.dim() {
            return Err(Error::Dimension(format!(
                "{} dual forms on a {}-dimensional chart",
                omega.len(),
                chart.dim()
            )));
        }
        for w in &omega {
            chart.check_same(w.chart())?;
        }
        Ok(Self {
            chart,
            omega,
            connection,
        })
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn omega(&self) -> &[OneFormField] {
        &self.omega
    }

    pub fn connection(&self) -> &ConnectionField {
        &self.connection
    }

    /// `F[i][k] = (ω_i)_k` at a node, row-major.
    pub fn coframe_matrix(&self, node: usize) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, k| self.omega[i].coeff(k).at(node))
    }

    /// Largest coefficient magnitude over all forms.
    pub fn magnitude(&self) -> f64 {
        let forms = self.omega.iter().chain(self.connection.upper());
        forms
            .flat_map(|w| w.coeffs().iter().map(|c| c.max_abs()))
            .fold(0.0, f64::max)
    }

    /// Per-node nondegeneracy: `|det F| > threshold · s^n` with `s` the largest
    /// coframe coefficient magnitude on the chart.
    pub fn nondegenerate_mask(&self, threshold: f64) -> Vec<bool> {
        let n = self.dim();
        let scale = self
            .omega
            .iter()
            .flat_map(|w| w.coeffs().iter().map(|c| c.max_abs()))
            .fold(0.0, f64::max);
        let limit = threshold * scale.powi(n as i32);
        (0..self.chart.len())
            .map(|p| self.coframe_matrix(p).determinant().abs() > limit)
            .collect()
    }
}

/// A pointwise orthogonal matrix field `L`, with `v_i = Σ_j L_ij e_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRotationField {
    chart: GridChart,
    n: usize,
    entries: Vec<f64>,
    angle: Option<ScalarField>,
}

impl FrameRotationField {
    /// `entries` holds `n×n` row-major blocks, one per node.
    pub fn new(chart: &GridChart, entries: Vec<f64>) -> Result<Self> {
        let n = chart.dim();
        if entries.len() != chart.len() * n * n {
            return Err(Error::LengthMismatch {
                expected: chart.len() * n * n,
                got: entries.len(),
            });
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "rotation",
                node: i / (n * n),
            });
        }
        Ok(Self {
            chart: chart.clone(),
            n,
            entries,
            angle: None,
        })
    }

    pub fn identity(chart: &GridChart) -> Self {
        let n = chart.dim();
        let block: Vec<f64> = (0..n * n)
            .map(|k| if k / n == k % n { 1.0 } else { 0.0 })
            .collect();
        Self::constant(chart, &block)
    }

    /// The same `n×n` row-major matrix at every node.
    pub fn constant(chart: &GridChart, block: &[f64]) -> Self {
        let n = chart.dim();
        assert_eq!(block.len(), n * n);
        let entries = block
            .iter()
            .cloned()
            .cycle()
            .take(chart.len() * n * n)
            .collect();
        Self {
            chart: chart.clone(),
            n,
            entries,
            angle: None,
        }
    }

    /// Planar rotation `[[cos φ, −sin φ], [sin φ, cos φ]]`, so that
    /// `θ_1 = cos φ ω_1 − sin φ ω_2`.
    pub fn from_angle(phi: &ScalarField) -> Result<Self> {
        let chart = phi.chart();
        if chart.dim() != 2 {
            return Err(Error::Dimension(
                "angle fields need a 2-dimensional chart".into(),
            ));
        }
        let entries = phi
            .values()
            .iter()
            .flat_map(|a| {
                let (s, c) = a.sin_cos();
                [c, -s, s, c]
            })
            .collect();
        Ok(Self {
            chart: chart.clone(),
            n: 2,
            entries,
            angle: Some(phi.clone()),
        })
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// The angle when this rotation came from [`FrameRotationField::from_angle`].
    pub fn angle(&self) -> Option<&ScalarField> {
        self.angle.as_ref()
    }

    pub fn block(&self, node: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.entries[node * nn..(node + 1) * nn]
    }

    pub fn matrix(&self, node: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, self.block(node))
    }

    pub fn entry(&self, node: usize, i: usize, j: usize) -> f64 {
        self.entries[node * self.n * self.n + i * self.n + j]
    }

    /// `L_ij` as scalar fields, row-major.
    pub fn entry_fields(&self) -> Vec<ScalarField> {
        let nn = self.n * self.n;
        (0..nn)
            .map(|k| {
                let v = (0..self.chart.len())
                    .map(|p| self.entries[p * nn + k])
                    .collect();
                ScalarField::from_parts(self.chart.clone(), v)
            })
            .collect()
    }

    /// `max_p ‖L Lᵗ − I‖_max`.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.n;
        (0..self.chart.len())
            .map(|p| {
                let b = self.block(p);
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        let dot: f64 = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum();
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((dot - target).abs());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    /// Pointwise product `self · other`.
    pub fn compose(&self, other: &FrameRotationField) -> Result<Self> {
        self.chart.check_same(&other.chart)?;
        let n = self.n;
        let mut entries = Vec::with_capacity(self.entries.len());
        for p in 0..self.chart.len() {
            let (a, b) = (self.block(p), other.block(p));
            for i in 0..n {
                for j in 0..n {
                    entries.push((0..n).map(|k| a[i * n + k] * b[k * n + j]).sum());
                }
            }
        }
        Self::new(&self.chart, entries)
    }
}

/// Rotates frame data: `θ_i = Σ_j L_ij ω_j`, `θ_ij = (dL Lᵗ)_ij + (L W Lᵗ)_ij`.
///
/// `dL` is taken entrywise with the chart's finite-difference stencils.
pub fn frame_change(fd: &FrameData, rot: &FrameRotationField, orth_tol: f64) -> Result<FrameData> {
    let chart = fd.chart();
    chart.check_same(rot.chart())?;
    let orth = rot.orthogonality_residual();
    if !(orth <= orth_tol) {
        return Err(Error::NotOrthogonal { residual: orth });
    }
    let n = fd.dim();
    let len = chart.len();
    let l_fields = rot.entry_fields();
    // dl[k][i*n+j] = ∂_k L_ij
    let dl: Vec<Vec<ScalarField>> = (0..n)
        .map(|k| l_fields.iter().map(|f| partial(f, k)).collect())
        .collect();

    let mut theta = vec![vec![vec![0.0; len]; n]; n];
    let mut conn = vec![vec![vec![0.0; len]; n]; n * (n - 1) / 2];
    let mut w = vec![0.0; n * n];
    for p in 0..len {
        let l = rot.block(p);
        for k in 0..n {
            for i in 0..n {
                theta[i][k][p] = (0..n)
                    .map(|j| l[i * n + j] * fd.omega()[j].coeff(k).at(p))
                    .sum();
            }
            for a in 0..n {
                for b in 0..n {
                    w[a * n + b] = fd.connection().coeff(a, b, k, p);
                }
            }
            for (idx, (i, j)) in pairs(n).enumerate() {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += dl[k][i * n + m].at(p) * l[j * n + m];
                }
                for a in 0..n {
                    for b in 0..n {
                        acc += l[i * n + a] * w[a * n + b] * l[j * n + b];
                    }
                }
                conn[idx][k][p] = acc;
            }
        }
    }
    let to_form = |cols: Vec<Vec<f64>>| -> Result<OneFormField> {
        OneFormField::new(
            cols.into_iter()
                .map(|v| ScalarField::new(chart.clone(), v))
                .collect::<Result<_>>()?,
        )
    };
    let omega = theta.into_iter().map(to_form).collect::<Result<Vec<_>>>()?;
    let upper = conn.into_iter().map(to_form).collect::<Result<Vec<_>>>()?;
    FrameData::new(omega, ConnectionField::new(chart, upper)?)
}

/// Structure-equation residuals over interior, nondegenerate nodes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StructureResiduals {
    /// `dω_i − Σ_j ω_j∧ω_ji`.
    pub res1: Norms,
    /// `dω_ij − Σ_k ω_ik∧ω_kj + K ω_i∧ω_j`, `i < j`.
    pub res2: Norms,
    pub masked_nodes: usize,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        self.res1.max.max(self.res2.max)
    }
}

pub fn structure_residuals(fd: &FrameData, curvature: f64) -> StructureResiduals {
    structure_residuals_masked(fd, curvature, DEFAULT_NONDEGENERACY)
}

pub fn structure_residuals_masked(
    fd: &FrameData,
    curvature: f64,
    threshold: f64,
) -> StructureResiduals {
    let n = fd.dim();
    let chart = fd.chart();
    let mask = fd.nondegenerate_mask(threshold);
    let masked_nodes = chart.interior_nodes().filter(|p| !mask[*p]).count();
    let keep = |p: usize| mask[p];
    let conn = fd.connection();

    let mut res1 = Norms::default();
    for i in 0..n {
        let mut r = d_oneform(&fd.omega()[i]);
        for j in (0..n).filter(|j| *j != i) {
            r.add_assign_scaled(&wedge(&fd.omega()[j], &conn.entry(j, i)), -1.0);
        }
        res1 = res1.combine(r.masked_norms(keep));
    }
    let mut res2 = Norms::default();
    for (i, j) in pairs(n) {
        let mut r: TwoFormField = d_oneform(conn.upper_entry(i, j));
        for k in (0..n).filter(|k| *k != i && *k != j) {
            r.add_assign_scaled(&wedge(&conn.entry(i, k), &conn.entry(k, j)), -1.0);
        }
        r.add_assign_scaled(&wedge(&fd.omega()[i], &fd.omega()[j]), curvature);
        res2 = res2.combine(r.masked_norms(keep));
    }
    StructureResiduals {
        res1,
        res2,
        masked_nodes,
    }
}

/// Structure check against curvature −1 with the solver's acceptance limit
/// `factor · h_max² · max(1, magnitude)`.
pub fn structure_gate(fd: &FrameData, factor: f64, threshold: f64) -> Result<StructureResiduals> {
    let res = structure_residuals_masked(fd, -1.0, threshold);
    let h = fd.chart().max_spacing();
    let limit = factor * h * h * fd.magnitude().max(1.0);
    if !(res.res1.max <= limit && res.res2.max <= limit) {
        return Err(Error::StructureGate {
            res1: res.res1.max,
            res2: res.res2.max,
            limit,
        });
    }
    Ok(res)
}

/// Max over all nodes of the coefficients of `θ_1i + θ_i` (`i ≥ 2`) and
/// `θ_ij` (`2 ≤ i < j`).
pub fn special_frame_residual(fd: &FrameData) -> f64 {
    let n = fd.dim();
    let chart = fd.chart();
    let conn = fd.connection();
    let mut worst = 0.0f64;
    for i in 1..n {
        let w = conn.upper_entry(0, i);
        for k in 0..n {
            let (a, b) = (w.coeff(k).values(), fd.omega()[i].coeff(k).values());
            for p in 0..chart.len() {
                worst = worst.max((a[p] + b[p]).abs());
            }
        }
    }
    for (i, j) in pairs(n).filter(|(i, _)| *i >= 1) {
        for c in conn.upper_entry(i, j).coeffs() {
            worst = worst.max(c.max_abs());
        }
    }
    worst
}

/// Frame vectors `e_j` in coordinate components, dual to the coframe.
#[derive(Debug, Clone)]
pub struct FrameVectors {
    chart: GridChart,
    n: usize,
    /// Per node, `n×n` row-major with `[a][j]` the `∂/∂x_a` component of `e_j`.
    comps: Vec<f64>,
}

impl FrameVectors {
    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn component(&self, node: usize, axis: usize, j: usize) -> f64 {
        self.comps[node * self.n * self.n + axis * self.n + j]
    }
}

/// Inverts the coframe matrix at every node so that `ω_i(e_j) = δ_ij`.
pub fn frame_vector_fields(fd: &FrameData, threshold: f64) -> Result<FrameVectors> {
    let n = fd.dim();
    let chart = fd.chart();
    let mask = fd.nondegenerate_mask(threshold);
    let bad: Vec<usize> = (0..chart.len()).filter(|p| !mask[*p]).collect();
    if let Some(&first) = bad.first() {
        return Err(Error::Degenerate {
            count: bad.len(),
            first,
        });
    }
    let mut comps = Vec::with_capacity(chart.len() * n * n);
    for p in 0..chart.len() {
        let inv = fd
            .coframe_matrix(p)
            .try_inverse()
            .ok_or(Error::Degenerate { count: 1, first: p })?;
        for a in 0..n {
            for j in 0..n {
                comps.push(inv[(a, j)]);
            }
        }
    }
    Ok(FrameVectors {
        chart: chart.clone(),
        n,
        comps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `ds² = dx² + e^{−2x} dy²` in its special frame.
    pub(crate) fn hyperbolic_frame(chart: &GridChart) -> FrameData {
        let w1 = OneFormField::coordinate(chart, 0);
        let w2 = OneFormField::from_fn(chart, |x| vec![0.0, (-x[0]).exp()]).unwrap();
        let w12 = OneFormField::from_fn(chart, |x| vec![0.0, -(-x[0]).exp()]).unwrap();
        FrameData::new(
            vec![w1, w2],
            ConnectionField::new(chart, vec![w12]).unwrap(),
        )
        .unwrap()
    }

    fn flat_frame(chart: &GridChart) -> FrameData {
        FrameData::new(
            vec![
                OneFormField::coordinate(chart, 0),
                OneFormField::coordinate(chart, 1),
            ],
            ConnectionField::zero(chart),
        )
        .unwrap()
    }

    fn chart(m: usize) -> GridChart {
        GridChart::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[m, m]).unwrap()
    }

    #[test]
    fn hyperbolic_frame_has_curvature_minus_one() {
        let e = |m| structure_residuals(&hyperbolic_frame(&chart(m)), -1.0).max();
        let (a, b) = (e(21), e(41));
        let h = 2.0 / 40.0;
        assert!(b < 2.0 * h * h, "{b}");
        assert!(a / b > 3.5);
        assert!(special_frame_residual(&hyperbolic_frame(&chart(9))) <= 1e-12);
    }

    #[test]
    fn flat_frame_fails_curvature() {
        let r = structure_residuals(&flat_frame(&chart(11)), -1.0);
        assert_eq!(r.res1.max, 0.0);
        assert!((r.res2.max - 1.0).abs() < 1e-14);
        assert!(structure_gate(&flat_frame(&chart(41)), 10.0, 1e-8).is_err());
    }

    #[test]
    fn cosh_frame_is_not_special() {
        let c = chart(11);
        let w1 = OneFormField::coordinate(&c, 0);
        let w2 = OneFormField::from_fn(&c, |x| vec![0.0, x[0].cosh()]).unwrap();
        let w12 = OneFormField::from_fn(&c, |x| vec![0.0, x[0].sinh()]).unwrap();
        let fd =
            FrameData::new(vec![w1, w2], ConnectionField::new(&c, vec![w12]).unwrap()).unwrap();
        let expect = (1.0f64.sinh() + 1.0f64.cosh()).abs();
        assert!((special_frame_residual(&fd) - expect).abs() < 1e-12);
        // ⟨de_1, e_2⟩ convention: dω_2 = ω_1∧ω_12 holds with ω_12 = sinh x dy
        let r = structure_residuals(&fd, -1.0);
        assert!(r.max() < 0.05);
    }

    #[test]
    fn identity_rotation_is_a_no_op() {
        let c = chart(9);
        let fd = hyperbolic_frame(&c);
        let out = frame_change(&fd, &FrameRotationField::identity(&c), 1e-12).unwrap();
        assert_eq!(out, fd);
    }

    #[test]
    fn constant_rotation_conjugates() {
        let c = chart(9);
        let fd = hyperbolic_frame(&c);
        let a: f64 = 0.7;
        let rot = FrameRotationField::constant(&c, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
        let out = frame_change(&fd, &rot, 1e-12).unwrap();
        // in 2D, L W Lᵗ = W for any rotation
        for p in 0..c.len() {
            for k in 0..2 {
                let got = out.connection().coeff(0, 1, k, p);
                let want = fd.connection().coeff(0, 1, k, p);
                assert!((got - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn angle_rotation_shifts_connection_by_dphi() {
        let c = chart(17);
        let fd = hyperbolic_frame(&c);
        let phi = ScalarField::from_fn(&c, |x| x[0] * x[1] + 0.5 * x[1] * x[1]).unwrap();
        let out = frame_change(&fd, &FrameRotationField::from_angle(&phi).unwrap(), 1e-12).unwrap();
        let dphi = crate::forms::d_scalar(&phi);
        let h = c.max_spacing();
        for p in c.interior_nodes() {
            for k in 0..2 {
                // dL is a difference of cos φ and sin φ, so agreement is O(h²)
                let want = fd.connection().coeff(0, 1, k, p) - dphi.coeff(k).at(p);
                assert!((out.connection().coeff(0, 1, k, p) - want).abs() < 2.0 * h * h);
            }
            let (s, co) = phi.at(p).sin_cos();
            for k in 0..2 {
                let want = co * fd.omega()[0].coeff(k).at(p) - s * fd.omega()[1].coeff(k).at(p);
                assert!((out.omega()[0].coeff(k).at(p) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_preserves_structure() {
        let c = chart(33);
        let fd = hyperbolic_frame(&c);
        let phi = ScalarField::from_fn(&c, |x| (x[0] + 2.0 * x[1]).sin()).unwrap();
        let out = frame_change(&fd, &FrameRotationField::from_angle(&phi).unwrap(), 1e-12).unwrap();
        let r = structure_residuals(&out, -1.0);
        let h = 2.0 / 32.0;
        assert!(r.max() < 20.0 * h * h, "{r:?}");
    }

    #[test]
    fn non_orthogonal_rotation_rejected() {
        let c = chart(5);
        let rot = FrameRotationField::constant(&c, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(
            frame_change(&hyperbolic_frame(&c), &rot, 1e-10),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn vector_fields_invert_coframe() {
        let c = chart(5);
        let v = frame_vector_fields(&hyperbolic_frame(&c), 1e-8).unwrap();
        for p in 0..c.len() {
            assert_eq!(v.component(p, 0, 0), 1.0);
            assert!((v.component(p, 1, 1) - c.coord(p, 0).exp()).abs() < 1e-14);
            assert_eq!(v.component(p, 0, 1), 0.0);
        }
        let degenerate = FrameData::new(
            vec![OneFormField::coordinate(&c, 0), OneFormField::zero(&c)],
            ConnectionField::zero(&c),
        )
        .unwrap();
        assert!(matches!(
            frame_vector_fields(&degenerate, 1e-8),
            Err(Error::Degenerate { .. })
        ));
    }
}
