//! Truncated power series in the spectral parameter `η` and the hierarchy of
//! closed forms they generate.
//!
//! When the frame coefficients `f_ij` depend polynomially on `η`, so does the
//! angle `φ = Σ φ_j η^j`. Collecting powers of `η` in
//! `dφ = (f_31 + f_11 sin φ + f_21 cos φ) dx + (f_32 + f_12 sin φ + f_22 cos φ) dt`
//! gives a triangular family of systems, and collecting powers in
//! `θ = (f_11 cos φ − f_21 sin φ) dx + (f_12 cos φ − f_22 sin φ) dt` gives one
//! closed form per order.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::forms::ConnectionField;
use crate::forms::{closedness_residual, d_oneform, wedge, OneFormField, TwoFormField};
use crate::frames::{FrameData, StructureResiduals, DEFAULT_NONDEGENERACY};
use crate::grid::{GridChart, Norms, ScalarField};
use crate::sweep::{self, LineStep};

/// Largest order accepted unless a caller raises it explicitly.
pub const DEFAULT_MAX_ORDER: usize = 6;

/// `Σ_{j ≤ K} c_j η^j`; arithmetic drops every power above `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSeries {
    coeffs: Vec<f64>,
}

impl EtaSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a series has at least the constant term"
        );
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order + 1],
        }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// The series `η` itself (zero when `order = 0`).
    pub fn eta(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    /// Pads or truncates a polynomial given by its coefficients.
    pub fn from_poly(poly: &[f64], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (c, p) in s.coeffs.iter_mut().zip(poly) {
            *c = *p;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs[j]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
        }
    }

    /// Horner evaluation at a numeric `η`.
    pub fn eval(&self, eta: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * eta + c)
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.order(), other.order(), "series orders differ");
    }

    /// `sin φ` and `cos φ` through `sin(φ_0 + ψ)`, `cos(φ_0 + ψ)` with the
    /// Taylor series of `sin ψ`, `cos ψ`; `ψ` has no constant term so the
    /// sums stop at `K`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let k = self.order();
        let (s0, c0) = self.coeffs[0].sin_cos();
        let mut psi = self.clone();
        psi.coeffs[0] = 0.0;
        let mut sin_psi = Self::zero(k);
        let mut cos_psi = Self::constant(1.0, k);
        let mut power = Self::constant(1.0, k);
        let mut factorial = 1.0;
        for m in 1..=k {
            power = &power * &psi;
            factorial *= m as f64;
            let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let target = if m % 2 == 1 {
                &mut sin_psi
            } else {
                &mut cos_psi
            };
            for (t, p) in target.coeffs.iter_mut().zip(&power.coeffs) {
                *t += sign * p / factorial;
            }
        }
        let sin = &cos_psi.scale(s0) + &sin_psi.scale(c0);
        let cos = &cos_psi.scale(c0) - &sin_psi.scale(s0);
        (sin, cos)
    }
}

impl Add for &EtaSeries {
    type Output = EtaSeries;
    fn add(self, rhs: &EtaSeries) -> EtaSeries {
        self.check(rhs);
        EtaSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &EtaSeries {
    type Output = EtaSeries;
    fn sub(self, rhs: &EtaSeries) -> EtaSeries {
        self.check(rhs);
        EtaSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Cauchy product truncated at the common order.
impl Mul for &EtaSeries {
    type Output = EtaSeries;
    fn mul(self, rhs: &EtaSeries) -> EtaSeries {
        self.check(rhs);
        let k = self.order();
        let mut out = EtaSeries::zero(k);
        for i in 0..=k {
            for j in 0..=k - i {
                out.coeffs[i + j] += self.coeffs[i] * rhs.coeffs[j];
            }
        }
        out
    }
}

/// Coefficients `f_ij` at one point: `f[row][axis]` with rows `ω_1, ω_2,
/// ω_12` and axes `x, t`.
pub type PointCoefficients = [[EtaSeries; 2]; 3];

/// Right sides of `φ_x` and `φ_t` as series.
pub fn phi_rhs(f: &PointCoefficients, phi: &EtaSeries) -> [EtaSeries; 2] {
    let (s, c) = phi.sin_cos();
    [0, 1].map(|k| &(&f[2][k] + &(&f[0][k] * &s)) + &(&f[1][k] * &c))
}

/// The `dx` and `dt` coefficients of `θ = Σ_k (f_1k cos φ − f_2k sin φ) dx_k`.
pub fn closed_form_coeffs(f: &PointCoefficients, phi: &EtaSeries) -> [EtaSeries; 2] {
    let (s, c) = phi.sin_cos();
    [0, 1].map(|k| &(&f[0][k] * &c) - &(&f[1][k] * &s))
}

/// A series whose coefficients are scalar fields on one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSeriesField {
    chart: GridChart,
    coeffs: Vec<ScalarField>,
}

impl EtaSeriesField {
    pub fn new(coeffs: Vec<ScalarField>) -> Result<Self> {
        let chart = coeffs
            .first()
            .ok_or_else(|| {
                Error::OrderMismatch("a series field needs at least one coefficient".into())
            })?
            .chart()
            .clone();
        for c in &coeffs {
            chart.check_same(c.chart())?;
        }
        Ok(Self { chart, coeffs })
    }

    /// Builds the field from a pointwise series-valued function.
    pub fn from_fn(
        chart: &GridChart,
        order: usize,
        f: impl Fn(&[f64]) -> EtaSeries,
    ) -> Result<Self> {
        let mut cols = vec![Vec::with_capacity(chart.len()); order + 1];
        for p in 0..chart.len() {
            let s = f(&chart.coords(p));
            if s.order() != order {
                return Err(Error::OrderMismatch(format!(
                    "expected order {order}, got {}",
                    s.order()
                )));
            }
            for (col, c) in cols.iter_mut().zip(s.coeffs) {
                col.push(c);
            }
        }
        Self::new(
            cols.into_iter()
                .map(|v| ScalarField::new(chart.clone(), v))
                .collect::<Result<_>>()?,
        )
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> &ScalarField {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    pub fn at(&self, node: usize) -> EtaSeries {
        EtaSeries::new(self.coeffs.iter().map(|c| c.at(node)).collect())
    }

    fn midpoint(&self, node: usize, axis: usize, forward: bool) -> EtaSeries {
        EtaSeries::new(
            self.coeffs
                .iter()
                .map(|c| c.midpoint(node, axis, forward))
                .collect(),
        )
    }

    /// Pointwise value at a numeric `η`.
    pub fn eval(&self, eta: f64) -> ScalarField {
        let v = (0..self.chart.len())
            .map(|p| self.at(p).eval(eta))
            .collect();
        ScalarField::from_parts(self.chart.clone(), v)
    }

    /// Drops orders above `order`.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        if order > self.order() {
            return Err(Error::OrderMismatch(format!(
                "cannot raise order {} to {order}",
                self.order()
            )));
        }
        Ok(Self {
            chart: self.chart.clone(),
            coeffs: self.coeffs[..=order].to_vec(),
        })
    }
}

/// Frame data of a two-dimensional model with `η`-dependent coefficients:
/// `ω_1 = f_11 dx + f_12 dt`, `ω_2 = f_21 dx + f_22 dt`,
/// `ω_12 = f_31 dx + f_32 dt`.
#[derive(Debug, Clone)]
pub struct SeriesFrame {
    f: [[EtaSeriesField; 2]; 3],
}

impl SeriesFrame {
    pub fn new(f: [[EtaSeriesField; 2]; 3]) -> Result<Self> {
        let chart = f[0][0].chart();
        if chart.dim() != 2 {
            return Err(Error::Dimension(format!(
                "series frames live on 2D charts, got {}",
                chart.dim()
            )));
        }
        let order = f[0][0].order();
        for g in f.iter().flatten() {
            chart.check_same(g.chart())?;
            if g.order() != order {
                return Err(Error::OrderMismatch(format!(
                    "coefficient orders {order} and {}",
                    g.order()
                )));
            }
        }
        Ok(Self { f })
    }

    pub fn chart(&self) -> &GridChart {
        self.f[0][0].chart()
    }

    pub fn order(&self) -> usize {
        self.f[0][0].order()
    }

    pub fn entry(&self, row: usize, axis: usize) -> &EtaSeriesField {
        &self.f[row][axis]
    }

    pub fn truncated(&self, order: usize) -> Result<Self> {
        let mut out = Vec::with_capacity(6);
        for g in self.f.iter().flatten() {
            out.push(g.truncated(order)?);
        }
        let mut it = out.into_iter();
        let mut row = || [it.next().unwrap(), it.next().unwrap()];
        Self::new([row(), row(), row()])
    }

    pub fn at(&self, node: usize) -> PointCoefficients {
        self.f
            .each_ref()
            .map(|row| row.each_ref().map(|g| g.at(node)))
    }

    fn midpoint(&self, node: usize, axis: usize, forward: bool) -> PointCoefficients {
        self.f
            .each_ref()
            .map(|row| row.each_ref().map(|g| g.midpoint(node, axis, forward)))
    }

    /// Ordinary frame data at a numeric `η`.
    pub fn eval(&self, eta: f64) -> Result<FrameData> {
        let form = |row: usize| {
            OneFormField::new(vec![self.f[row][0].eval(eta), self.f[row][1].eval(eta)])
        };
        FrameData::new(
            vec![form(0)?, form(1)?],
            ConnectionField::new(self.chart(), vec![form(2)?])?,
        )
    }

    /// The `η^j` coefficient of row `row` as a 1-form.
    fn order_form(&self, row: usize, j: usize) -> OneFormField {
        OneFormField::new(vec![
            self.f[row][0].coeff(j).clone(),
            self.f[row][1].coeff(j).clone(),
        ])
        .expect("coefficients share the chart")
    }

    fn magnitude(&self) -> f64 {
        self.f
            .iter()
            .flatten()
            .flat_map(|g| g.coeffs())
            .fold(0.0, |m, c| m.max(c.max_abs()))
    }
}

/// Structure residuals of every `η^j` coefficient with curvature −1.
pub fn series_structure_residuals(frame: &SeriesFrame) -> Vec<StructureResiduals> {
    let k = frame.order();
    let mask = frame
        .eval(0.0)
        .map(|fd| fd.nondegenerate_mask(DEFAULT_NONDEGENERACY))
        .ok();
    let keep = |p: usize| mask.as_ref().is_none_or(|m| m[p]);
    let masked_nodes = frame.chart().interior_nodes().filter(|p| !keep(*p)).count();
    let forms: Vec<[OneFormField; 3]> = (0..=k)
        .map(|j| [0, 1, 2].map(|r| frame.order_form(r, j)))
        .collect();
    (0..=k)
        .map(|j| {
            // dω_1 + ω_2∧ω_12, dω_2 − ω_1∧ω_12, dω_12 − ω_1∧ω_2
            let mut r: [TwoFormField; 3] = [0, 1, 2].map(|row| d_oneform(&forms[j][row]));
            for p in 0..=j {
                let q = j - p;
                r[0].add_assign_scaled(&wedge(&forms[p][1], &forms[q][2]), 1.0);
                r[1].add_assign_scaled(&wedge(&forms[p][0], &forms[q][2]), -1.0);
                r[2].add_assign_scaled(&wedge(&forms[p][0], &forms[q][1]), -1.0);
            }
            StructureResiduals {
                res1: r[0].masked_norms(keep).combine(r[1].masked_norms(keep)),
                res2: r[2].masked_norms(keep),
                masked_nodes,
            }
        })
        .collect()
}

/// Per-order structure gate with the same limit as the plain solver.
pub fn series_structure_gate(frame: &SeriesFrame, factor: f64) -> Result<Vec<StructureResiduals>> {
    let res = series_structure_residuals(frame);
    let h = frame.chart().max_spacing();
    let limit = factor * h * h * frame.magnitude().max(1.0);
    for r in &res {
        if !(r.res1.max <= limit && r.res2.max <= limit) {
            return Err(Error::StructureGate {
                res1: r.res1.max,
                res2: r.res2.max,
                limit,
            });
        }
    }
    Ok(res)
}

/// The `η^j` coefficients of the `φ_x`, `φ_t` right sides, evaluated with
/// the given `φ` series field, for `j = 0..=K`.
pub fn expand_phi_system(
    frame: &SeriesFrame,
    phi: &EtaSeriesField,
) -> Result<Vec<[ScalarField; 2]>> {
    frame.chart().check_same(phi.chart())?;
    if phi.order() > frame.order() {
        return Err(Error::OrderMismatch(format!(
            "φ has order {} but the frame only {}",
            phi.order(),
            frame.order()
        )));
    }
    let k = phi.order();
    let frame = frame.truncated(k)?;
    let chart = frame.chart();
    let mut cols = vec![
        [
            Vec::with_capacity(chart.len()),
            Vec::with_capacity(chart.len())
        ];
        k + 1
    ];
    for p in 0..chart.len() {
        let rhs = phi_rhs(&frame.at(p), &phi.at(p));
        for (j, col) in cols.iter_mut().enumerate() {
            col[0].push(rhs[0].coeff(j));
            col[1].push(rhs[1].coeff(j));
        }
    }
    Ok(cols
        .into_iter()
        .map(|[a, b]| [a, b].map(|v| ScalarField::from_parts(chart.clone(), v)))
        .collect())
}

/// How `φ_j(base)` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum HierarchyInit {
    /// Fixed values `φ_0(base), …, φ_K(base)`.
    Values(Vec<f64>),
    /// Values making every `φ_j` periodic along `axis` (`φ_0` modulo 2π),
    /// assuming the chart covers exactly one period with the end node
    /// repeating the first.
    Periodic { axis: usize },
}

#[derive(Debug, Clone)]
pub struct HierarchyOptions {
    pub max_order: usize,
    /// Structure gate factor; `None` skips the gate.
    pub gate_factor: Option<f64>,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_MAX_ORDER,
            gate_factor: Some(10.0),
        }
    }
}

/// Solved angle series and the closed form of every order.
#[derive(Debug, Clone)]
pub struct HierarchySolution {
    pub phi: EtaSeriesField,
    /// `theta[j]` is the `η^j` coefficient of the closed form.
    pub theta: Vec<OneFormField>,
    pub base: Vec<usize>,
    /// `φ_j(base)` actually used.
    pub initial: Vec<f64>,
    /// Per order, max difference between the two sweep orders.
    pub compat_residual: Vec<f64>,
    pub closed_residual: Vec<f64>,
    pub structure: Option<Vec<StructureResiduals>>,
}

impl HierarchySolution {
    pub fn order(&self) -> usize {
        self.phi.order()
    }

    pub fn summary_lines(&self) -> Vec<String> {
        (0..=self.order())
            .map(|j| {
                format!(
                    "order {j}: phi(base)={:.6e} compat={:.6e} closed={:.6e}",
                    self.initial[j], self.compat_residual[j], self.closed_residual[j]
                )
            })
            .collect()
    }
}

struct SeriesStep<'a>(&'a SeriesFrame);

impl LineStep for SeriesStep<'_> {
    type State = EtaSeries;

    fn step(&self, node: usize, axis: usize, forward: bool, phi: &EtaSeries) -> Result<EtaSeries> {
        let chart = self.0.chart();
        let q = chart
            .step(node, axis, forward)
            .expect("sweep stays in chart");
        let h = if forward {
            chart.spacing()[axis]
        } else {
            -chart.spacing()[axis]
        };
        let at_node = self.0.at(node);
        let at_mid = self.0.midpoint(node, axis, forward);
        let at_next = self.0.at(q);
        let rhs = |f: &PointCoefficients, y: &EtaSeries| phi_rhs(f, y)[axis].clone();
        let k1 = rhs(&at_node, phi);
        let k2 = rhs(&at_mid, &(phi + &k1.scale(0.5 * h)));
        let k3 = rhs(&at_mid, &(phi + &k2.scale(0.5 * h)));
        let k4 = rhs(&at_next, &(phi + &k3.scale(h)));
        let incr = &(&(&k1 + &k2.scale(2.0)) + &k3.scale(2.0)) + &k4;
        let next = phi + &incr.scale(h / 6.0);
        if next.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                what: "phi series",
                node: q,
            });
        }
        Ok(next)
    }
}

/// Integrates the whole line along `axis` through `base` starting at its
/// first node, returning the state at every node of the line.
fn integrate_line(
    frame: &SeriesFrame,
    base: &[usize],
    axis: usize,
    start: EtaSeries,
) -> Result<Vec<EtaSeries>> {
    let chart = frame.chart();
    let mut idx = base.to_vec();
    idx[axis] = 0;
    let mut node = chart.node(&idx)?;
    let mut out = vec![start];
    let stepper = SeriesStep(frame);
    while let Some(next) = chart.step(node, axis, true) {
        let s = stepper.step(node, axis, true, out.last().unwrap())?;
        out.push(s);
        node = next;
    }
    Ok(out)
}

/// Finds initial data at the first node of the line that make every order
/// periodic over the line, then reads off the values at `base`.
fn periodic_initial(frame: &SeriesFrame, base: &[usize], axis: usize) -> Result<Vec<f64>> {
    let k = frame.order();
    let two_pi = std::f64::consts::TAU;
    let end_of = |start: &[f64]| -> Result<EtaSeries> {
        Ok(
            integrate_line(frame, base, axis, EtaSeries::from_poly(start, k))?
                .pop()
                .unwrap(),
        )
    };
    // order 0: fixed point of the period map modulo 2π, scanning then bisecting
    let gap = |phi0: f64, wind: f64| -> Result<f64> { Ok(end_of(&[phi0])?.coeff(0) - phi0 - wind) };
    const SCAN: usize = 64;
    let grid: Vec<f64> = (0..=SCAN)
        .map(|i| -std::f64::consts::PI + two_pi * i as f64 / SCAN as f64)
        .collect();
    let raw: Vec<f64> = grid.iter().map(|g| gap(*g, 0.0)).collect::<Result<_>>()?;
    let mut bracket = None;
    'outer: for wind in [0i32, 1, -1, 2, -2] {
        let w = two_pi * wind as f64;
        for i in 0..SCAN {
            let (a, b) = (raw[i] - w, raw[i + 1] - w);
            if a == 0.0 || a * b < 0.0 {
                bracket = Some((grid[i], grid[i + 1], w));
                break 'outer;
            }
        }
    }
    let (mut lo, mut hi, w) = bracket.ok_or_else(|| {
        Error::NoPeriodicSolution(
            "the order-0 period map has no fixed point with winding |k| ≤ 2".into(),
        )
    })?;
    let mut g_lo = gap(lo, w)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let g_mid = gap(mid, w)?;
        if g_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    let mut start = vec![0.5 * (lo + hi)];
    // order j ≥ 1: the period map is affine in φ_j(0)
    for j in 1..=k {
        let mut probe = start.clone();
        probe.push(0.0);
        let e0 = end_of(&probe)?.coeff(j);
        *probe.last_mut().unwrap() = 1.0;
        let slope = end_of(&probe)?.coeff(j) - e0;
        if (1.0 - slope).abs() < 1e-12 {
            return Err(Error::NoPeriodicSolution(format!(
                "order {j} period map has unit slope"
            )));
        }
        start.push(e0 / (1.0 - slope));
    }
    let line = integrate_line(frame, base, axis, EtaSeries::from_poly(&start, k))?;
    Ok(line[base[axis]].coeffs.clone())
}

/// Solves every order of the `φ` hierarchy with one block-triangular RK4
/// sweep and returns the closed form of each order.
pub fn solve_hierarchy(
    frame: &SeriesFrame,
    order: usize,
    init: &HierarchyInit,
    base: &[usize],
    opts: &HierarchyOptions,
) -> Result<HierarchySolution> {
    if order > opts.max_order {
        return Err(Error::OrderMismatch(format!(
            "order {order} exceeds the cap {}",
            opts.max_order
        )));
    }
    if order > frame.order() {
        return Err(Error::OrderMismatch(format!(
            "requested order {order} but the frame is given to order {}",
            frame.order()
        )));
    }
    let frame = frame.truncated(order)?;
    let chart = frame.chart();
    chart.node(base)?;
    let structure = opts
        .gate_factor
        .map(|f| series_structure_gate(&frame, f))
        .transpose()?;
    let initial = match init {
        HierarchyInit::Values(v) => {
            if v.len() != order + 1 {
                return Err(Error::OrderMismatch(format!(
                    "need {} initial values, got {}",
                    order + 1,
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(
                    "initial values must be finite".into(),
                ));
            }
            v.clone()
        }
        HierarchyInit::Periodic { axis } => {
            if *axis >= chart.dim() {
                return Err(Error::InvalidParameter(format!(
                    "periodic axis {axis} outside the chart"
                )));
            }
            periodic_initial(&frame, base, *axis)?
        }
    };
    let start = EtaSeries::new(initial.clone());
    let step = SeriesStep(&frame);
    let natural = sweep::sweep(chart, base, &[0, 1], start.clone(), &step)?;
    let swapped = sweep::sweep(chart, base, &[1, 0], start, &step)?;
    let compat_residual = (0..=order)
        .map(|j| {
            natural
                .iter()
                .zip(&swapped)
                .fold(0.0f64, |m, (a, b)| m.max((a.coeff(j) - b.coeff(j)).abs()))
        })
        .collect();

    let mut theta_cols = vec![
        [
            Vec::with_capacity(chart.len()),
            Vec::with_capacity(chart.len())
        ];
        order + 1
    ];
    for (p, phi) in natural.iter().enumerate() {
        let t = closed_form_coeffs(&frame.at(p), phi);
        for (j, col) in theta_cols.iter_mut().enumerate() {
            col[0].push(t[0].coeff(j));
            col[1].push(t[1].coeff(j));
        }
    }
    let theta: Vec<OneFormField> = theta_cols
        .into_iter()
        .map(|cols| {
            OneFormField::new(
                cols.map(|v| ScalarField::from_parts(chart.clone(), v))
                    .into(),
            )
        })
        .collect::<Result<_>>()?;
    let phi_cols: Vec<ScalarField> = (0..=order)
        .map(|j| {
            ScalarField::from_parts(chart.clone(), natural.iter().map(|s| s.coeff(j)).collect())
        })
        .collect();
    Ok(HierarchySolution {
        phi: EtaSeriesField::new(phi_cols)?,
        closed_residual: theta.iter().map(closedness_residual).collect(),
        theta,
        base: base.to_vec(),
        initial,
        compat_residual,
        structure,
    })
}

/// Norms of the `η^j` structure residuals, for reporting.
pub fn max_structure(res: &[StructureResiduals]) -> Norms {
    res.iter().fold(Norms::default(), |acc, r| {
        acc.combine(r.res1).combine(r.res2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::{solve_phi_2d, SolveOptions};
    use proptest::prelude::*;

    fn series(k: usize) -> impl Strategy<Value = EtaSeries> {
        proptest::collection::vec(-2.0f64..2.0, k + 1).prop_map(EtaSeries::new)
    }

    #[test]
    fn ring_examples() {
        let a = EtaSeries::new(vec![1.0, 1.0, 0.0]);
        let b = EtaSeries::new(vec![1.0, -1.0, 0.0]);
        assert_eq!((&a * &b).coeffs(), &[1.0, 0.0, -1.0]);
        assert_eq!(&a * &EtaSeries::constant(1.0, 2), a);
        let half = EtaSeries::new(vec![0.0, 0.0, 0.5]);
        assert_eq!((&half * &half).coeffs(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn sin_cos_examples() {
        let (s, c) = EtaSeries::constant(std::f64::consts::FRAC_PI_2, 3).sin_cos();
        assert!((s.coeff(0) - 1.0).abs() < 1e-15 && c.coeff(0).abs() < 1e-15);
        assert!(s.coeffs()[1..]
            .iter()
            .chain(&c.coeffs()[1..])
            .all(|x| *x == 0.0));
        let a = 0.7;
        let (s, c) = EtaSeries::new(vec![0.0, a, 0.0]).sin_cos();
        assert_eq!(s.coeffs(), &[0.0, a, 0.0]);
        assert_eq!(c.coeffs(), &[1.0, 0.0, -a * a / 2.0]);
    }

    proptest! {
        #[test]
        fn truncated_ring_laws(a in series(4), b in series(4), c in series(4)) {
            let close = |x: &EtaSeries, y: &EtaSeries| x.coeffs().iter().zip(y.coeffs()).all(|(p, q)| (p - q).abs() < 1e-12);
            prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c))));
            prop_assert!(close(&(&a * &b), &(&b * &a)));
            prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c))));
        }

        #[test]
        fn pythagoras_and_chain_rule(phi in series(5)) {
            let (s, c) = phi.sin_cos();
            let one = &(&s * &s) + &(&c * &c);
            prop_assert!((one.coeff(0) - 1.0).abs() < 1e-13);
            for j in 1..=5 {
                prop_assert!(one.coeff(j).abs() < 1e-11, "order {} = {}", j, one.coeff(j));
            }
            prop_assert!((s.coeff(1) - phi.coeff(0).cos() * phi.coeff(1)).abs() < 1e-14);
        }

        #[test]
        fn sin_cos_matches_evaluation(phi in series(6), eta in -0.05f64..0.05) {
            let (s, c) = phi.sin_cos();
            let x = phi.eval(eta);
            // remainder is O(η^7)
            prop_assert!((s.eval(eta) - x.sin()).abs() < 1e-6);
            prop_assert!((c.eval(eta) - x.cos()).abs() < 1e-6);
        }
    }

    /// `ω_1 = dx`, `ω_2 = e^{-x}(1 + η) dt`, `ω_12 = −e^{-x}(1 + η) dt`: the
    /// hyperbolic metric with `t` rescaled by `1 + η`.
    fn scaled_hyperbolic(chart: &GridChart, k: usize) -> SeriesFrame {
        let f = |g: fn(&[f64]) -> Vec<f64>| {
            EtaSeriesField::from_fn(chart, k, move |x| EtaSeries::from_poly(&g(x), k)).unwrap()
        };
        SeriesFrame::new([
            [f(|_| vec![1.0]), f(|_| vec![0.0])],
            [f(|_| vec![0.0]), f(|x| vec![(-x[0]).exp(), (-x[0]).exp()])],
            [
                f(|_| vec![0.0]),
                f(|x| vec![-(-x[0]).exp(), -(-x[0]).exp()]),
            ],
        ])
        .unwrap()
    }

    /// A non-special frame of the hyperbolic metric, `ω_1 = dx`,
    /// `ω_2 = cosh x dt`, `ω_12 = sinh x dt`, with `t` rescaled by `1 + η`.
    fn scaled_cosh(chart: &GridChart, k: usize) -> SeriesFrame {
        let f = |g: fn(&[f64]) -> Vec<f64>| {
            EtaSeriesField::from_fn(chart, k, move |x| EtaSeries::from_poly(&g(x), k)).unwrap()
        };
        SeriesFrame::new([
            [f(|_| vec![1.0]), f(|_| vec![0.0])],
            [f(|_| vec![0.0]), f(|x| vec![x[0].cosh(), x[0].cosh()])],
            [f(|_| vec![0.0]), f(|x| vec![x[0].sinh(), x[0].sinh()])],
        ])
        .unwrap()
    }

    fn chart() -> GridChart {
        GridChart::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[33, 33]).unwrap()
    }

    #[test]
    fn special_series_frame_gives_zero_hierarchy() {
        let c = chart();
        let sol = solve_hierarchy(
            &scaled_hyperbolic(&c, 3),
            3,
            &HierarchyInit::Values(vec![0.0; 4]),
            &c.center(),
            &Default::default(),
        )
        .unwrap();
        assert!(sol.phi.coeffs().iter().all(|f| f.max_abs() == 0.0));
        assert_eq!(sol.theta[0], OneFormField::coordinate(&c, 0));
        assert!(sol.theta[1..]
            .iter()
            .all(|t| t.coeffs().iter().all(|f| f.max_abs() == 0.0)));
    }

    #[test]
    fn order_zero_equals_plain_solver() {
        let c = chart();
        let frame = scaled_cosh(&c, 2);
        let sol = solve_hierarchy(
            &frame,
            0,
            &HierarchyInit::Values(vec![0.4]),
            &c.center(),
            &Default::default(),
        )
        .unwrap();
        let plain = solve_phi_2d(
            &frame.eval(0.0).unwrap(),
            0.4,
            &c.center(),
            &SolveOptions::default(),
        )
        .unwrap();
        for p in 0..c.len() {
            assert!((sol.phi.coeff(0).at(p) - plain.angle().unwrap().at(p)).abs() < 1e-14);
        }
        for axis in 0..2 {
            for p in 0..c.len() {
                assert!(
                    (sol.theta[0].coeff(axis).at(p) - plain.theta1.coeff(axis).at(p)).abs() < 1e-14
                );
            }
        }
    }

    #[test]
    fn specialisation_to_numeric_eta() {
        let c = chart();
        let k = 3;
        let frame = scaled_cosh(&c, k);
        let sol = solve_hierarchy(
            &frame,
            k,
            &HierarchyInit::Values(vec![0.4, 0.0, 0.0, 0.0]),
            &c.center(),
            &Default::default(),
        )
        .unwrap();
        let err = |eta: f64| {
            let plain = solve_phi_2d(
                &frame.eval(eta).unwrap(),
                0.4,
                &c.center(),
                &SolveOptions::default(),
            )
            .unwrap();
            let approx = sol.phi.eval(eta);
            (0..c.len())
                .map(|p| (approx.at(p) - plain.angle().unwrap().at(p)).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.04), err(0.02));
        assert!(e1 < 1e-4, "{e1}");
        // remainder O(η^4)
        assert!(e1 / e2 > 12.0, "{}", e1 / e2);
    }

    #[test]
    fn expansion_matches_solution_derivatives() {
        let c = chart();
        let frame = scaled_cosh(&c, 2);
        let sol = solve_hierarchy(
            &frame,
            2,
            &HierarchyInit::Values(vec![0.4, 0.1, -0.2]),
            &c.center(),
            &Default::default(),
        )
        .unwrap();
        let rhs = expand_phi_system(&frame, &sol.phi).unwrap();
        let h = c.max_spacing();
        for j in 0..=2 {
            let grad = crate::forms::d_scalar(sol.phi.coeff(j));
            for axis in 0..2 {
                let diff = c
                    .interior_nodes()
                    .map(|p| (grad.coeff(axis).at(p) - rhs[j][axis].at(p)).abs())
                    .fold(0.0, f64::max);
                assert!(diff < 10.0 * h * h, "order {j} axis {axis}: {diff}");
            }
            assert!(
                sol.closed_residual[j] < 40.0 * h * h,
                "order {j}: {:?} h²={}",
                sol.closed_residual,
                h * h
            );
            assert!(
                sol.compat_residual[j] < 1e-4,
                "order {j}: {:?}",
                sol.compat_residual
            );
        }
    }

    #[test]
    fn order_cap_and_mismatch() {
        let c = chart();
        let frame = scaled_cosh(&c, 2);
        let opts = HierarchyOptions {
            max_order: 1,
            ..Default::default()
        };
        assert!(matches!(
            solve_hierarchy(
                &frame,
                2,
                &HierarchyInit::Values(vec![0.0; 3]),
                &c.center(),
                &opts
            ),
            Err(Error::OrderMismatch(_))
        ));
        assert!(matches!(
            solve_hierarchy(
                &frame,
                3,
                &HierarchyInit::Values(vec![0.0; 4]),
                &c.center(),
                &Default::default()
            ),
            Err(Error::OrderMismatch(_))
        ));
        assert!(solve_hierarchy(
            &frame,
            1,
            &HierarchyInit::Values(vec![0.0]),
            &c.center(),
            &Default::default()
        )
        .is_err());
    }
}
