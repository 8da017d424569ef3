//! Differential forms on a [`GridChart`] and their finite-difference calculus.
//!
//! Partial derivatives use second-order central differences at interior
//! nodes and second-order one-sided stencils on the faces. Residual norms are
//! taken over interior nodes only.

use crate::error::{Error, Result};
use crate::grid::{GridChart, Norms, ScalarField};
use crate::sweep::{self, LineStep};

/// Position of the pair `(k, l)`, `k < l`, in the lexicographic list of pairs.
pub fn pair_index(n: usize, k: usize, l: usize) -> usize {
    debug_assert!(k < l && l < n);
    k * n - k * (k + 1) / 2 + (l - k - 1)
}

/// All pairs `(k, l)` with `k < l < n`, in storage order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |k| (k + 1..n).map(move |l| (k, l)))
}

/// Finite-difference `∂f/∂x_axis`.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    let chart = f.chart();
    let h = chart.spacing()[axis];
    let m = chart.counts()[axis];
    let s = chart.stride(axis);
    let v = f.values();
    let out = (0..chart.len())
        .map(|p| {
            let i = chart.axis_index(p, axis);
            if i == 0 {
                (-3.0 * v[p] + 4.0 * v[p + s] - v[p + 2 * s]) / (2.0 * h)
            } else if i == m - 1 {
                (3.0 * v[p] - 4.0 * v[p - s] + v[p - 2 * s]) / (2.0 * h)
            } else {
                (v[p + s] - v[p - s]) / (2.0 * h)
            }
        })
        .collect();
    ScalarField::from_parts(chart.clone(), out)
}

/// A 1-form `Σ_k θ_k dx_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    chart: GridChart,
    coeffs: Vec<ScalarField>,
}

impl OneFormField {
    pub fn new(coeffs: Vec<ScalarField>) -> Result<Self> {
        let chart = coeffs
            .first()
            .ok_or_else(|| Error::Dimension("one-form needs coefficients".into()))?
            .chart()
            .clone();
        if coeffs.len() != chart.dim() {
            return Err(Error::Dimension(format!(
                "one-form has {} coefficients on a {}-dimensional chart",
                coeffs.len(),
                chart.dim()
            )));
        }
        for c in &coeffs[1..] {
            chart.check_same(c.chart())?;
        }
        Ok(Self { chart, coeffs })
    }

    pub fn zero(chart: &GridChart) -> Self {
        Self {
            chart: chart.clone(),
            coeffs: (0..chart.dim())
                .map(|_| ScalarField::zeros(chart))
                .collect(),
        }
    }

    /// The coordinate differential `dx_axis`.
    pub fn coordinate(chart: &GridChart, axis: usize) -> Self {
        let mut form = Self::zero(chart);
        form.coeffs[axis] = ScalarField::constant(chart, 1.0);
        form
    }

    pub fn from_fn(chart: &GridChart, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let n = chart.dim();
        let mut cols = vec![Vec::with_capacity(chart.len()); n];
        for p in 0..chart.len() {
            let v = f(&chart.coords(p));
            if v.len() != n {
                return Err(Error::Dimension(
                    "closure returned wrong coefficient count".into(),
                ));
            }
            for (col, x) in cols.iter_mut().zip(v) {
                col.push(x);
            }
        }
        let coeffs = cols
            .into_iter()
            .map(|c| ScalarField::new(chart.clone(), c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn coeff(&self, axis: usize) -> &ScalarField {
        &self.coeffs[axis]
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_coeffs(|c| c.map(|v| s * v))
    }

    /// Pointwise `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &OneFormField, b: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x.zip_with(y, |u, v| a * u + b * v))
            .collect();
        Self {
            chart: self.chart.clone(),
            coeffs,
        }
    }

    /// Pointwise multiplication by a scalar field.
    pub fn times(&self, f: &ScalarField) -> Self {
        self.map_coeffs(|c| c.zip_with(f, |a, b| a * b))
    }

    fn map_coeffs(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }
}

/// A 2-form `Σ_{k<l} c_kl dx_k∧dx_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFormField {
    chart: GridChart,
    coeffs: Vec<ScalarField>,
}

impl TwoFormField {
    pub fn zero(chart: &GridChart) -> Self {
        let n = chart.dim();
        Self {
            chart: chart.clone(),
            coeffs: pairs(n).map(|_| ScalarField::zeros(chart)).collect(),
        }
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    /// Coefficient of `dx_k∧dx_l`; `k < l` required.
    pub fn coeff(&self, k: usize, l: usize) -> &ScalarField {
        &self.coeffs[pair_index(self.chart.dim(), k, l)]
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    /// Pointwise `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &TwoFormField, b: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x.zip_with(y, |u, v| a * u + b * v))
            .collect();
        Self {
            chart: self.chart.clone(),
            coeffs,
        }
    }

    pub(crate) fn add_assign_scaled(&mut self, other: &TwoFormField, b: f64) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            for (u, v) in x.values_mut().iter_mut().zip(y.values()) {
                *u += b * v;
            }
        }
    }

    /// Max and RMS of all coefficients over interior nodes.
    pub fn interior_norms(&self) -> Norms {
        self.masked_norms(|_| true)
    }

    /// Norms over interior nodes for which `keep` holds.
    pub fn masked_norms(&self, keep: impl Fn(usize) -> bool) -> Norms {
        let chart = &self.chart;
        Norms::accumulate(
            chart
                .interior_nodes()
                .filter(|p| keep(*p))
                .flat_map(|p| self.coeffs.iter().map(move |c| c.at(p))),
        )
    }
}

/// Skew-symmetric matrix of 1-forms `ω_ij`; only `i < j` is stored and
/// `ω_ji = −ω_ij`, `ω_ii = 0` are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionField {
    chart: GridChart,
    n: usize,
    upper: Vec<OneFormField>,
}

impl ConnectionField {
    /// `upper` lists `ω_ij` for `i < j` in row-major order.
    pub fn new(chart: &GridChart, upper: Vec<OneFormField>) -> Result<Self> {
        let n = chart.dim();
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::Dimension(format!(
                "connection needs {} upper entries, got {}",
                n * (n - 1) / 2,
                upper.len()
            )));
        }
        for w in &upper {
            chart.check_same(w.chart())?;
        }
        Ok(Self {
            chart: chart.clone(),
            n,
            upper,
        })
    }

    pub fn zero(chart: &GridChart) -> Self {
        let n = chart.dim();
        Self {
            chart: chart.clone(),
            n,
            upper: pairs(n).map(|_| OneFormField::zero(chart)).collect(),
        }
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn upper(&self) -> &[OneFormField] {
        &self.upper
    }

    /// `ω_ij` for `i < j`.
    pub fn upper_entry(&self, i: usize, j: usize) -> &OneFormField {
        &self.upper[pair_index(self.n, i, j)]
    }

    /// `ω_ij` as an owned form, for any `i, j`.
    pub fn entry(&self, i: usize, j: usize) -> OneFormField {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper_entry(i, j).clone(),
            Greater => self.upper_entry(j, i).scaled(-1.0),
            Equal => OneFormField::zero(&self.chart),
        }
    }

    /// Coefficient of `dx_axis` in `ω_ij` at `node`.
    pub fn coeff(&self, i: usize, j: usize, axis: usize, node: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper_entry(i, j).coeff(axis).at(node),
            Greater => -self.upper_entry(j, i).coeff(axis).at(node),
            Equal => 0.0,
        }
    }
}

/// Componentwise exterior derivative of a scalar.
pub fn d_scalar(f: &ScalarField) -> OneFormField {
    let chart = f.chart().clone();
    let coeffs = (0..chart.dim()).map(|k| partial(f, k)).collect();
    OneFormField { chart, coeffs }
}

/// `dθ` with coefficient `∂θ_l/∂x_k − ∂θ_k/∂x_l` on `dx_k∧dx_l`.
pub fn d_oneform(theta: &OneFormField) -> TwoFormField {
    let chart = theta.chart().clone();
    let n = chart.dim();
    let coeffs = pairs(n)
        .map(|(k, l)| {
            let a = partial(theta.coeff(l), k);
            let b = partial(theta.coeff(k), l);
            a.zip_with(&b, |x, y| x - y)
        })
        .collect();
    TwoFormField { chart, coeffs }
}

/// Pointwise `α∧β`.
pub fn wedge(alpha: &OneFormField, beta: &OneFormField) -> TwoFormField {
    let chart = alpha.chart().clone();
    let n = chart.dim();
    let coeffs = pairs(n)
        .map(|(k, l)| {
            let (ak, al) = (alpha.coeff(k).values(), alpha.coeff(l).values());
            let (bk, bl) = (beta.coeff(k).values(), beta.coeff(l).values());
            let v = (0..chart.len())
                .map(|p| ak[p] * bl[p] - al[p] * bk[p])
                .collect();
            ScalarField::from_parts(chart.clone(), v)
        })
        .collect();
    TwoFormField { chart, coeffs }
}

/// Max-norm of `dθ` over interior nodes.
pub fn closedness_residual(theta: &OneFormField) -> f64 {
    closedness_norms(theta).max
}

pub fn closedness_norms(theta: &OneFormField) -> Norms {
    d_oneform(theta).interior_norms()
}

/// A potential `G` with `dG ≈ θ`.
#[derive(Debug, Clone)]
pub struct Potential {
    pub g: ScalarField,
    /// Max discrepancy between the natural-order and reversed-order paths.
    pub path_residual: f64,
}

impl Potential {
    /// `r = c·exp(−G)`.
    pub fn scaling(&self, c: f64) -> ScalarField {
        self.g.map(|g| c * (-g).exp())
    }
}

struct Trapezoid<'a>(&'a OneFormField);

impl LineStep for Trapezoid<'_> {
    type State = f64;

    fn step(&self, node: usize, axis: usize, forward: bool, g: &f64) -> Result<f64> {
        let chart = self.0.chart();
        let q = chart
            .step(node, axis, forward)
            .expect("sweep stays in chart");
        let h = if forward {
            chart.spacing()[axis]
        } else {
            -chart.spacing()[axis]
        };
        let c = self.0.coeff(axis);
        Ok(g + 0.5 * h * (c.at(node) + c.at(q)))
    }
}

/// Line-integrates `θ` from `base` along axis-ordered staircase paths.
///
/// Fails with [`Error::NotClosed`] when the reversed-order integration differs
/// from the natural-order one by more than `tolerance`.
pub fn potential(theta: &OneFormField, base: &[usize], tolerance: f64) -> Result<Potential> {
    let chart = theta.chart();
    let n = chart.dim();
    let forward = sweep::sweep(
        chart,
        base,
        &sweep::natural_order(n),
        0.0,
        &Trapezoid(theta),
    )?;
    let reverse = sweep::sweep(
        chart,
        base,
        &sweep::reversed_order(n),
        0.0,
        &Trapezoid(theta),
    )?;
    let path_residual = forward
        .iter()
        .zip(&reverse)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if !(path_residual <= tolerance) {
        return Err(Error::NotClosed {
            residual: path_residual,
            tolerance,
        });
    }
    Ok(Potential {
        g: ScalarField::from_parts(chart.clone(), forward),
        path_residual,
    })
}
