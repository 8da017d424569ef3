//! Rectangular sample grids and scalar fields on them.
//!
//! Nodes are stored row-major with the last axis varying fastest. Axis 0 is
//! the first coordinate `x_1`.

use crate::error::{Error, Result};

/// A rectangular grid in `n` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridChart {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    counts: Vec<usize>,
    axis_names: Vec<String>,
    strides: Vec<usize>,
}

impl GridChart {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let n = counts.len();
        let names = (1..=n).map(|k| format!("x{k}")).collect();
        Self::with_names(origin, spacing, counts, names)
    }

    pub fn with_names(
        origin: Vec<f64>,
        spacing: Vec<f64>,
        counts: Vec<usize>,
        axis_names: Vec<String>,
    ) -> Result<Self> {
        let n = counts.len();
        if n < 2 {
            return Err(Error::InvalidChart(format!("dimension {n} < 2")));
        }
        if origin.len() != n || spacing.len() != n || axis_names.len() != n {
            return Err(Error::InvalidChart(
                "origin, spacing, counts and axis names must all have length n".into(),
            ));
        }
        if let Some(h) = spacing.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::InvalidChart(format!(
                "spacing {h} is not strictly positive"
            )));
        }
        if origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidChart("origin must be finite".into()));
        }
        if let Some(c) = counts.iter().find(|c| **c < 3) {
            return Err(Error::InvalidChart(format!("axis count {c} < 3")));
        }
        let mut strides = vec![1; n];
        for k in (0..n - 1).rev() {
            strides[k] = strides[k + 1] * counts[k + 1];
        }
        Ok(Self {
            origin,
            spacing,
            counts,
            axis_names,
            strides,
        })
    }

    /// Chart covering `[lower_k, upper_k]` with `counts_k` samples on each axis.
    pub fn from_bounds(lower: &[f64], upper: &[f64], counts: &[usize]) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != counts.len() {
            return Err(Error::InvalidChart(
                "bounds and counts lengths differ".into(),
            ));
        }
        let spacing = lower
            .iter()
            .zip(upper)
            .zip(counts)
            .map(|((a, b), c)| (b - a) / (c.max(&2) - 1) as f64)
            .collect();
        Self::new(lower.to_vec(), spacing, counts.to_vec())
    }

    pub fn with_axis_names(mut self, names: &[&str]) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::InvalidChart(
                "axis name count differs from dimension".into(),
            ));
        }
        self.axis_names = names.iter().map(|s| s.to_string()).collect();
        Ok(self)
    }

    /// Same domain with `factor` times as many intervals per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidChart("refinement factor must be >= 1".into()));
        }
        let counts = self.counts.iter().map(|c| (c - 1) * factor + 1).collect();
        let spacing = self.spacing.iter().map(|h| h / factor as f64).collect();
        Self::with_names(
            self.origin.clone(),
            spacing,
            counts,
            self.axis_names.clone(),
        )
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn axis_names(&self) -> &[String] {
        &self.axis_names
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Index of a node along `axis`.
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.counts[axis]
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        (0..self.dim()).map(|k| self.axis_index(node, k)).collect()
    }

    pub fn node(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dim() || index.iter().zip(&self.counts).any(|(i, c)| i >= c) {
            return Err(Error::NodeOutOfRange(index.to_vec()));
        }
        Ok(index.iter().zip(&self.strides).map(|(i, s)| i * s).sum())
    }

    /// Node at the middle of every axis.
    pub fn center(&self) -> Vec<usize> {
        self.counts.iter().map(|c| c / 2).collect()
    }

    pub fn coord(&self, node: usize, axis: usize) -> f64 {
        self.origin[axis] + self.axis_index(node, axis) as f64 * self.spacing[axis]
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        (0..self.dim()).map(|k| self.coord(node, k)).collect()
    }

    /// Neighbour one step along `axis`, if inside the chart.
    pub fn step(&self, node: usize, axis: usize, forward: bool) -> Option<usize> {
        let i = self.axis_index(node, axis);
        if forward {
            (i + 1 < self.counts[axis]).then(|| node + self.strides[axis])
        } else {
            (i > 0).then(|| node - self.strides[axis])
        }
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.is_interior_by(node, 1)
    }

    /// True when the node is at least `margin` samples away from every face.
    pub fn is_interior_by(&self, node: usize, margin: usize) -> bool {
        (0..self.dim()).all(|k| {
            let i = self.axis_index(node, k);
            i >= margin && i + margin < self.counts[k]
        })
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&p| self.is_interior(p))
    }

    pub fn check_same(&self, other: &GridChart) -> Result<()> {
        if self.counts != other.counts
            || self.origin != other.origin
            || self.spacing != other.spacing
        {
            return Err(Error::ChartMismatch(format!(
                "counts {:?} vs {:?}",
                self.counts, other.counts
            )));
        }
        Ok(())
    }
}

/// One real sample per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    chart: GridChart,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(chart: GridChart, values: Vec<f64>) -> Result<Self> {
        if values.len() != chart.len() {
            return Err(Error::LengthMismatch {
                expected: chart.len(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "scalar field",
                node,
            });
        }
        Ok(Self { chart, values })
    }

    /// Used internally where finiteness is guaranteed by construction.
    pub(crate) fn from_parts(chart: GridChart, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), chart.len());
        Self { chart, values }
    }

    pub fn zeros(chart: &GridChart) -> Self {
        Self::constant(chart, 0.0)
    }

    pub fn constant(chart: &GridChart, value: f64) -> Self {
        Self {
            chart: chart.clone(),
            values: vec![value; chart.len()],
        }
    }

    /// Samples `f` at every node's coordinates.
    pub fn from_fn(chart: &GridChart, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..chart.len()).map(|p| f(&chart.coords(p))).collect();
        Self::new(chart.clone(), values)
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(
            self.chart.clone(),
            self.values.iter().map(|v| f(*v)).collect(),
        )
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self::from_parts(self.chart.clone(), values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value half a step from `node` along `axis`, by four-point Lagrange
    /// interpolation (three-point when the axis only has three samples).
    pub fn midpoint(&self, node: usize, axis: usize, forward: bool) -> f64 {
        let chart = &self.chart;
        let m = chart.counts()[axis];
        let i = chart.axis_index(node, axis);
        let target = if forward {
            i as f64 + 0.5
        } else {
            i as f64 - 0.5
        };
        let width = m.min(4);
        let lo_ideal = target.floor() as isize - (width as isize / 2 - 1);
        let lo = lo_ideal.clamp(0, (m - width) as isize) as usize;
        let stride = chart.stride(axis);
        let line_start = node - i * stride;
        let mut acc = 0.0;
        for a in 0..width {
            let xa = (lo + a) as f64;
            let mut w = 1.0;
            for b in 0..width {
                if a != b {
                    let xb = (lo + b) as f64;
                    w *= (target - xb) / (xa - xb);
                }
            }
            acc += w * self.values[line_start + (lo + a) * stride];
        }
        acc
    }
}

/// Max and root-mean-square of a residual over a node set.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct Norms {
    pub max: f64,
    pub l2: f64,
}

impl Norms {
    pub(crate) fn accumulate(values: impl Iterator<Item = f64>) -> Self {
        let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
        for v in values {
            max = max.max(v.abs());
            sum += v * v;
            count += 1;
        }
        let l2 = if count > 0 {
            (sum / count as f64).sqrt()
        } else {
            0.0
        };
        Self { max, l2 }
    }

    pub fn combine(self, other: Norms) -> Norms {
        Norms {
            max: self.max.max(other.max),
            l2: self.l2.hypot(other.l2),
        }
    }
}
