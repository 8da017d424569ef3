//! Conservation laws from closed 1-forms.
//!
//! Writing `θ = f_t dt + Σ_j f_j dx_j` with one axis designated as time,
//! `dθ = 0` contains `∂f_j/∂t = ∂f_t/∂x_j`, so
//! `d/dt ∫ f_j dx_j = f_t|_{end} − f_t|_{start}` and `Q_j(t) = ∫ f_j dx_j` is
//! conserved whenever `f_t` is periodic or decays along `x_j`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{partial, OneFormField};
use crate::grid::{GridChart, Norms};

/// Slice integrals along one spatial axis at fixed transverse coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct SliceSeries {
    /// Indices of the slice on the axes other than time and the
    /// integration axis, in axis order.
    pub transverse: Vec<usize>,
    /// Composite trapezoid value per time sample.
    pub q: Vec<f64>,
    /// Richardson value `(4 Q_h − Q_2h)/3` when the node count allows it.
    pub q_richardson: Option<Vec<f64>>,
    /// `max_t |Q(t) − Q(t_0)|`.
    pub drift: f64,
    /// Drift over `max_t ∫ |f_j| dx_j`, which stays meaningful when `Q`
    /// itself is close to zero.
    pub relative_drift: f64,
}

/// Everything known about the conserved quantity along one spatial axis.
#[derive(Debug, Clone, Serialize)]
pub struct QuantityReport {
    pub axis: usize,
    pub slices: Vec<SliceSeries>,
    /// Max drift over slices.
    pub drift: f64,
    pub relative_drift: f64,
    /// `∂f_t/∂x_j − ∂f_j/∂t` over interior nodes.
    pub flux_residual: Norms,
    /// Max of `|f_t(end) − f_t(start)|` along the axis; the drift can only
    /// be small when this is.
    pub boundary_jump: f64,
    /// Max of `|f_t|` on the two faces normal to the axis.
    pub boundary_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub time_axis: usize,
    pub times: Vec<f64>,
    pub quantities: Vec<QuantityReport>,
    /// `∂f_j/∂x_i − ∂f_i/∂x_j` for spatial `i < j`.
    pub cross_residuals: Vec<((usize, usize), Norms)>,
    pub quadrature: &'static str,
}

impl ConservationReport {
    pub fn max_flux_residual(&self) -> f64 {
        self.quantities
            .iter()
            .fold(0.0, |m, q| m.max(q.flux_residual.max))
    }

    pub fn max_relative_drift(&self) -> f64 {
        self.quantities
            .iter()
            .fold(0.0, |m, q| m.max(q.relative_drift))
    }

    pub fn quantity(&self, axis: usize) -> Option<&QuantityReport> {
        self.quantities.iter().find(|q| q.axis == axis)
    }
}

fn trapezoid(values: impl ExactSizeIterator<Item = f64>, h: f64) -> f64 {
    let n = values.len();
    values
        .enumerate()
        .map(|(i, v)| if i == 0 || i + 1 == n { 0.5 * v } else { v })
        .sum::<f64>()
        * h
}

/// Builds the report for a closed form `theta`.
pub fn analyze(theta: &OneFormField, time_axis: usize) -> Result<ConservationReport> {
    let chart = theta.chart();
    let n = chart.dim();
    if time_axis >= n {
        return Err(Error::InvalidParameter(format!(
            "time axis {time_axis} outside a {n}-dimensional chart"
        )));
    }
    let spatial: Vec<usize> = (0..n).filter(|a| *a != time_axis).collect();
    let ft = theta.coeff(time_axis);
    let nt = chart.counts()[time_axis];
    let times: Vec<f64> = (0..nt)
        .map(|k| chart.origin()[time_axis] + k as f64 * chart.spacing()[time_axis])
        .collect();

    let mut quantities = Vec::with_capacity(spatial.len());
    for &j in &spatial {
        let fj = theta.coeff(j);
        let d_ft = partial(ft, j);
        let d_fj = partial(fj, time_axis);
        let flux_residual =
            Norms::accumulate(chart.interior_nodes().map(|p| d_ft.at(p) - d_fj.at(p)));

        let others: Vec<usize> = (0..n).filter(|a| *a != time_axis && *a != j).collect();
        let mj = chart.counts()[j];
        let hj = chart.spacing()[j];
        let mut slices = Vec::new();
        let (mut boundary_jump, mut boundary_max) = (0.0f64, 0.0f64);
        for transverse in transverse_indices(chart, &others) {
            let line_start = |t: usize| -> usize {
                let mut idx = vec![0; n];
                for (a, i) in others.iter().zip(&transverse) {
                    idx[*a] = *i;
                }
                idx[time_axis] = t;
                chart.node(&idx).expect("indices inside chart")
            };
            let sj = chart.stride(j);
            let mut q = Vec::with_capacity(nt);
            let mut q2 = Vec::with_capacity(nt);
            let mut scale = 0.0f64;
            for t in 0..nt {
                let p0 = line_start(t);
                q.push(trapezoid((0..mj).map(|i| fj.at(p0 + i * sj)), hj));
                scale = scale.max(trapezoid((0..mj).map(|i| fj.at(p0 + i * sj).abs()), hj));
                if (mj - 1).is_multiple_of(2) {
                    q2.push(trapezoid(
                        (0..mj).step_by(2).map(|i| fj.at(p0 + i * sj)),
                        2.0 * hj,
                    ));
                }
                let (a, b) = (ft.at(p0), ft.at(p0 + (mj - 1) * sj));
                boundary_jump = boundary_jump.max((b - a).abs());
                boundary_max = boundary_max.max(a.abs()).max(b.abs());
            }
            let drift = q.iter().fold(0.0f64, |m, v| m.max((v - q[0]).abs()));
            let relative_drift = if scale > 0.0 { drift / scale } else { drift };
            let q_richardson = (q2.len() == nt).then(|| {
                q.iter()
                    .zip(&q2)
                    .map(|(a, b)| (4.0 * a - b) / 3.0)
                    .collect()
            });
            slices.push(SliceSeries {
                transverse,
                q,
                q_richardson,
                drift,
                relative_drift,
            });
        }
        let drift = slices.iter().fold(0.0f64, |m, s| m.max(s.drift));
        let relative_drift = slices.iter().fold(0.0f64, |m, s| m.max(s.relative_drift));
        quantities.push(QuantityReport {
            axis: j,
            slices,
            drift,
            relative_drift,
            flux_residual,
            boundary_jump,
            boundary_max,
        });
    }

    let mut cross_residuals = Vec::new();
    for (a, &i) in spatial.iter().enumerate() {
        for &j in &spatial[a + 1..] {
            let dj = partial(theta.coeff(j), i);
            let di = partial(theta.coeff(i), j);
            cross_residuals.push((
                (i, j),
                Norms::accumulate(chart.interior_nodes().map(|p| dj.at(p) - di.at(p))),
            ));
        }
    }
    Ok(ConservationReport {
        time_axis,
        times,
        quantities,
        cross_residuals,
        quadrature: "composite trapezoid",
    })
}

/// Every combination of indices on `axes`, last axis fastest.
fn transverse_indices(chart: &GridChart, axes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &a in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..chart.counts()[a]).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// One report per order of a hierarchy of closed forms.
pub fn hierarchy_report(
    forms: &[OneFormField],
    time_axis: usize,
) -> Result<Vec<ConservationReport>> {
    if let Some(first) = forms.first() {
        for f in forms {
            first.chart().check_same(f.chart())?;
        }
    }
    forms.iter().map(|f| analyze(f, time_axis)).collect()
}

/// Writes `order,axis,t,Q,drift,flux_residual`, one row per order, spatial
/// axis and time sample. `Q` is taken on the middle transverse slice.
pub fn write_csv<W: Write>(mut w: W, reports: &[ConservationReport]) -> Result<()> {
    writeln!(w, "order,axis,t,Q,drift,flux_residual")?;
    for (order, rep) in reports.iter().enumerate() {
        for qty in &rep.quantities {
            let slice = &qty.slices[qty.slices.len() / 2];
            for (t, q) in rep.times.iter().zip(&slice.q) {
                writeln!(
                    w,
                    "{order},{},{t:e},{q:e},{:e},{:e}",
                    qty.axis,
                    (q - slice.q[0]).abs(),
                    qty.flux_residual.max
                )?;
            }
        }
    }
    Ok(())
}

/// Compact per-order record of the largest residuals.
pub fn summary_json(reports: &[ConservationReport]) -> serde_json::Value {
    serde_json::Value::Array(
        reports
            .iter()
            .enumerate()
            .map(|(order, r)| {
                serde_json::json!({
                    "order": order,
                    "max_flux_residual": r.max_flux_residual(),
                    "max_drift": r.quantities.iter().fold(0.0f64, |m, q| m.max(q.drift)),
                    "max_relative_drift": r.max_relative_drift(),
                    "max_boundary_jump": r.quantities.iter().fold(0.0f64, |m, q| m.max(q.boundary_jump)),
                    "max_cross_residual": r.cross_residuals.iter().fold(0.0f64, |m, (_, c)| m.max(c.max)),
                })
            })
            .collect(),
    )
}
