//! Run configuration: a TOML file with one table per concern.
//!
//! ```toml
//! [model]
//! kind = "sine_gordon"        # camassa_holm | sine_gordon | igsge | external
//! kink = "static"             #   | hyperbolic | cosh | flat
//!
//! [chart]
//! lower = [-8.0, -8.0]
//! upper = [8.0, 8.0]
//! counts = [33, 33]
//!
//! [solver]
//! phi0 = 0.0
//!
//! [tolerances]
//! structure_gate = 10.0
//! ```
//!
//! Every physical default (gate factor, nondegeneracy threshold, order cap,
//! observed-order floor) lives in this module.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::GridChart;
use crate::hierarchy::DEFAULT_MAX_ORDER;
use crate::rotation::LieStepper;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    CamassaHolm,
    SineGordon,
    Igsge,
    External,
    /// `dx² + e^{−2x} dy²` in its special frame.
    Hyperbolic,
    /// `dx² + cosh²x dy²` in its coordinate frame.
    Cosh,
    /// Euclidean coordinate frame (curvature 0), a negative control.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kink {
    Static,
    Moving,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    // sine-Gordon
    #[serde(default)]
    pub kink: Option<Kink>,
    #[serde(default)]
    pub velocity: Option<f64>,
    // IGSGE: n = c.len() + 1
    #[serde(default)]
    pub c: Option<Vec<f64>>,
    // Camassa–Holm
    #[serde(default)]
    pub m: Option<f64>,
    /// Spectral parameter at which the CH frame is evaluated for `verify`
    /// and `solve-frame`.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// `u0(x) = mean + amplitude · cos(2π wavenumber x / period + phase)`.
    #[serde(default)]
    pub initial: Option<InitialWave>,
    /// `false` freezes `u0` in time instead of evolving it, which is not a
    /// solution unless `u0` is constant.
    #[serde(default = "default_true")]
    pub evolve: bool,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_save_every")]
    pub save_every: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_blowup")]
    pub blowup_factor: f64,
    // external: pssfield files, relative to the config file
    #[serde(default)]
    pub frame: Option<PathBuf>,
    #[serde(default)]
    pub theta: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialWave {
    #[serde(default)]
    pub mean: f64,
    pub amplitude: f64,
    #[serde(default = "default_wavenumber")]
    pub wavenumber: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
    #[serde(default)]
    pub names: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Angle solver in 2D, matrix solver otherwise.
    #[default]
    Auto,
    Angle,
    Matrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: SolverMethod,
    #[serde(default)]
    pub phi0: f64,
    /// Row-major `n × n` orthogonal matrix; identity when absent.
    #[serde(default)]
    pub l0: Option<Vec<f64>>,
    /// Base node indices on the unrefined chart; the chart centre when
    /// absent.
    #[serde(default)]
    pub base: Option<Vec<usize>>,
    #[serde(default)]
    pub stepper: LieStepper,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            phi0: 0.0,
            l0: None,
            base: None,
            stepper: LieStepper::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Values,
    Periodic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub init: InitKind,
    /// `φ_0(base), …, φ_K(base)` for `init = "values"`; zeros when absent.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// Periodic axis for `init = "periodic"`.
    #[serde(default)]
    pub axis: usize,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            order: default_order(),
            init: InitKind::Values,
            values: None,
            axis: 0,
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Structure gate limit is `structure_gate · h² · max(1, magnitude)`.
    #[serde(default = "default_gate")]
    pub structure_gate: f64,
    #[serde(default = "default_nondegeneracy")]
    pub nondegeneracy: f64,
    #[serde(default = "default_orthogonality")]
    pub orthogonality: f64,
    /// Path dependence of the potential `G` is accepted up to
    /// `potential_path · h² · max(1, max|θ_1|)`.
    #[serde(default = "default_path")]
    pub potential_path: f64,
    /// Relative drift gate for `conserve`; reported only when absent.
    #[serde(default)]
    pub drift: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structure_gate: default_gate(),
            nondegeneracy: default_nondegeneracy(),
            orthogonality: default_orthogonality(),
            potential_path: default_path(),
            drift: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Verify,
    SolveFrame,
    Hierarchy,
    Conserve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::SolveFrame => "solve-frame",
            Command::Hierarchy => "hierarchy",
            Command::Conserve => "conserve",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default = "default_converge_command")]
    pub command: Command,
    /// Grid scales, each a multiple of the previous.
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    /// Metrics whose observed order is gated; all metrics are reported.
    #[serde(default = "default_gated")]
    pub gate: Vec<String>,
    #[serde(default = "default_order_floor")]
    pub order_floor: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            command: default_converge_command(),
            levels: default_levels(),
            gate: default_gated(),
            order_floor: default_order_floor(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecialCoordinatesConfig {
    #[serde(default)]
    pub enabled: bool,
    /// Scaling constants `c_2..c_n`; all 1 when absent.
    #[serde(default)]
    pub c: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConservationConfig {
    /// Axis playing the role of time; model default when absent (`t` for
    /// Camassa–Holm, `x_1` otherwise).
    #[serde(default)]
    pub time_axis: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub chart: Option<ChartConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub hierarchy: HierarchyConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub special_coordinates: Option<SpecialCoordinatesConfig>,
    #[serde(default)]
    pub conservation: ConservationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_eta() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_period() -> f64 {
    std::f64::consts::TAU
}
fn default_points() -> usize {
    64
}
fn default_t_final() -> f64 {
    2.0
}
fn default_steps() -> usize {
    400
}
fn default_save_every() -> usize {
    10
}
fn default_cfl() -> f64 {
    2.0
}
fn default_blowup() -> f64 {
    100.0
}
fn default_wavenumber() -> f64 {
    1.0
}
fn default_order() -> usize {
    1
}
fn default_max_order() -> usize {
    DEFAULT_MAX_ORDER
}
fn default_gate() -> f64 {
    10.0
}
fn default_nondegeneracy() -> f64 {
    1e-8
}
fn default_orthogonality() -> f64 {
    1e-12
}
fn default_path() -> f64 {
    10.0
}
fn default_converge_command() -> Command {
    Command::SolveFrame
}
fn default_levels() -> Vec<usize> {
    vec![1, 2, 4]
}
fn default_gated() -> Vec<String> {
    vec!["closed_residual".into()]
}
fn default_order_floor() -> f64 {
    1.7
}

fn invalid(field: &str, message: impl std::fmt::Display) -> Error {
    Error::Config {
        field: field.into(),
        message: message.to_string(),
    }
}

impl RunConfig {
    /// Parses and validates TOML text. Syntax and type errors carry a line
    /// number, semantic ones the offending field.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| {
                text[..s.start.min(text.len())].matches('\n').count() + 1
            });
            Error::Parse {
                line,
                message: e.message().trim().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative model file paths are resolved against
    /// its directory.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.model.frame, &mut cfg.model.theta]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok((cfg, text))
    }

    fn validate(&self) -> Result<()> {
        let m = &self.model;
        let needs_chart = !matches!(m.kind, ModelKind::CamassaHolm | ModelKind::External);
        if needs_chart && self.chart.is_none() {
            return Err(invalid(
                "chart",
                "a [chart] table is required for this model",
            ));
        }
        if let Some(c) = &self.chart {
            if c.lower.len() != c.upper.len() || c.lower.len() != c.counts.len() {
                return Err(invalid(
                    "chart",
                    "lower, upper and counts must have the same length",
                ));
            }
            if c.lower.iter().zip(&c.upper).any(|(a, b)| !(b > a)) {
                return Err(invalid(
                    "chart.upper",
                    "every upper bound must exceed its lower bound",
                ));
            }
            if c.counts.iter().any(|k| *k < 3) {
                return Err(invalid("chart.counts", "every axis needs at least 3 nodes"));
            }
            if let Some(n) = &c.names {
                if n.len() != c.counts.len() {
                    return Err(invalid("chart.names", "one name per axis"));
                }
            }
        }
        match m.kind {
            ModelKind::SineGordon => {
                self.require_dim(2)?;
                match (m.kink, m.velocity) {
                    (None, _) => {
                        return Err(invalid(
                            "model.kink",
                            "sine_gordon needs kink = \"static\" or \"moving\"",
                        ))
                    }
                    (Some(Kink::Moving), None) => {
                        return Err(invalid("model.velocity", "a moving kink needs a velocity"))
                    }
                    (Some(Kink::Moving), Some(v)) if !(v.abs() < 1.0) => {
                        return Err(invalid(
                            "model.velocity",
                            format!("|velocity| must be < 1, got {v}"),
                        ))
                    }
                    _ => {}
                }
            }
            ModelKind::Igsge => {
                let c =
                    m.c.as_ref()
                        .ok_or_else(|| invalid("model.c", "igsge needs the constant vector c"))?;
                if c.is_empty() {
                    return Err(invalid("model.c", "c needs at least one entry"));
                }
                let s: f64 = c.iter().map(|x| x * x).sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(invalid(
                        "model.c",
                        format!("c must have unit length, |c|² = {s}"),
                    ));
                }
                self.require_dim(c.len() + 1)?;
            }
            ModelKind::CamassaHolm => {
                if m.m.is_none() {
                    return Err(invalid("model.m", "camassa_holm needs the parameter m"));
                }
                if m.initial.is_none() {
                    return Err(invalid(
                        "model.initial",
                        "camassa_holm needs an [model.initial] wave",
                    ));
                }
                if !(m.period > 0.0) || !(m.t_final > 0.0) {
                    return Err(invalid(
                        "model.period",
                        "period and t_final must be positive",
                    ));
                }
                if m.points < 4 {
                    return Err(invalid("model.points", "need at least 4 points per period"));
                }
                if m.save_every == 0
                    || !m.steps.is_multiple_of(m.save_every)
                    || m.steps / m.save_every < 2
                {
                    return Err(invalid(
                        "model.save_every",
                        "must divide steps and leave at least 3 time samples",
                    ));
                }
            }
            ModelKind::External => {
                if m.frame.is_none() && m.theta.is_none() {
                    return Err(invalid(
                        "model.frame",
                        "external needs a frame or theta file",
                    ));
                }
            }
            ModelKind::Hyperbolic | ModelKind::Cosh => self.require_dim(2)?,
            ModelKind::Flat => {}
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.structure_gate", t.structure_gate),
            ("tolerances.nondegeneracy", t.nondegeneracy),
            ("tolerances.orthogonality", t.orthogonality),
            ("tolerances.potential_path", t.potential_path),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if let Some(d) = t.drift {
            if !(d > 0.0) {
                return Err(invalid(
                    "tolerances.drift",
                    format!("must be positive, got {d}"),
                ));
            }
        }
        let h = &self.hierarchy;
        if h.order > h.max_order {
            return Err(invalid(
                "hierarchy.order",
                format!("{} exceeds max_order {}", h.order, h.max_order),
            ));
        }
        if let Some(v) = &h.values {
            if v.len() != h.order + 1 {
                return Err(invalid(
                    "hierarchy.values",
                    format!("need {} values, got {}", h.order + 1, v.len()),
                ));
            }
        }
        let c = &self.converge;
        if c.levels.len() < 2
            || c.levels[0] == 0
            || c.levels
                .windows(2)
                .any(|w| w[1] <= w[0] || w[1] % w[0] != 0)
        {
            return Err(invalid(
                "converge.levels",
                "need at least two increasing scales, each a multiple of the previous",
            ));
        }
        if !(c.order_floor > 0.0) {
            return Err(invalid("converge.order_floor", "must be positive"));
        }
        if let Some(sc) = &self.special_coordinates {
            if let Some(c) = &sc.c {
                if c.iter().any(|x| !(*x > 0.0)) {
                    return Err(invalid(
                        "special_coordinates.c",
                        "scaling constants must be positive",
                    ));
                }
            }
        }
        Ok(())
    }

    fn require_dim(&self, n: usize) -> Result<()> {
        match &self.chart {
            Some(c) if c.counts.len() != n => Err(invalid(
                "chart.counts",
                format!(
                    "model needs a {n}-dimensional chart, got {}",
                    c.counts.len()
                ),
            )),
            _ => Ok(()),
        }
    }

    /// The configured chart refined `scale` times.
    pub fn chart(&self, scale: usize) -> Result<GridChart> {
        let c = self
            .chart
            .as_ref()
            .ok_or_else(|| invalid("chart", "missing [chart] table"))?;
        let mut chart = GridChart::from_bounds(&c.lower, &c.upper, &c.counts)?;
        if let Some(names) = &c.names {
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            chart = chart.with_axis_names(&names)?;
        }
        chart.refined(scale)
    }
}

/// Lowercase hex SHA-256 of the config text.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
