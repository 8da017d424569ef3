//! Command pipelines behind the `pseudosphere` binary.
//!
//! Each command computes a [`RunOutput`] in memory (report lines, named
//! metrics, output files) and [`execute`] writes it together with a
//! `manifest.json`. `converge` reruns another command on nested grids and
//! reads the metrics back.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::{config_hash, Command, InitKind, ModelKind, RunConfig, SolverMethod};
use crate::conservation::{analyze, hierarchy_report, summary_json, write_csv, ConservationReport};
use crate::error::{Error, Result};
use crate::forms::{closedness_residual, OneFormField};
use crate::frames::{frame_change, special_frame_residual, structure_gate, FrameData};
use crate::grid::{GridChart, ScalarField};
use crate::hierarchy::{
    series_structure_gate, solve_hierarchy, HierarchyInit, HierarchyOptions, SeriesFrame,
};
use crate::models::camassa_holm::mass;
use crate::models::{self, CamassaHolmState, ChEvolveParams, KinkKind};
use crate::pssfield;
use crate::rotation::{
    solve_l_nd, solve_phi_2d, special_coordinates_check, SolveOptions, SolveReport,
};

/// A file produced by a command, relative to the output directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub command: &'static str,
    pub lines: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    /// Largest grid spacing of the run.
    pub h: f64,
    pub passed: bool,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    fn new(command: &'static str, h: f64) -> Self {
        Self {
            command,
            lines: Vec::new(),
            metrics: BTreeMap::new(),
            h,
            passed: true,
            artifacts: Vec::new(),
        }
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    fn artifact(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.artifacts.push(Artifact {
            name: name.into(),
            bytes,
        });
    }

    fn fields(&mut self, name: impl Into<String>, comps: &[&ScalarField]) -> Result<()> {
        let mut buf = Vec::new();
        pssfield::write_components(&mut buf, comps)?;
        self.artifact(name, buf);
        Ok(())
    }
}

/// Frame data (and whatever else the model provides) on one grid.
struct Built {
    chart: GridChart,
    frame: Option<FrameData>,
    series: Option<SeriesFrame>,
    theta: Option<OneFormField>,
    time_axis: usize,
    model_metrics: Vec<(&'static str, f64)>,
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn ch_state(cfg: &RunConfig, scale: usize) -> Result<CamassaHolmState> {
    let m = &cfg.model;
    let wave = m.initial.as_ref().expect("validated");
    let mpar = m.m.expect("validated");
    let n = m.points * scale;
    let k = TAU * wave.wavenumber / m.period;
    let arg = |x: f64| k * x + wave.phase;
    let u0: Vec<f64> = (0..n)
        .map(|i| wave.mean + wave.amplitude * arg(i as f64 * m.period / n as f64).cos())
        .collect();
    if m.evolve {
        let params = ChEvolveParams {
            m: mpar,
            period: m.period,
            t_final: m.t_final,
            steps: m.steps * scale,
            save_every: m.save_every,
            cfl: m.cfl,
            blowup_factor: m.blowup_factor,
        };
        return models::ch_evolve(&u0, &params);
    }
    let nt = m.steps * scale / m.save_every + 1;
    let chart = GridChart::with_names(
        vec![0.0, 0.0],
        vec![m.period / n as f64, m.t_final / (nt - 1) as f64],
        vec![n + 1, nt],
        vec!["x".into(), "t".into()],
    )?;
    let field = |f: &dyn Fn(f64) -> f64| ScalarField::from_fn(&chart, |x| f(x[0]));
    let a = wave.amplitude;
    CamassaHolmState::new(
        field(&|x| wave.mean + a * arg(x).cos())?,
        field(&|x| -a * k * arg(x).sin())?,
        field(&|x| -a * k * k * arg(x).cos())?,
        mpar,
    )
}

fn build(cfg: &RunConfig, scale: usize) -> Result<Built> {
    let m = &cfg.model;
    let default_time = if m.kind == ModelKind::CamassaHolm {
        1
    } else {
        0
    };
    let time_axis = cfg.conservation.time_axis.unwrap_or(default_time);
    let mut b = match m.kind {
        ModelKind::CamassaHolm => {
            let s = ch_state(cfg, scale)?;
            let mut metrics = vec![("pde_residual", models::ch_pde_residual(&s))];
            if m.evolve {
                let q = mass(&s);
                let scale = q
                    .iter()
                    .fold(0.0f64, |a, v| a.max(v.abs()))
                    .max(f64::MIN_POSITIVE);
                let drift = q.iter().fold(0.0f64, |a, v| a.max((v - q[0]).abs()));
                metrics.push(("mass_relative_drift", drift / scale));
            }
            Built {
                chart: s.chart().clone(),
                frame: Some(models::ch_forms(&s, m.eta)?),
                series: Some(models::ch_series_frame(&s, cfg.hierarchy.order.max(2))?),
                theta: None,
                time_axis,
                model_metrics: metrics,
            }
        }
        ModelKind::SineGordon => {
            let chart = cfg.chart(scale)?;
            let kind = match m.kink.expect("validated") {
                crate::config::Kink::Static => KinkKind::Static,
                crate::config::Kink::Moving => KinkKind::Moving {
                    velocity: m.velocity.expect("validated"),
                },
            };
            let sol = models::sg_solution(&chart, kind)?;
            let pde = models::sine_gordon::sg_pde_residual(&sol.u);
            Built {
                frame: Some(models::sg_forms(&sol)?),
                chart,
                series: None,
                theta: None,
                time_axis,
                model_metrics: vec![("pde_residual", pde)],
            }
        }
        ModelKind::Igsge => {
            let chart = cfg.chart(scale)?;
            let s = models::igsge_explicit_solution(&chart, m.c.as_ref().expect("validated"))?;
            let r = models::igsge_residual(&s);
            Built {
                frame: Some(models::igsge_forms(&s)?),
                chart,
                series: None,
                theta: None,
                time_axis,
                model_metrics: vec![
                    ("igsge_unit", r.unit.max),
                    ("igsge_first_order", r.first_order.max),
                    ("igsge_gauss", r.gauss.max),
                    ("igsge_codazzi", r.codazzi.max),
                ],
            }
        }
        ModelKind::External => {
            if scale != 1 {
                return Err(config_error(
                    "model.kind",
                    "external data cannot be refined; use grid scale 1",
                ));
            }
            let frame = m.frame.as_deref().map(pssfield::read_frame).transpose()?;
            let theta = m
                .theta
                .as_deref()
                .map(|p| {
                    pssfield::read_file(p).and_then(|(_, c)| pssfield::oneform_from_components(c))
                })
                .transpose()?;
            let chart = frame
                .as_ref()
                .map(|f| f.chart().clone())
                .or_else(|| theta.as_ref().map(|t| t.chart().clone()));
            Built {
                chart: chart.expect("validated"),
                frame,
                series: None,
                theta,
                time_axis,
                model_metrics: Vec::new(),
            }
        }
        ModelKind::Hyperbolic | ModelKind::Cosh | ModelKind::Flat => {
            let chart = cfg.chart(scale)?;
            let frame = match m.kind {
                ModelKind::Hyperbolic => models::hyperbolic_frame(&chart)?,
                ModelKind::Cosh => models::cosh_frame(&chart)?,
                _ => models::flat_frame(&chart)?,
            };
            Built {
                chart,
                frame: Some(frame),
                series: None,
                theta: None,
                time_axis,
                model_metrics: Vec::new(),
            }
        }
    };
    if b.time_axis >= b.chart.dim() {
        return Err(config_error(
            "conservation.time_axis",
            format!("axis {} outside the chart", b.time_axis),
        ));
    }
    b.model_metrics.sort_by(|a, c| a.0.cmp(c.0));
    Ok(b)
}

fn base_node(cfg: &RunConfig, chart: &GridChart, scale: usize) -> Result<Vec<usize>> {
    match &cfg.solver.base {
        Some(b) => {
            let base: Vec<usize> = b.iter().map(|i| i * scale).collect();
            chart
                .node(&base)
                .map_err(|_| config_error("solver.base", format!("{b:?} is outside the chart")))?;
            Ok(base)
        }
        None => Ok(chart.center()),
    }
}

fn require_frame<'a>(b: &'a Built, command: &str) -> Result<&'a FrameData> {
    b.frame
        .as_ref()
        .ok_or_else(|| config_error("model.frame", format!("{command} needs frame data")))
}

/// Structure and model residual table; passes iff every gate holds.
pub fn cmd_verify(cfg: &RunConfig, scale: usize) -> Result<RunOutput> {
    let b = build(cfg, scale)?;
    let mut out = RunOutput::new("verify", b.chart.max_spacing());
    let tol = &cfg.tolerances;
    for (name, v) in &b.model_metrics {
        out.lines.push(format!("{name:<24} {v:.6e}"));
        out.metric(*name, *v);
    }
    if let Some(fd) = &b.frame {
        let h = b.chart.max_spacing();
        let limit = tol.structure_gate * h * h * fd.magnitude().max(1.0);
        let (r1, r2, ok) = match structure_gate(fd, tol.structure_gate, tol.nondegeneracy) {
            Ok(r) => (r.res1.max, r.res2.max, true),
            Err(Error::StructureGate { res1, res2, .. }) => (res1, res2, false),
            Err(e) => return Err(e),
        };
        out.lines.push(format!("{:<24} {r1:.6e}", "structure_res1"));
        out.lines.push(format!("{:<24} {r2:.6e}", "structure_res2"));
        out.lines.push(format!(
            "{:<24} {limit:.6e} {}",
            "structure_limit",
            if ok { "PASS" } else { "FAIL" }
        ));
        out.metric("structure_res1", r1);
        out.metric("structure_res2", r2);
        out.passed &= ok;
    }
    if let Some(series) = &b.series {
        let k = cfg.hierarchy.order;
        let ok = match series_structure_gate(&series.truncated(k)?, tol.structure_gate) {
            Ok(res) => {
                for (j, r) in res.iter().enumerate() {
                    out.lines.push(format!(
                        "{:<24} {:.6e}",
                        format!("series_structure_{j}"),
                        r.max()
                    ));
                    out.metric(format!("series_structure_{j}"), r.max());
                }
                true
            }
            Err(Error::StructureGate { res1, res2, limit }) => {
                out.lines.push(format!(
                    "series structure gate FAIL: res1={res1:.6e} res2={res2:.6e} limit={limit:.6e}"
                ));
                false
            }
            Err(e) => return Err(e),
        };
        out.passed &= ok;
    }
    if let Some(theta) = &b.theta {
        let r = closedness_residual(theta);
        out.lines
            .push(format!("{:<24} {r:.6e}", "theta_closedness"));
        out.metric("theta_closedness", r);
    }
    out.lines.push(format!(
        "verify: {}",
        if out.passed { "PASS" } else { "FAIL" }
    ));
    Ok(out)
}

fn solve(cfg: &RunConfig, fd: &FrameData, base: &[usize]) -> Result<SolveReport> {
    let tol = &cfg.tolerances;
    let opts = SolveOptions {
        gate_factor: Some(tol.structure_gate),
        nondegeneracy: tol.nondegeneracy,
        orth_tol: tol.orthogonality,
        stepper: cfg.solver.stepper,
    };
    let n = fd.dim();
    let angle = match cfg.solver.method {
        SolverMethod::Auto => n == 2,
        SolverMethod::Angle => {
            if n != 2 {
                return Err(config_error(
                    "solver.method",
                    "the angle solver needs a 2D frame",
                ));
            }
            true
        }
        SolverMethod::Matrix => false,
    };
    if angle {
        return solve_phi_2d(fd, cfg.solver.phi0, base, &opts);
    }
    let l0 = match &cfg.solver.l0 {
        Some(l) if l.len() != n * n => {
            return Err(config_error("solver.l0", format!("need {} entries", n * n)))
        }
        Some(l) => l.clone(),
        None => (0..n * n)
            .map(|k| if k / n == k % n { 1.0 } else { 0.0 })
            .collect(),
    };
    solve_l_nd(fd, &l0, base, &opts)
}

/// Special-frame rotation, `θ_1` and (optionally) special coordinates.
pub fn cmd_solve(cfg: &RunConfig, scale: usize) -> Result<RunOutput> {
    let b = build(cfg, scale)?;
    let fd = require_frame(&b, "solve-frame")?;
    let base = base_node(cfg, &b.chart, scale)?;
    let rep = solve(cfg, fd, &base)?;
    let mut out = RunOutput::new("solve-frame", b.chart.max_spacing());
    out.lines.push(rep.summary_line());
    out.metric("compat_residual", rep.compat_residual);
    out.metric("closed_residual", rep.closed_residual);
    out.metric("orth_residual", rep.orth_residual);
    let special = special_frame_residual(&frame_change(
        fd,
        &rep.rotation,
        cfg.tolerances.orthogonality,
    )?);
    out.lines
        .push(format!("special frame residual {special:.6e}"));
    out.metric("special_residual", special);
    if let Some(s) = &rep.structure {
        out.metric("structure_res1", s.res1.max);
        out.metric("structure_res2", s.res2.max);
    }
    if let Some(phi) = rep.angle() {
        out.fields("phi.pss", &[phi])?;
    }
    let entries = rep.rotation.entry_fields();
    out.fields("rotation.pss", &entries.iter().collect::<Vec<_>>())?;
    out.fields("theta1.pss", &pssfield::oneform_components(&rep.theta1))?;

    if let Some(sc) = cfg.special_coordinates.as_ref().filter(|s| s.enabled) {
        let n = fd.dim();
        let c = sc.c.clone().unwrap_or_else(|| vec![1.0; n - 1]);
        if c.len() != n - 1 {
            return Err(config_error(
                "special_coordinates.c",
                format!("need {} constants", n - 1),
            ));
        }
        let tol = &cfg.tolerances;
        let h = b.chart.max_spacing();
        let scale = rep
            .theta1
            .coeffs()
            .iter()
            .fold(1.0f64, |m, f| m.max(f.max_abs()));
        let chk = special_coordinates_check(
            fd,
            &rep,
            &c,
            tol.potential_path * h * h * scale,
            tol.nondegeneracy,
        )?;
        for (i, r) in chk.v1_ri.iter().enumerate() {
            out.metric(format!("commutator_v1_r{}", i + 2), r.max);
        }
        for ((i, j), r) in &chk.ri_rj {
            out.metric(format!("commutator_r{}_r{}", i + 1, j + 1), r.max);
        }
        out.metric("commutator_max", chk.max());
        out.metric("potential_path", chk.path_residual);
        out.lines.push(format!(
            "special coordinates: commutator={:.6e} path={:.6e}",
            chk.max(),
            chk.path_residual
        ));
        out.fields("potential.pss", &[&chk.g])?;
    }
    Ok(out)
}

fn hierarchy_solution(
    cfg: &RunConfig,
    b: &Built,
    scale: usize,
) -> Result<crate::hierarchy::HierarchySolution> {
    let series = b.series.as_ref().ok_or_else(|| {
        config_error(
            "model.kind",
            "the hierarchy needs a model with a spectral parameter (camassa_holm)",
        )
    })?;
    let h = &cfg.hierarchy;
    let init = match h.init {
        InitKind::Values => {
            HierarchyInit::Values(h.values.clone().unwrap_or_else(|| vec![0.0; h.order + 1]))
        }
        InitKind::Periodic => HierarchyInit::Periodic { axis: h.axis },
    };
    let base = base_node(cfg, &b.chart, scale)?;
    let opts = HierarchyOptions {
        max_order: h.max_order,
        gate_factor: Some(cfg.tolerances.structure_gate),
    };
    solve_hierarchy(series, h.order, &init, &base, &opts)
}

/// Angle series `φ_0..φ_K` and the closed form of every order.
pub fn cmd_hierarchy(cfg: &RunConfig, scale: usize) -> Result<RunOutput> {
    let b = build(cfg, scale)?;
    let sol = hierarchy_solution(cfg, &b, scale)?;
    let mut out = RunOutput::new("hierarchy", b.chart.max_spacing());
    out.lines.extend(sol.summary_lines());
    for j in 0..=sol.order() {
        out.metric(format!("compat_{j}"), sol.compat_residual[j]);
        out.metric(format!("closed_{j}"), sol.closed_residual[j]);
        out.metric(format!("phi_base_{j}"), sol.initial[j]);
        out.fields(format!("phi_{j}.pss"), &[sol.phi.coeff(j)])?;
        out.fields(
            format!("theta_{j}.pss"),
            &pssfield::oneform_components(&sol.theta[j]),
        )?;
    }
    Ok(out)
}

/// Conserved quantities of every available closed form.
pub fn cmd_conserve(cfg: &RunConfig, scale: usize) -> Result<RunOutput> {
    let b = build(cfg, scale)?;
    let mut out = RunOutput::new("conserve", b.chart.max_spacing());
    let reports: Vec<ConservationReport> = if b.series.is_some() {
        let sol = hierarchy_solution(cfg, &b, scale)?;
        hierarchy_report(&sol.theta, b.time_axis)?
    } else if let Some(theta) = &b.theta {
        vec![analyze(theta, b.time_axis)?]
    } else {
        let fd = require_frame(&b, "conserve")?;
        let rep = solve(cfg, fd, &base_node(cfg, &b.chart, scale)?)?;
        vec![analyze(&rep.theta1, b.time_axis)?]
    };
    for (name, v) in &b.model_metrics {
        out.metric(*name, *v);
    }
    for (j, rep) in reports.iter().enumerate() {
        for q in &rep.quantities {
            let a = q.axis;
            out.metric(format!("flux_residual_{j}_{a}"), q.flux_residual.max);
            out.metric(format!("drift_{j}_{a}"), q.drift);
            out.metric(format!("relative_drift_{j}_{a}"), q.relative_drift);
            out.metric(format!("boundary_jump_{j}_{a}"), q.boundary_jump);
            out.lines.push(format!(
                "order {j} axis {a}: Q(t0)={:+.10e} drift={:.6e} relative={:.6e} flux={:.6e} boundary_jump={:.6e}",
                q.slices[q.slices.len() / 2].q[0],
                q.drift,
                q.relative_drift,
                q.flux_residual.max,
                q.boundary_jump
            ));
            if let Some(tol) = cfg.tolerances.drift {
                out.passed &= q.relative_drift <= tol;
            }
        }
        for ((i, k), r) in &rep.cross_residuals {
            out.metric(format!("cross_residual_{j}_{i}_{k}"), r.max);
        }
    }
    if let Some(v) = out.metrics.get("mass_relative_drift") {
        out.lines.push(format!("mass relative drift {v:.6e}"));
    }
    let mut csv = Vec::new();
    write_csv(&mut csv, &reports)?;
    out.artifact("conservation.csv", csv);
    let summary = serde_json::to_vec_pretty(&summary_json(&reports)).expect("json");
    out.artifact("conservation.json", summary);
    if cfg.tolerances.drift.is_some() {
        out.lines.push(format!(
            "conserve: {}",
            if out.passed { "PASS" } else { "FAIL" }
        ));
    }
    Ok(out)
}

pub fn run_command(cmd: Command, cfg: &RunConfig, scale: usize) -> Result<RunOutput> {
    match cmd {
        Command::Verify => cmd_verify(cfg, scale),
        Command::SolveFrame => cmd_solve(cfg, scale),
        Command::Hierarchy => cmd_hierarchy(cfg, scale),
        Command::Conserve => cmd_conserve(cfg, scale),
    }
}

/// Values below this are treated as exact when computing orders.
const ROUND_OFF: f64 = 1e-13;

/// Reruns the configured command on nested grids and reports observed
/// orders; fails when a gated metric converges slower than the floor.
pub fn cmd_converge(cfg: &RunConfig, scale: usize) -> Result<RunOutput> {
    let c = &cfg.converge;
    let runs = c
        .levels
        .iter()
        .map(|k| run_command(c.command, cfg, k * scale))
        .collect::<Result<Vec<_>>>()?;
    let mut out = RunOutput::new("converge", runs.last().expect("levels").h);
    for g in &c.gate {
        if !runs.iter().all(|r| r.metrics.contains_key(g)) {
            return Err(config_error(
                "converge.gate",
                format!("{} does not report metric {g:?}", c.command.name()),
            ));
        }
    }
    let mut csv = String::from("metric,scale,h,value,observed_order\n");
    let names: Vec<&String> = runs[0]
        .metrics
        .keys()
        .filter(|k| runs.iter().all(|r| r.metrics.contains_key(*k)))
        .collect();
    for name in names {
        let mut orders = Vec::new();
        for (i, (k, r)) in c.levels.iter().zip(&runs).enumerate() {
            let v = r.metrics[name];
            let order = (i > 0).then(|| {
                let (p, hp) = (runs[i - 1].metrics[name], runs[i - 1].h);
                if p.abs() < ROUND_OFF && v.abs() < ROUND_OFF {
                    f64::INFINITY
                } else {
                    (p / v).abs().ln() / (hp / r.h).ln()
                }
            });
            let shown = match order {
                None => String::new(),
                Some(o) if o.is_infinite() => "exact".into(),
                Some(o) => format!("{o:.6e}"),
            };
            csv.push_str(&format!("{name},{},{:e},{v:e},{shown}\n", k * scale, r.h));
            orders.extend(order);
        }
        let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
        out.metric(
            format!("{name}.finest"),
            *runs.last().unwrap().metrics.get(name).unwrap(),
        );
        out.metric(format!("{name}.min_order"), worst);
        if c.gate.contains(name) {
            let ok = worst >= c.order_floor;
            out.passed &= ok;
            out.lines.push(format!(
                "{name}: finest={:.6e} min order={worst:.3} floor={} {}",
                runs.last().unwrap().metrics[name],
                c.order_floor,
                if ok { "PASS" } else { "FAIL" }
            ));
        }
    }
    out.artifact("converge.csv", csv.into_bytes());
    out.lines.push(format!(
        "converge {}: {}",
        c.command.name(),
        if out.passed { "PASS" } else { "FAIL" }
    ));
    Ok(out)
}

/// Which command to run from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invocation {
    Run(Command),
    Converge,
}

impl Invocation {
    fn name(self) -> &'static str {
        match self {
            Invocation::Run(c) => c.name(),
            Invocation::Converge => "converge",
        }
    }
}

/// What happened, for the binary to print.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub lines: Vec<String>,
    pub error: Option<String>,
    pub out_dir: Option<PathBuf>,
}

/// Exit code for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Config { .. } => 2,
        Error::Io(_) => 2,
        _ => 1,
    }
}

/// Loads the config, runs the command, writes outputs and the manifest.
pub fn execute(
    inv: Invocation,
    config: &Path,
    out_dir: Option<&Path>,
    grid_scale: usize,
) -> Outcome {
    let (cfg, text) = match RunConfig::load(config) {
        Ok(v) => v,
        Err(e) => {
            return Outcome {
                code: 2,
                lines: Vec::new(),
                error: Some(format!("{}: {e}", config.display())),
                out_dir: None,
            }
        }
    };
    if grid_scale == 0 {
        return Outcome {
            code: 2,
            lines: Vec::new(),
            error: Some("--grid-scale must be at least 1".into()),
            out_dir: None,
        };
    }
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("pseudosphere-out"));
    let result = match inv {
        Invocation::Run(c) => run_command(c, &cfg, grid_scale),
        Invocation::Converge => cmd_converge(&cfg, grid_scale),
    };
    let mut manifest = json!({
        "command": inv.name(),
        "config_sha256": config_hash(&text),
        "grid_scale": grid_scale,
        "tolerances": cfg.tolerances,
    });
    let outcome = match &result {
        Ok(run) => {
            manifest["status"] = json!(if run.passed { "pass" } else { "fail" });
            manifest["h"] = json!(run.h);
            manifest["metrics"] = json!(run.metrics);
            manifest["outputs"] = json!(run
                .artifacts
                .iter()
                .map(|a| a.name.as_str())
                .collect::<Vec<_>>());
            Outcome {
                code: if run.passed { 0 } else { 1 },
                lines: run.lines.clone(),
                error: None,
                out_dir: Some(dir.clone()),
            }
        }
        Err(e) => {
            manifest["status"] = json!("error");
            manifest["error"] = json!(e.to_string());
            Outcome {
                code: exit_code(e),
                lines: Vec::new(),
                error: Some(e.to_string()),
                out_dir: Some(dir.clone()),
            }
        }
    };
    let write = || -> Result<()> {
        std::fs::create_dir_all(&dir)?;
        if let Ok(run) = &result {
            for a in &run.artifacts {
                std::fs::write(dir.join(&a.name), &a.bytes)?;
            }
        }
        let mut text = serde_json::to_string_pretty(&manifest).expect("json");
        text.push('\n');
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    };
    match write() {
        Ok(()) => outcome,
        Err(e) => Outcome {
            code: 2,
            error: Some(format!("writing {}: {e}", dir.display())),
            ..outcome
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::parse(text).unwrap()
    }

    const HYPERBOLIC: &str = r#"
[model]
kind = "hyperbolic"
[chart]
lower = [-1.0, -1.0]
upper = [1.0, 1.0]
counts = [17, 17]
[special_coordinates]
enabled = true
"#;

    #[test]
    fn special_frame_solves_to_zero_angle() {
        let out = cmd_solve(&cfg(HYPERBOLIC), 1).unwrap();
        assert_eq!(out.metrics["compat_residual"], 0.0);
        assert!(out.metrics["commutator_max"] < 1e-10);
        let phi = out.artifacts.iter().find(|a| a.name == "phi.pss").unwrap();
        let (_, comps) = pssfield::read_components(&phi.bytes[..]).unwrap();
        assert!(comps[0].values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn flat_frame_fails_verify() {
        let out = cmd_verify(&cfg(&HYPERBOLIC.replace("hyperbolic", "flat")), 1).unwrap();
        assert!(!out.passed);
        assert!(matches!(
            cmd_solve(&cfg(&HYPERBOLIC.replace("hyperbolic", "flat")), 1),
            Err(Error::StructureGate { .. })
        ));
    }

    #[test]
    fn hierarchy_rejects_models_without_parameter() {
        let e = cmd_hierarchy(&cfg(HYPERBOLIC), 1).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn converge_reports_orders() {
        let text = HYPERBOLIC
            .replace("hyperbolic", "cosh")
            .replace("enabled = true", "enabled = false");
        let out = cmd_converge(&cfg(&text), 1).unwrap();
        assert!(out.passed, "{:?}", out.lines);
        let csv = String::from_utf8(out.artifacts[0].bytes.clone()).unwrap();
        assert!(csv.starts_with("metric,scale,h,value,observed_order\nclosed_residual,1,"));
        assert!(out.metrics["closed_residual.min_order"] > 1.7);
    }

    #[test]
    fn frozen_non_solution_blocks() {
        let text = r#"
[model]
kind = "camassa_holm"
m = 1.0
evolve = false
initial = { amplitude = 1.0, phase = -1.5707963267948966 }
"#;
        let c = cfg(text);
        let out = cmd_verify(&c, 1).unwrap();
        assert!(!out.passed);
        assert!(out.metrics["pde_residual"] > 0.5);
        assert!(matches!(cmd_solve(&c, 1), Err(Error::StructureGate { .. })));
    }
}
