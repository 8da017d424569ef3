//! The `pseudosphere` binary: exit codes, output files and manifests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pseudosphere::pssfield;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseudosphere"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn verify_igsge_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["verify"], &configs().join("igsge.toml"), d.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let m = manifest(d.path());
    assert_eq!(m["status"], "pass");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["metrics"]["structure_res1"].as_f64().unwrap() < 0.02);
}

#[test]
fn flat_frame_exits_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["verify"], &configs().join("flat.toml"), d.path())
            .status
            .code(),
        Some(1)
    );
    let o = run(&["solve-frame"], &configs().join("flat.toml"), d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("structure gate"));
    assert_eq!(manifest(d.path())["status"], "error");
}

#[test]
fn malformed_config_exits_two_with_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "[model]\nkind = \"sine_gordon\"\nkink = static\n").unwrap();
    let o = run(&["verify"], &cfg, &d.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    std::fs::write(&cfg, "[model]\nkind = \"igsge\"\nc = [1.0, 1.0]\n[chart]\nlower=[1,0,0]\nupper=[2,1,1]\ncounts=[5,5,5]\n")
        .unwrap();
    let o = run(&["verify"], &cfg, &d.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.c"));
}

#[test]
fn special_frame_solves_to_zero_angle_file() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        &["solve-frame"],
        &configs().join("hyperbolic.toml"),
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let (chart, comps) = pssfield::read_file(&d.path().join("phi.pss")).unwrap();
    assert_eq!(chart.counts(), &[21, 21]);
    assert!(comps[0].values().iter().all(|v| *v == 0.0));
    for f in ["rotation.pss", "theta1.pss", "potential.pss"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
    assert!(
        manifest(d.path())["metrics"]["commutator_max"]
            .as_f64()
            .unwrap()
            < 1e-10
    );
}

#[test]
fn grid_scale_refines_the_chart() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        &["solve-frame", "--grid-scale", "2"],
        &configs().join("hyperbolic.toml"),
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let (chart, comps) = pssfield::read_file(&d.path().join("theta1.pss")).unwrap();
    assert_eq!(chart.counts(), &[41, 41]);
    assert_eq!(comps.len(), 2);
    assert_eq!(manifest(d.path())["grid_scale"], 2);
}

#[test]
fn hierarchy_emits_each_order() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("ch.toml");
    let text = std::fs::read_to_string(configs().join("camassa_holm.toml"))
        .unwrap()
        .replace("order = 2", "order = 1");
    std::fs::write(&cfg, text).unwrap();
    let out = d.path().join("out");
    let o = run(&["hierarchy"], &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in ["phi_0.pss", "phi_1.pss", "theta_0.pss", "theta_1.pss"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(!out.join("phi_2.pss").exists());
    let (chart, theta) = pssfield::read_file(&out.join("theta_1.pss")).unwrap();
    assert_eq!(chart.counts(), &[65, 41]);
    assert_eq!(theta.len(), 2);
}

#[test]
fn conserve_constant_form_has_zero_drift() {
    let d = tempfile::tempdir().unwrap();
    let chart = pseudosphere::GridChart::from_bounds(&[0.0, 0.0], &[1.0, 1.0], &[9, 9]).unwrap();
    let theta = pseudosphere::OneFormField::from_fn(&chart, |_| vec![0.5, -2.0]).unwrap();
    pssfield::write_file(
        &d.path().join("theta.pss"),
        &pssfield::oneform_components(&theta),
    )
    .unwrap();
    let cfg = d.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[model]\nkind = \"external\"\ntheta = \"theta.pss\"\n",
    )
    .unwrap();
    let out = d.path().join("out");
    let o = run(&["conserve"], &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = manifest(&out);
    assert_eq!(m["metrics"]["drift_0_1"], 0.0);
    assert_eq!(m["metrics"]["flux_residual_0_1"], 0.0);
    let csv = std::fs::read_to_string(out.join("conservation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9);
}

#[test]
fn converge_is_deterministic_and_gated() {
    let d = tempfile::tempdir().unwrap();
    let cfg = configs().join("sine_gordon_coordinates.toml");
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(run(&["converge"], &cfg, &a).status.code(), Some(0));
    assert_eq!(run(&["converge"], &cfg, &b).status.code(), Some(0));
    for f in ["converge.csv", "manifest.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    // an unreachable floor fails the run
    let strict = d.path().join("strict.toml");
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("[converge]", "[converge]\norder_floor = 3.5");
    std::fs::write(&strict, text).unwrap();
    assert_eq!(
        run(&["converge"], &strict, &d.path().join("c"))
            .status
            .code(),
        Some(1)
    );
}
