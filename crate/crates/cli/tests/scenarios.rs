use std::fs;
use std::path::Path;
use std::process::Command;

use patchflow_cli::check::check_output;
use patchflow_cli::runner::Manifest;

fn patchflow(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_patchflow"))
        .args(args)
        .env("PATCHFLOW_THREADS", "2")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let k = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().parse().unwrap())
        .collect()
}

const RIGID: &str = r#"[sim]
name = "rigid_translation"
n = 64
box_length = 8.0
nu = 0.1
dt = 0.02
t_final = 0.5
output_dir = "out"

[patch]
shape = "disk"
radius = 1.0

[velocity]
family = "constant"
m = [0.3, -0.2]

[experiments]
tracers = 8
"#;

#[test]
fn rigid_translation_scenario_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "rigid", RIGID);
    let (code, _, err) = patchflow(&["run", &cfg]);
    assert_eq!(code, 0, "{err}");
    let out = tmp.path().join("out");
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let dev = column(&diag, "u_minus_M_l2");
    assert_eq!(dev.len(), 26);
    assert!(dev.iter().all(|&v| v <= 1e-8), "{dev:?}");
    for f in [
        "markers.csv",
        "trajectories.csv",
        "asymptotic.csv",
        "decomposition.json",
        "ledger.json",
        "manifest.json",
        "final.pfld",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(!out.join("failures.json").exists());

    let report = check_output(&out).unwrap();
    assert!(report.passed(), "{report:?}");
    let (code, stdout, _) = patchflow(&["check", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");

    let (code, json, _) = patchflow(&[
        "decompose",
        out.join("final.pfld").to_str().unwrap(),
        "--eta",
        "0.3",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["eta"], 0.3);
    assert_eq!(v["shells"].as_array().unwrap().len(), 0, "u - M vanishes");
}

#[test]
fn manifest_documents_config_and_traceability() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "rigid", RIGID);
    assert_eq!(patchflow(&["run", &cfg]).0, 0);
    let out = tmp.path().join("out");
    let m: Manifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.name, "rigid_translation");
    assert_eq!(m.config_sha256.len(), 64);
    assert!(m.defaults_applied.iter().any(|k| k == "sim.epsilon"));
    assert!(m.defaults.contains_key("sim.epsilon"));
    assert_eq!(m.threads, 2);
    assert!(m.traceability.len() > 20);
    // The effective config alone reproduces the run's scenario.
    let again = patchflow_cli::config::parse_config(&m.effective_config).unwrap();
    assert_eq!(again.name, "rigid_translation");
    assert_eq!(again.config.epsilon, 0.01);
}

#[test]
fn identical_configs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let body = RIGID
        .replace(
            "family = \"constant\"\nm = [0.3, -0.2]",
            "family = \"dipole\"\nsigma = 0.5\namplitude = 0.2",
        )
        .replace("tracers = 8", "tracers = 16");
    let a = write_config(tmp.path(), "a", &body.replace("\"out\"", "\"a\""));
    let b = write_config(tmp.path(), "b", &body.replace("\"out\"", "\"b\""));
    assert_eq!(patchflow(&["run", &a]).0, 0);
    assert_eq!(patchflow(&["run", &b]).0, 0);
    for f in [
        "diagnostics.csv",
        "markers.csv",
        "trajectories.csv",
        "asymptotic.csv",
    ] {
        let x = fs::read(tmp.path().join("a").join(f)).unwrap();
        let y = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn taylor_green_scenario_reports_the_decay_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "tg",
        r#"[sim]
name = "taylor_green"
n = 128
box_length = 6.283185307179586
nu = 0.1
epsilon = 1.0
dt = 0.0025
t_final = 1.0
output_every = 20
output_dir = "tg"

[velocity]
family = "taylor_green"

[experiments]
tracers = 0
"#,
    );
    let (code, _, err) = patchflow(&["run", &cfg]);
    assert_eq!(code, 0, "{err}");
    let ledger: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("tg/ledger.json")).unwrap())
            .unwrap();
    let e = ledger["exact_solution"]["decay_rate_error"]
        .as_f64()
        .unwrap();
    assert!(e <= 1e-4, "{e}");
    assert!(ledger["exact_solution"]["rel_l2_error"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn cfl_violation_exits_64_before_stepping() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cfl",
        &RIGID
            .replace("dt = 0.02", "dt = 1.0")
            .replace("t_final = 0.5", "t_final = 2.0"),
    );
    let (code, _, err) = patchflow(&["run", &cfg]);
    assert_eq!(code, 64);
    assert!(err.contains("line 6, column 6"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn malformed_config_exits_64_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad",
        &RIGID.replace("nu = 0.1", "nu = 0.1\nepsilon = -1"),
    );
    let (code, _, err) = patchflow(&["run", &cfg]);
    assert_eq!(code, 64);
    assert!(err.contains("line 6, column 11"), "{err}");
    assert!(err.contains("out of range"), "{err}");
}

#[test]
fn solver_failure_exits_1_with_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let body = RIGID
        .replace(
            "family = \"constant\"\nm = [0.3, -0.2]",
            "family = \"dipole\"\nsigma = 0.5\namplitude = 0.2",
        )
        .replace("nu = 0.1", "nu = 0.1\npressure_tol = 1e-300");
    let cfg = write_config(tmp.path(), "fail", &body);
    let (code, _, err) = patchflow(&["run", &cfg]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("last good state"), "{err}");
    assert!(tmp.path().join("out/checkpoint.pfld").is_file());
}

#[test]
fn check_flags_tampered_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "rigid", RIGID);
    assert_eq!(patchflow(&["run", &cfg]).0, 0);
    let out = tmp.path().join("out");
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines: Vec<String> = diag.lines().map(str::to_string).collect();
    let mut last: Vec<String> = lines
        .last()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    last[2] = "0.5".into();
    *lines.last_mut().unwrap() = last.join(",");
    fs::write(out.join("diagnostics.csv"), lines.join("\n") + "\n").unwrap();
    let (code, stdout, _) = patchflow(&["check", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("FAIL momentum_drift_rate"), "{stdout}");

    fs::remove_file(out.join("asymptotic.csv")).unwrap();
    let report = check_output(&out).unwrap();
    assert!(report
        .unresolved
        .iter()
        .any(|(r, _)| r.file == "asymptotic.csv"));
}

#[test]
fn stokes_tail_reports_dipole_slopes() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("src.toml");
    fs::write(
        &spec,
        "[source]\nkind = \"dipole\"\nwidth = 0.3\nsupport_radius = 1.0\nn = 32\n\n[profile]\nr_min = 5.0\nr_max = 300.0\noutput = \"tail.csv\"\n",
    )
    .unwrap();
    let (code, stdout, err) = patchflow(&["stokes-tail", spec.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!((v["slope_w"].as_f64().unwrap() + 1.0).abs() < 0.05);
    assert!((v["slope_q"].as_f64().unwrap() + 2.0).abs() < 0.05);
    assert!(tmp.path().join("tail.csv").is_file());

    fs::write(&spec, "[source]\nkind = \"quadrupole\"\n").unwrap();
    let (code, _, err) = patchflow(&["stokes-tail", spec.to_str().unwrap()]);
    assert_eq!(code, 64);
    assert!(err.contains("line 2"), "{err}");
}
