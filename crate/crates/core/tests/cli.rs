use std::path::Path;
use std::process::{Command, Output};

fn qdswitch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdswitch"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

const EIGEN: &str = r#"
schema_version = 1
scenario = "eigenfrequencies"
output_dir = "out"

[system]
g = 25.0
kappa = 27.0
gamma = 0.1

[eigenfrequencies]
delta = { start = -10.0, stop = 10.0, n_points = 3 }
"#;

const SPECTRUM: &str = r#"
schema_version = 1
scenario = "spectrum"
output_dir = "out"

[system]
g = 25.0
kappa = 27.0
gamma = 0.1
n_max = 3

[spectrum]
omega0 = 0.01
detunings = [-30.0, -25.0, 0.0, 25.0, 30.0]
"#;

#[test]
fn lists_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = qdswitch(dir.path(), &["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "spectrum",
        "pl-decay",
        "cw-pulse",
        "detuned-control",
        "two-pulse",
        "saturation",
        "nonlinear-map",
        "eigenfrequencies",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn eigenfrequency_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("eig.toml"), EIGEN).unwrap();
    let out = qdswitch(dir.path(), &["run", "--config", "eig.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("out/eigenfrequencies_frequencies.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta_ghz,re_plus,im_plus,re_minus,im_minus"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let resonant = &rows[1];
    assert_eq!(resonant[0], 0.0);
    assert!((resonant[1] - resonant[3] - 42.147).abs() < 1e-3);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/eigenfrequencies_meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["scenario"], "eigenfrequencies");
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["outputs"][0], "eigenfrequencies_frequencies.csv");
    assert_eq!(meta["config"]["system"]["g"], 25.0);
}

#[test]
fn missing_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), EIGEN.replace("kappa = 27.0\n", "")).unwrap();
    let out = qdswitch(dir.path(), &["run", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn validate_reports_each_problem() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("eig.toml"), EIGEN).unwrap();
    let ok = qdswitch(dir.path(), &["validate", "--config", "eig.toml"]);
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("valid"));

    let bad = qdswitch(
        dir.path(),
        &["validate", "--config", "eig.toml", "--set", "calibration.eta=1.5", "--set", "scenario=\"spectrum\""],
    );
    assert_eq!(bad.status.code(), Some(2));
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.starts_with("invalid"));
    assert!(text.contains("eta"), "{text}");
    assert!(text.contains("[spectrum]"), "{text}");
}

#[test]
fn unknown_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("eig.toml"), EIGEN).unwrap();
    let out = qdswitch(dir.path(), &["run", "--config", "eig.toml", "--set", "system.gee=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gee"));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("s.toml"), SPECTRUM).unwrap();
        let out = qdswitch(dir.path(), &["--threads", threads, "run", "--config", "s.toml"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        ["spectrum_with-qd.csv", "spectrum_empty-cavity.csv", "spectrum_meta.json"]
            .map(|f| std::fs::read(dir.path().join("out").join(f)).unwrap())
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("2"));
}
