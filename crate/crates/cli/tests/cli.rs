use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cantor-rgg"));
    cmd.env_remove("CANTOR_RGG_OUT");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", stderr(out));
    // warnings may appear, errors may not
    assert!(!stderr(out).contains("error"), "stderr: {}", stderr(out));
}

fn assert_err(out: &Output) -> String {
    assert!(!out.status.success());
    let err = stderr(out);
    assert!(!err.is_empty());
    err
}

#[test]
fn constant_reports_rate_constant() {
    let out = run(&["constant", "--phi", "1/3"]);
    assert_ok(&out);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["phi"], "1/3");
    assert!((v["c_value"].as_f64().unwrap() - 1.996_704_971_702_273).abs() < 1e-12);
    assert!((v["dim"].as_f64().unwrap() - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
    assert!((v["inverse_dim"].as_f64().unwrap() - 3f64.log2()).abs() < 1e-15);
    for key in ["gamma_factor", "zeta_factor", "est_error"] {
        assert!(v[key].as_f64().unwrap() > 0.0, "{key}");
    }
}

#[test]
fn sequence_rows() {
    let out = run(&["sequence", "--phi", "1/3", "--n-max", "16"]);
    assert_ok(&out);
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 16);
    assert_eq!(&rows[0][..2], ["1", "1/2"]);
    assert_eq!(&rows[1][..2], ["2", "3/10"]);
    assert_eq!(&rows[2][..2], ["3", "1/5"]);
    assert_eq!(rows[2][2].parse::<f64>().unwrap(), 0.2);
}

#[test]
fn threshold_of_points_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.txt");
    fs::write(&path, "0.1\n0.15\n0.8\n").unwrap();
    let out = run(&["threshold", "--points-file", path.to_str().unwrap()]);
    assert_ok(&out);
    let text = stdout(&out);
    let fields: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert!((fields[0] - 0.65).abs() < 1e-15);
    assert_eq!(&fields[1..], [0.15, 0.8]);

    fs::write(&path, "0.1\nhello\n").unwrap();
    let err = assert_err(&run(&["threshold", "--points-file", path.to_str().unwrap()]));
    assert!(err.contains("hello"));
}

#[test]
fn sample_is_reproducible() {
    let args = ["sample", "--phi", "1/3", "-n", "50", "--seed", "4"];
    let a = run(&args);
    assert_ok(&a);
    assert_eq!(stdout(&a), stdout(&run(&args)));
    let points: Vec<f64> = stdout(&a).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(points.len(), 50);
    assert!(points.iter().all(|x| (0.0..=1.0).contains(x) && !(1.0 / 3.0 + 1e-12..2.0 / 3.0 - 1e-12).contains(x)));
    assert_err(&run(&["sample", "-n", "0"]));
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

const SMALL: &str = r#"{"phi":"1/3","n_grid":[8,16],"replicates":300,"master_seed":3,
    "targets":["convergence","identity","escape_probability","occupancy","l1_rate"]}"#;

#[test]
fn experiment_writes_manifest_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("run");
    let out = run(&["experiment", "--config", &config, "--out", out_dir.to_str().unwrap(), "--threads", "1"]);
    assert_ok(&out);
    assert_eq!(names(&out_dir), ["manifest.json", "results.csv"]);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"], serde_json::json!(["results.csv"]));
    assert_eq!(manifest["master_seed"], 3);
    assert_eq!(manifest["config"]["phi"], "1/3");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);

    let csv = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("target,n,estimate,stderr,reference,z,seed"));
    assert!(csv.contains("identity.lhs,8,"));
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), csv.lines().count() - 1);

    // same config, more threads, same bytes
    let other = dir.path().join("run3");
    assert_ok(&run(&["experiment", "--config", &config, "--out", other.to_str().unwrap(), "--threads", "3"]));
    assert_eq!(csv, fs::read_to_string(other.join("results.csv")).unwrap());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"phi":"1/3","n_grid":[8],"replicates":50,"targets":["occupancy"]}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_ok(&run(&["experiment", "--config", &config, "--out", a.to_str().unwrap(), "--seed", "1"]));
    assert_ok(&run(&["experiment", "--config", &config, "--out", b.to_str().unwrap(), "--seed", "2"]));
    let read = |d: &Path| fs::read_to_string(d.join("results.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"phi":"1/4","n_grid":[8],"replicates":20,"targets":["escape_probability"]}"#);
    let target = dir.path().join("from-env");
    let out = bin()
        .args(["experiment", "--config", &config])
        .env("CANTOR_RGG_OUT", &target)
        .output()
        .unwrap();
    assert_ok(&out);
    assert_eq!(names(&target), ["manifest.json", "results.csv"]);
}

#[test]
fn config_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"phi":"1/2"}"#, "(0, 1/2)"),
        (r#"{"phi":"0.333"}"#, "\"p/q\""),
        (r#"{"phi":"1/3","n_grid":[64,32]}"#, "n_grid"),
        (r#"{"phi":"1/3","replicates":1}"#, "replicates"),
        ("{", "config"),
    ];
    for (text, needle) in cases {
        let config = write_config(dir.path(), text);
        let out = run(&["experiment", "--config", &config, "--out", dir.path().join("x").to_str().unwrap()]);
        let err = assert_err(&out);
        assert!(err.contains(needle), "{text}: {err}");
    }
    assert_err(&run(&["experiment", "--config", dir.path().join("missing.json").to_str().unwrap()]));
    assert_err(&run(&["experiment"]));
}

#[test]
fn bad_phi_and_unknown_subcommand() {
    let err = assert_err(&run(&["constant", "--phi", "1/2"]));
    assert!(err.contains("(0, 1/2)"), "{err}");
    let err = assert_err(&run(&["constant", "--phi", "0.25"]));
    assert!(err.contains("p/q"), "{err}");
    let err = assert_err(&run(&["frobnicate"]));
    assert!(err.to_lowercase().contains("usage"), "{err}");
}
