//! Pieces of the `cantor-rgg` command line that are worth testing on their
//! own: config loading, table formatting, and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cantor_rgg::exact_seq::sequence_asymptotic_ratio;
use cantor_rgg::{format_rational, rate_constant, CantorParams, ExactSequence, ExperimentConfig, ExperimentResult};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CANTOR_RGG_OUT";
pub const DEFAULT_OUT_DIR: &str = "cantor-rgg-out";
pub const RESULTS_CSV: &str = "results.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("bad config {}", path.display()))
}

/// Hex SHA-256 of the canonical config JSON, so formatting and omitted
/// defaults do not change the hash.
pub fn config_hash(config: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(config.to_json().as_bytes()))
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub started: String,
    pub finished: String,
    pub version: String,
    pub threads: usize,
    pub wall_time_secs: f64,
    /// Output files, relative to the run directory.
    pub outputs: Vec<String>,
    pub config: ExperimentConfig,
    /// Seed used for each `(target, n)` row.
    pub seeds: Vec<SeedEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedEntry {
    pub target: String,
    pub n: usize,
    pub seed: u64,
}

impl RunManifest {
    pub fn new(result: &ExperimentResult, started: String, finished: String) -> Self {
        RunManifest {
            config_hash: config_hash(&result.config),
            master_seed: result.config.master_seed,
            started,
            finished,
            version: result.manifest.version.clone(),
            threads: result.manifest.threads,
            wall_time_secs: result.manifest.wall_time_secs,
            outputs: vec![RESULTS_CSV.to_string()],
            config: result.config.clone(),
            seeds: result
                .rows
                .iter()
                .map(|r| SeedEntry {
                    target: r.target.clone(),
                    n: r.n,
                    seed: r.seed,
                })
                .collect(),
        }
    }
}

/// Writes the CSV table and the manifest into `dir`, creating it if needed.
pub fn write_run(dir: &Path, result: &ExperimentResult, manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let csv = dir.join(RESULTS_CSV);
    fs::write(&csv, result.to_csv()).with_context(|| format!("cannot write {}", csv.display()))?;
    let json = dir.join(MANIFEST_JSON);
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&json, text).with_context(|| format!("cannot write {}", json.display()))?;
    Ok(vec![csv, json])
}

/// Output directory: the flag, then the environment, then a fixed default.
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// CSV `n,a_n,a_n_float,rho`. The exact column is filled for `n <= exact_max`
/// only, since reducing `a_n` costs a gcd on integers of about `n^2 / 2` bits.
pub fn sequence_csv(seq: &ExactSequence, params: &CantorParams, exact_max: usize) -> Result<String> {
    let constant = rate_constant(params)?;
    let rho = sequence_asymptotic_ratio(seq, &constant)?;
    let mut out = String::from("n,a_n,a_n_float,rho\n");
    for n in 1..=seq.n_max() {
        let exact = if n <= exact_max {
            let v = seq.value(n);
            format!("{}/{}", v.numer(), v.denom())
        } else {
            String::new()
        };
        let _ = writeln!(out, "{n},{exact},{:.16e},{:.16e}", seq.to_f64(n), rho[n - 1]);
    }
    Ok(out)
}

#[derive(Serialize)]
struct ConstantReport {
    phi: String,
    c_value: f64,
    dim: f64,
    inverse_dim: f64,
    gamma_factor: f64,
    zeta_factor: f64,
    est_error: f64,
}

pub fn constant_json(params: &CantorParams) -> Result<String> {
    let c = rate_constant(params)?;
    let report = ConstantReport {
        phi: format_rational(&params.phi()),
        c_value: c.c_value,
        dim: params.dim(),
        inverse_dim: c.exponent,
        gamma_factor: c.gamma_factor,
        zeta_factor: c.zeta_factor,
        est_error: c.est_error,
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

/// Points file: one decimal per line; blank lines and `#` comments skipped.
pub fn read_points(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read points file {}", path.display()))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x: f64 = line
            .parse()
            .with_context(|| format!("{}:{}: `{line}` is not a number", path.display(), i + 1))?;
        if !x.is_finite() {
            bail!("{}:{}: `{line}` is not finite", path.display(), i + 1);
        }
        points.push(x);
    }
    if points.is_empty() {
        bail!("{} holds no points", path.display());
    }
    Ok(points)
}

pub fn points_text(points: &[f64]) -> String {
    let mut out = String::with_capacity(points.len() * 24);
    for x in points {
        let _ = writeln!(out, "{x:.16e}");
    }
    out
}
