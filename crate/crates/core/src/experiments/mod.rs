//! Monte Carlo engine: configuration, deterministic parallel replicates,
//! and result tables.
//!
//! Every `(target, n)` pair gets its own seed derived from the master seed;
//! replicate `r` of that pair reads ChaCha stream `r`. Replicates run in any
//! order on the pool and are reduced sequentially by index, so a result
//! depends only on the config.

mod runs;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_seq::{compute_sequence, ExactSequence};
use crate::params::{default_depth, format_rational, make_params, parse_rational, CantorParams};

pub use runs::{
    escape_probability_bound, escape_probability_exact, estimate_escape_probability, identity_rhs, occupancy_test, run_convergence,
    run_l1_rate, verify_identity,
};

pub const CSV_HEADER: &str = "target,n,estimate,stderr,reference,z,seed";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Convergence,
    L1Rate,
    Identity,
    EscapeProbability,
    Occupancy,
}

impl Target {
    pub const ALL: [Target; 5] = [
        Target::Convergence,
        Target::L1Rate,
        Target::Identity,
        Target::EscapeProbability,
        Target::Occupancy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Convergence => "convergence",
            Target::L1Rate => "l1_rate",
            Target::Identity => "identity",
            Target::EscapeProbability => "escape_probability",
            Target::Occupancy => "occupancy",
        }
    }

    /// Whether the target compares against the exact sequence.
    pub fn needs_sequence(self) -> bool {
        matches!(self, Target::L1Rate | Target::Identity)
    }

    fn seed_tag(self) -> u64 {
        self as u64 + 1
    }
}

pub const DEFAULT_REPLICATES: usize = 200;
pub const DEFAULT_CONVERGENCE_GRID: [usize; 4] = [100, 1_000, 10_000, 100_000];
pub const DEFAULT_RATE_GRID: [usize; 6] = [64, 128, 256, 512, 1024, 2048];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: CantorParams,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub targets: Vec<Target>,
}

/// On-disk shape of [`ExperimentConfig`]; missing fields take defaults.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigRepr {
    phi: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    replicates: Option<usize>,
    #[serde(default)]
    master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    targets: Option<Vec<Target>>,
}

fn config_error(field: &'static str, message: impl Into<String>) -> Error {
    Error::Config {
        field,
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Config with default grid and replicate count for `targets`.
    pub fn with_defaults(params: CantorParams, targets: Vec<Target>, master_seed: u64) -> Result<Self> {
        let config = ExperimentConfig {
            n_grid: default_grid(&targets),
            params,
            replicates: DEFAULT_REPLICATES,
            master_seed,
            targets,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(config_error("n_grid", "must list at least one sample size"));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 2) {
            return Err(config_error("n_grid", format!("sample sizes must be at least 2, got {n}")));
        }
        if let Some(w) = self.n_grid.windows(2).find(|w| w[0] >= w[1]) {
            return Err(config_error(
                "n_grid",
                format!("must be strictly increasing, but {} is followed by {}", w[0], w[1]),
            ));
        }
        if self.replicates < 2 {
            return Err(config_error("replicates", format!("must be at least 2, got {}", self.replicates)));
        }
        if self.targets.is_empty() {
            return Err(config_error("targets", "must name at least one target"));
        }
        let unique: BTreeSet<_> = self.targets.iter().collect();
        if unique.len() != self.targets.len() {
            return Err(config_error("targets", "lists a target more than once"));
        }
        Ok(())
    }

    pub fn max_n(&self) -> usize {
        self.n_grid.last().copied().unwrap_or(0)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: ConfigRepr = serde_json::from_str(text).map_err(|e| config_error("config", e.to_string()))?;
        let phi = parse_rational(&repr.phi).map_err(|e| config_error("phi", format!("{e}; phi must be a rational \"p/q\" string")))?;
        let depth = repr.depth.unwrap_or_else(|| default_depth(&phi));
        let params = make_params(phi, depth).map_err(|e| match e {
            Error::PhiOutOfRange { .. } => config_error("phi", e.to_string()),
            other => config_error("depth", other.to_string()),
        })?;
        let targets = repr.targets.unwrap_or_else(|| vec![Target::Convergence]);
        let config = ExperimentConfig {
            n_grid: repr.n_grid.unwrap_or_else(|| default_grid(&targets)),
            params,
            replicates: repr.replicates.unwrap_or(DEFAULT_REPLICATES),
            master_seed: repr.master_seed,
            targets,
        };
        config.validate()?;
        Ok(config)
    }

    /// Canonical JSON with every field written out.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn default_grid(targets: &[Target]) -> Vec<usize> {
    if targets == [Target::Convergence] {
        DEFAULT_CONVERGENCE_GRID.to_vec()
    } else {
        DEFAULT_RATE_GRID.to_vec()
    }
}

impl Serialize for ExperimentConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigRepr {
            phi: format_rational(&self.params.phi()),
            depth: Some(self.params.depth()),
            n_grid: Some(self.n_grid.clone()),
            replicates: Some(self.replicates),
            master_seed: self.master_seed,
            targets: Some(self.targets.clone()),
        }
        .serialize(s)
    }
}

/// One line of a result table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    /// `target.metric`, e.g. `convergence.median`.
    pub target: String,
    /// Sample size; 0 for rows that summarize the whole grid.
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub replicates: usize,
    /// NaN when the metric has no reference value.
    pub reference: f64,
    pub z: f64,
    pub seed: u64,
}

impl ResultRow {
    fn new(target: Target, metric: &str, n: usize, seed: u64, replicates: usize) -> Self {
        ResultRow {
            target: format!("{}.{metric}", target.name()),
            n,
            estimate: f64::NAN,
            stderr: f64::NAN,
            replicates,
            reference: f64::NAN,
            z: f64::NAN,
            seed,
        }
    }

    fn value(mut self, estimate: f64, stderr: f64) -> Self {
        self.estimate = estimate;
        self.stderr = stderr;
        self
    }

    /// Sets the reference and the z-score against it.
    fn against(mut self, reference: f64) -> Self {
        self.reference = reference;
        self.z = z_score(self.estimate, self.stderr, reference);
        self
    }
}

pub(crate) fn z_score(estimate: f64, stderr: f64, reference: f64) -> f64 {
    if estimate == reference {
        0.0
    } else {
        (estimate - reference) / stderr
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultManifest {
    pub version: String,
    pub threads: usize,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub manifest: ResultManifest,
}

impl ExperimentResult {
    pub fn rows_for<'a>(&'a self, target: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.target == target)
    }

    pub fn row(&self, target: &str, n: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.target == target && r.n == n)
    }

    /// The table as CSV. Floats carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.target,
                r.n,
                fmt_float(r.estimate),
                fmt_float(r.stderr),
                fmt_float(r.reference),
                fmt_float(r.z),
                r.seed
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Thread pool that runs replicates. The worker count never changes results.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `threads = 0` uses one worker per available core.
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Internal(format!("cannot start worker pool: {e}")))?;
        Ok(Engine { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f(0), ..., f(count - 1)` in index order.
    pub(crate) fn map_replicates<T, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.pool.install(|| (0..count as u64).into_par_iter().map(&f).collect())
    }

    fn finish(&self, config: &ExperimentConfig, rows: Vec<ResultRow>, started: Instant) -> ExperimentResult {
        ExperimentResult {
            config: config.clone(),
            rows,
            manifest: ResultManifest {
                version: env!("CARGO_PKG_VERSION").to_string(),
                threads: self.threads(),
                wall_time_secs: started.elapsed().as_secs_f64(),
            },
        }
    }
}

/// Seed for the replicates of `(target, n)`.
pub fn derive_seed(master_seed: u64, target: Target, n: usize) -> u64 {
    let mut x = master_seed;
    for word in [target.seed_tag(), n as u64] {
        x = splitmix(x ^ splitmix(word));
    }
    x
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs every target of the config in order, computing the exact sequence
/// once when a target needs it.
pub fn run_experiment(config: &ExperimentConfig, engine: &Engine) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let sequence = if config.targets.iter().any(|t| t.needs_sequence()) {
        Some(compute_sequence(config.params.phi(), config.max_n())?)
    } else {
        None
    };
    run_with_sequence(config, engine, sequence.as_ref(), started)
}

/// [`run_experiment`] reusing an already computed sequence.
pub fn run_experiment_with(config: &ExperimentConfig, engine: &Engine, sequence: &ExactSequence) -> Result<ExperimentResult> {
    config.validate()?;
    run_with_sequence(config, engine, Some(sequence), Instant::now())
}

fn run_with_sequence(
    config: &ExperimentConfig,
    engine: &Engine,
    sequence: Option<&ExactSequence>,
    started: Instant,
) -> Result<ExperimentResult> {
    let need = || sequence.ok_or_else(|| Error::Internal("exact sequence missing".into()));
    let mut rows = Vec::new();
    for target in &config.targets {
        let part = match target {
            Target::Convergence => run_convergence(config, engine)?,
            Target::L1Rate => run_l1_rate(config, engine, need()?)?,
            Target::Identity => verify_identity(config, engine, need()?)?,
            Target::EscapeProbability => estimate_escape_probability(config, engine)?,
            Target::Occupancy => occupancy_test(config, engine)?,
        };
        rows.extend(part.rows);
    }
    Ok(engine.finish(config, rows, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Rational;

    fn third() -> CantorParams {
        CantorParams::new(Rational::new(1, 3)).unwrap()
    }

    #[test]
    fn config_defaults() {
        let c = ExperimentConfig::from_json(r#"{"phi":"1/3"}"#).unwrap();
        assert_eq!(c.params, third());
        assert_eq!(c.n_grid, DEFAULT_CONVERGENCE_GRID.to_vec());
        assert_eq!(c.replicates, DEFAULT_REPLICATES);
        assert_eq!(c.targets, vec![Target::Convergence]);

        let c = ExperimentConfig::from_json(r#"{"phi":"1/3","targets":["l1_rate"]}"#).unwrap();
        assert_eq!(c.n_grid, DEFAULT_RATE_GRID.to_vec());
    }

    #[test]
    fn config_errors_name_fields() {
        let err = |text: &str| ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(err(r#"{"phi":"1/2"}"#).contains("(0, 1/2)"));
        assert!(err(r#"{"phi":"0.333"}"#).contains("\"p/q\""));
        assert!(err(r#"{"phi":"1/3","n_grid":[10,10]}"#).contains("`n_grid`"));
        assert!(err(r#"{"phi":"1/3","n_grid":[1,10]}"#).contains("`n_grid`"));
        assert!(err(r#"{"phi":"1/3","replicates":1}"#).contains("`replicates`"));
        assert!(err(r#"{"phi":"1/3","targets":[]}"#).contains("`targets`"));
        assert!(err(r#"{"phi":"1/3","depth":0}"#).contains("`depth`"));
        assert!(err(r#"{"phi":"1/3","bogus":1}"#).contains("bogus"));
        assert!(err("not json").contains("`config`"));
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{"phi":"2/5","depth":30,"n_grid":[8,16],"replicates":50,"master_seed":9,
                       "targets":["identity","occupancy"]}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn seeds_differ_by_target_and_n() {
        let a = derive_seed(1, Target::Convergence, 100);
        assert_ne!(a, derive_seed(1, Target::Convergence, 101));
        assert_ne!(a, derive_seed(1, Target::L1Rate, 100));
        assert_ne!(a, derive_seed(2, Target::Convergence, 100));
        assert_eq!(a, derive_seed(1, Target::Convergence, 100));
    }

    #[test]
    fn csv_shape() {
        let config = ExperimentConfig {
            params: third(),
            n_grid: vec![4, 8],
            replicates: 20,
            master_seed: 5,
            targets: vec![Target::EscapeProbability],
        };
        let result = run_experiment(&config, &Engine::new(1).unwrap()).unwrap();
        let csv = result.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        for line in lines {
            assert_eq!(line.split(',').count(), 7, "{line}");
        }
    }
}
