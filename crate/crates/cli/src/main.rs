use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cantor_rgg::experiments::{run_experiment, Engine, ExperimentConfig, Target};
use cantor_rgg::{compute_sequence, connectivity_threshold, parse_rational, sample_batch, verify, CantorParams};
use cantor_rgg_cli::{
    constant_json, parse_config, points_text, read_points, resolve_out_dir, sequence_csv, write_run, RunManifest,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cantor-rgg", version, about = "Random geometric graphs on Cantor-distributed points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one batch of Cantor(phi) points, one per line.
    Sample {
        #[arg(long, default_value = "1/3")]
        phi: String,
        #[arg(long, short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
        /// Series truncation depth; defaults to about one ulp.
        #[arg(long)]
        depth: Option<u32>,
        /// File to write instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Widest gap of a point set.
    Threshold {
        #[arg(long)]
        points_file: PathBuf,
    },
    /// Exact expected minima a_1..a_N as CSV.
    Sequence {
        #[arg(long, default_value = "1/3")]
        phi: String,
        #[arg(long)]
        n_max: usize,
        /// Largest n whose exact value is written in reduced form.
        #[arg(long, default_value_t = 256)]
        exact_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate constant C(phi) and the dimension as JSON.
    Constant {
        #[arg(long, default_value = "1/3")]
        phi: String,
    },
    /// Run a Monte Carlo experiment and write results.csv plus manifest.json.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Without --config: phi for a default config.
        #[arg(long)]
        phi: Option<String>,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; falls back to $CANTOR_RGG_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads, 0 for one per core. Results do not depend on it.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

fn params_for(phi: &str, depth: Option<u32>) -> Result<CantorParams> {
    let phi = parse_rational(phi).context("phi must be a rational \"p/q\" string")?;
    let params = CantorParams::new(phi)?;
    Ok(match depth {
        Some(d) => params.with_depth(d)?,
        None => params,
    })
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn experiment_config(config: Option<PathBuf>, phi: Option<String>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = match (config, phi) {
        (Some(path), None) => parse_config(&path)?,
        (None, Some(phi)) => ExperimentConfig::with_defaults(params_for(&phi, None)?, vec![Target::Convergence], 0)?,
        (Some(_), Some(_)) => bail!("give either --config or --phi, not both"),
        (None, None) => bail!("experiment needs --config PATH or --phi P/Q"),
    };
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sample {
            phi,
            n,
            seed,
            replicate,
            depth,
            out,
        } => {
            let params = params_for(&phi, depth)?;
            let batch = sample_batch(&params, n, seed, replicate)?;
            emit(out.as_ref(), &points_text(batch.points()))?;
        }
        Command::Threshold { points_file } => {
            let points = read_points(&points_file)?;
            let t = connectivity_threshold(&points)?;
            println!("r,gap_left,gap_right");
            println!("{},{},{}", t.r, t.gap_left, t.gap_right);
        }
        Command::Sequence {
            phi,
            n_max,
            exact_max,
            out,
        } => {
            let params = params_for(&phi, None)?;
            let seq = compute_sequence(params.phi(), n_max)?;
            emit(out.as_ref(), &sequence_csv(&seq, &params, exact_max)?)?;
        }
        Command::Constant { phi } => {
            println!("{}", constant_json(&params_for(&phi, None)?)?);
        }
        Command::Experiment {
            config,
            phi,
            seed,
            out,
            threads,
        } => {
            let config = experiment_config(config, phi, seed)?;
            let engine = Engine::new(threads)?;
            let started = chrono::Utc::now().to_rfc3339();
            let result = run_experiment(&config, &engine)?;
            let finished = chrono::Utc::now().to_rfc3339();
            let manifest = RunManifest::new(&result, started, finished);
            let dir = resolve_out_dir(out.as_deref());
            for path in write_run(&dir, &result, &manifest)? {
                println!("{}", path.display());
            }
        }
        Command::Verify { threads } => {
            let reports = verify::run_all(threads, |r| println!("{}", r.line()))?;
            let failed = reports.iter().filter(|r| !r.passed).count();
            println!("{} of {} checks passed", reports.len() - failed, reports.len());
            if failed > 0 {
                eprintln!("error: {failed} acceptance checks failed");
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
