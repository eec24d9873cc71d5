//! The five estimator targets.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::Signed;

use super::{derive_seed, z_score, Engine, ExperimentConfig, ExperimentResult, ResultRow, Target};
use crate::error::{Error, Result};
use crate::exact_seq::{ratio_to_f64, ExactSequence};
use crate::params::format_rational;
use crate::sampler::{sample_batch, split_stats, SplitStats};
use crate::specfun::rate_constant;
use crate::stats::{binomial_stderr, chi_square_sf, log_log_fit, mean_and_stderr, quantile, quantile_stderr};
use crate::threshold::connectivity_threshold;

/// Deviation bands reported by [`run_convergence`].
pub const CONVERGENCE_DELTAS: [f64; 2] = [0.05, 0.01];

struct Draw {
    r: f64,
    split: SplitStats,
}

fn draw(config: &ExperimentConfig, n: usize, seed: u64, replicate: u64, with_threshold: bool) -> Result<Draw> {
    let batch = sample_batch(&config.params, n, seed, replicate)?;
    let split = split_stats(&batch)?;
    let r = if with_threshold {
        connectivity_threshold(batch.points())?.r
    } else {
        f64::NAN
    };
    Ok(Draw { r, split })
}

/// Per-replicate consequences of the split structure that must hold exactly:
/// on the occupancy event the threshold is the central cross gap and exceeds
/// `1 - 2 phi`; with every point on one side it is at most `phi`.
fn invariant_violations(d: &Draw, n: usize, phi: f64, gap: f64) -> (bool, bool) {
    let s = &d.split;
    let mut broken = !(0.0..=1.0).contains(&d.r);
    let mut below_gap = false;
    if s.all_occupied() {
        broken |= s.cross_gap() != Some(d.r);
        below_gap = d.r < gap;
    }
    if s.n_lower == 0 || s.n_lower == n {
        broken |= d.r > phi;
    }
    (broken, below_gap)
}

fn count(flags: impl Iterator<Item = bool>) -> f64 {
    flags.filter(|&f| f).count() as f64
}

/// Mean of 0/1 values with its binomial standard error.
fn frequency(hits: f64, trials: usize) -> (f64, f64) {
    let p = hits / trials as f64;
    (p, binomial_stderr(p, trials))
}

pub fn run_convergence(config: &ExperimentConfig, engine: &Engine) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let target = Target::Convergence;
    let phi = config.params.phi_f64();
    let gap = config.params.gap_f64();
    let reps = config.replicates;
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let seed = derive_seed(config.master_seed, target, n);
        let draws = engine.map_replicates(reps, |rep| {
            let d = draw(config, n, seed, rep, true)?;
            let (broken, below) = invariant_violations(&d, n, phi, gap);
            Ok((d.r, broken, below))
        })?;
        let mut r: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let (mean, se) = mean_and_stderr(&r);
        r.sort_unstable_by(f64::total_cmp);
        let row = |metric: &str| ResultRow::new(target, metric, n, seed, reps);
        rows.push(row("mean").value(mean, se).against(gap));
        rows.push(row("median").value(quantile(&r, 0.5), quantile_stderr(&r, 0.5)).against(gap));
        rows.push(row("q05").value(quantile(&r, 0.05), quantile_stderr(&r, 0.05)));
        rows.push(row("q95").value(quantile(&r, 0.95), quantile_stderr(&r, 0.95)));
        for delta in CONVERGENCE_DELTAS {
            let (p, se) = frequency(count(r.iter().map(|x| (x - gap).abs() > delta)), reps);
            rows.push(row(&format!("exceed_{delta}")).value(p, se).against(0.0));
        }
        let below = count(draws.iter().map(|d| d.2));
        rows.push(row("event_below_limit").value(below, 0.0).against(0.0));
        let broken = count(draws.iter().map(|d| d.1));
        rows.push(row("invariant_violations").value(broken, 0.0).against(0.0));
    }
    Ok(engine.finish(config, rows, started))
}

/// Monte Carlo `E|R_n - (1 - 2 phi)|` against `2 a_n` (exact, while `n` is
/// within the sequence) and against `2 C(phi) n^(-1/d)`, plus the log-log
/// slope over the grid.
pub fn run_l1_rate(config: &ExperimentConfig, engine: &Engine, sequence: &ExactSequence) -> Result<ExperimentResult> {
    config.validate()?;
    check_sequence_phi(config, sequence)?;
    let started = Instant::now();
    let target = Target::L1Rate;
    let constant = rate_constant(&config.params)?;
    let phi = config.params.phi_f64();
    let gap = config.params.gap_f64();
    let reps = config.replicates;
    let mut rows = Vec::new();
    let mut means = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let seed = derive_seed(config.master_seed, target, n);
        let draws = engine.map_replicates(reps, |rep| {
            let d = draw(config, n, seed, rep, true)?;
            let deviation = (d.r - gap).abs();
            // what the cross-gap identity leaves out of the deviation
            let cross = d.split.cross_gap().map_or(0.0, |c| c - gap);
            let (broken, _) = invariant_violations(&d, n, phi, gap);
            Ok((deviation, deviation - cross, broken))
        })?;
        let deviation: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let omitted: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let (mean, se) = mean_and_stderr(&deviation);
        means.push(mean);

        let asymptotic = 2.0 * constant.c_value * (n as f64).powf(-constant.exponent);
        let exact = (n <= sequence.n_max()).then(|| 2.0 * sequence.to_f64(n));
        let row = |metric: &str| ResultRow::new(target, metric, n, seed, reps);
        rows.push(row("mean_abs_deviation").value(mean, se).against(exact.unwrap_or(asymptotic)));
        if let Some(exact) = exact {
            rows.push(row("ratio_exact").value(mean / exact, se / exact).against(1.0));
        }
        rows.push(row("ratio_asymptotic").value(mean / asymptotic, se / asymptotic).against(1.0));
        let (m, s) = mean_and_stderr(&omitted);
        rows.push(row("omitted_terms").value(m, s).against(0.0));
        let broken = count(draws.iter().map(|d| d.2));
        rows.push(row("invariant_violations").value(broken, 0.0).against(0.0));
    }
    let n_values: Vec<f64> = config.n_grid.iter().map(|&n| n as f64).collect();
    let fit = log_log_fit(&n_values, &means);
    rows.push(
        ResultRow::new(target, "log_log_slope", 0, config.master_seed, reps)
            .value(fit.slope, fit.slope_stderr)
            .against(-constant.exponent),
    );
    Ok(engine.finish(config, rows, started))
}

fn check_sequence_phi(config: &ExperimentConfig, sequence: &ExactSequence) -> Result<()> {
    if sequence.phi() != config.params.phi() {
        return Err(Error::Consistency(format!(
            "config is for phi = {} but the exact sequence is for phi = {}",
            format_rational(&config.params.phi()),
            format_rational(&sequence.phi())
        )));
    }
    Ok(())
}

/// `2^-(n-1) [(2^n - 2 phi) a_n - (1 - phi)]`, computed exactly and then
/// rounded.
pub fn identity_rhs(sequence: &ExactSequence, n: usize) -> Result<f64> {
    if n == 0 || n > sequence.n_max() {
        return Err(Error::Consistency(format!(
            "n = {n} is outside the exact sequence range 1..={}",
            sequence.n_max()
        )));
    }
    let (p, q) = (*sequence.phi().numer(), *sequence.phi().denom());
    let d = BigInt::from(sequence.common_denominator().clone());
    let a = BigInt::from(sequence.numerator(n).clone());
    // a_n = a / d and phi = p / q
    let num = ((BigInt::from(q) << n) - 2 * p) * a - (q - p) * &d;
    let den = BigUint::from(q as u64) * sequence.common_denominator() << (n - 1);
    let magnitude = ratio_to_f64(num.magnitude(), &den);
    Ok(if num.is_negative() { -magnitude } else { magnitude })
}

/// Monte Carlo `E[(U_n - L_n - (1 - 2 phi)) 1{1 <= N_n <= n-1}]` against
/// [`identity_rhs`].
pub fn verify_identity(config: &ExperimentConfig, engine: &Engine, sequence: &ExactSequence) -> Result<ExperimentResult> {
    config.validate()?;
    check_sequence_phi(config, sequence)?;
    if config.max_n() > sequence.n_max() {
        return Err(Error::Consistency(format!(
            "n_grid reaches {} but the exact sequence stops at {}",
            config.max_n(),
            sequence.n_max()
        )));
    }
    let started = Instant::now();
    let target = Target::Identity;
    let gap = config.params.gap_f64();
    let reps = config.replicates;
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let seed = derive_seed(config.master_seed, target, n);
        let lhs = engine.map_replicates(reps, |rep| {
            let d = draw(config, n, seed, rep, false)?;
            Ok(d.split.cross_gap().map_or(0.0, |c| c - gap))
        })?;
        let (mean, se) = mean_and_stderr(&lhs);
        rows.push(
            ResultRow::new(target, "lhs", n, seed, reps)
                .value(mean, se)
                .against(identity_rhs(sequence, n)?),
        );
    }
    Ok(engine.finish(config, rows, started))
}

/// `P(some of the `cells` equally likely cells is empty after n draws)` by
/// inclusion-exclusion.
pub fn escape_probability_exact(cells: usize, n: usize) -> f64 {
    let m = cells as u64;
    // exact while the integers stay moderate, otherwise the float sum (terms
    // then decay fast enough that cancellation is harmless)
    if cells <= 4096 && (n as u64) * (64 - m.leading_zeros() as u64) <= 1 << 22 {
        let mut binom = BigInt::from(1u32);
        let mut sum = BigInt::from(0u32);
        for j in 1..=m {
            binom = binom * (m - j + 1) / j;
            let term = &binom * BigInt::from(m - j).pow(n as u32);
            if j % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        let den = BigUint::from(m).pow(n as u32);
        ratio_to_f64(sum.magnitude(), &den)
    } else {
        let mut log_binom = 0.0f64;
        let mut sum = 0.0;
        for j in 1..m {
            log_binom += ((m - j + 1) as f64).ln() - (j as f64).ln();
            let term = (log_binom + n as f64 * (1.0 - j as f64 / m as f64).ln()).exp();
            sum += if j % 2 == 1 { term } else { -term };
        }
        sum
    }
}

/// Union bound `2^K (1 - 2^-K)^n = 2^K exp(-alpha_K n)`.
pub fn escape_probability_bound(cells: usize, n: usize) -> f64 {
    let m = cells as f64;
    m * (n as f64 * (-1.0 / m).ln_1p()).exp()
}

/// Frequency of a level-K cell left empty. The z-scores use the binomial
/// standard error at the exact probability.
pub fn estimate_escape_probability(config: &ExperimentConfig, engine: &Engine) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let target = Target::EscapeProbability;
    let cells = config.params.occupancy_cells();
    let reps = config.replicates;
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let seed = derive_seed(config.master_seed, target, n);
        let escaped = engine.map_replicates(reps, |rep| Ok(!draw(config, n, seed, rep, false)?.split.all_occupied()))?;
        let (freq, se) = frequency(count(escaped.into_iter()), reps);
        let exact = escape_probability_exact(cells, n);
        let bound = escape_probability_bound(cells, n);
        let null_se = binomial_stderr(exact, reps);
        let row = |metric: &str, reference: f64| {
            let mut row = ResultRow::new(target, metric, n, seed, reps).value(freq, se);
            row.reference = reference;
            row.z = z_score(freq, null_se, reference);
            row
        };
        rows.push(row("frequency", exact));
        rows.push(row("vs_bound", bound));
    }
    Ok(engine.finish(config, rows, started))
}

/// Pooled chi-square of level-K cell counts against the uniform multinomial,
/// and `N_n / n` against 1/2.
pub fn occupancy_test(config: &ExperimentConfig, engine: &Engine) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let target = Target::Occupancy;
    let cells = config.params.occupancy_cells();
    let reps = config.replicates;
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let seed = derive_seed(config.master_seed, target, n);
        let splits = engine.map_replicates(reps, |rep| Ok(draw(config, n, seed, rep, false)?.split))?;
        let mut pooled = vec![0u64; cells];
        for s in &splits {
            for (acc, &c) in pooled.iter_mut().zip(&s.occupancy) {
                *acc += c as u64;
            }
        }
        let stat = crate::stats::pearson_uniform(&pooled);
        let df = (cells - 1) as f64;
        let small = (n as f64) / (cells as f64) < 5.0;
        if small {
            log::warn!("occupancy: n = {n} gives fewer than 5 expected points per cell in a replicate");
        }
        let row = |metric: &str| ResultRow::new(target, metric, n, seed, reps);
        let mut chi = row("chi_square").value(stat, f64::NAN);
        chi.reference = df;
        chi.z = (stat - df) / (2.0 * df).sqrt();
        rows.push(chi);
        rows.push(row("p_value").value(chi_square_sf(stat, df), f64::NAN));
        rows.push(row("small_expected_count").value(if small { 1.0 } else { 0.0 }, 0.0));

        let fractions: Vec<f64> = splits.iter().map(|s| s.n_lower as f64 / n as f64).collect();
        let (mean, se) = mean_and_stderr(&fractions);
        rows.push(row("lower_fraction").value(mean, se).against(0.5));
        let mismatched = count(splits.iter().map(|s| s.occupancy.iter().map(|&c| c as usize).sum::<usize>() != n));
        rows.push(row("count_mismatch").value(mismatched, 0.0).against(0.0));
    }
    Ok(engine.finish(config, rows, started))
}
