//! Cross-module properties of the sampler, the exact sequence, and the
//! experiment engine.

use cantor_rgg::experiments::{
    escape_probability_bound, identity_rhs, occupancy_test, run_experiment, run_l1_rate, Engine, ExperimentConfig,
    Target,
};
use cantor_rgg::stats::{dkw_radius, ks_statistic};
use cantor_rgg::{
    cantor_cdf, compute_sequence, rate_constant, sample_batch, sequence_asymptotic_ratio, CantorParams, Rational,
};
use proptest::prelude::*;

fn params(p: i64, q: i64) -> CantorParams {
    CantorParams::new(Rational::new(p, q)).unwrap()
}

fn config(params: CantorParams, targets: Vec<Target>, n_grid: Vec<usize>, replicates: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        params,
        n_grid,
        replicates,
        master_seed: seed,
        targets,
    }
}

#[test]
fn empirical_cdf_within_dkw_band() {
    for (p, q) in [(1, 4), (1, 3), (2, 5)] {
        let params = params(p, q);
        for seed in 0..3 {
            let mut points = sample_batch(&params, 5000, seed, 0).unwrap().into_points();
            points.sort_unstable_by(f64::total_cmp);
            let (d, err) = ks_statistic(&points, |x| {
                let v = cantor_cdf(x, &params).unwrap();
                (v.value, v.error_bound)
            });
            assert!(d + err <= dkw_radius(points.len(), 1e-3), "phi={p}/{q} seed={seed}: D = {d}");
        }
    }
}

#[test]
fn occupancy_p_values_look_uniform() {
    let engine = Engine::new(0).unwrap();
    let mut below = 0;
    for seed in 0..100 {
        let c = config(params(1, 3), vec![Target::Occupancy], vec![64], 100, seed);
        let result = occupancy_test(&c, &engine).unwrap();
        if result.row("occupancy.p_value", 64).unwrap().estimate < 0.05 {
            below += 1;
        }
    }
    assert!((1..=10).contains(&below), "{below} of 100 p-values below 0.05");
}

#[test]
fn lower_fraction_is_one_half() {
    let (n, reps) = (40, 5000);
    let c = config(params(2, 5), vec![Target::Occupancy], vec![n], reps, 8);
    let result = occupancy_test(&c, &Engine::new(0).unwrap()).unwrap();
    let row = result.row("occupancy.lower_fraction", n).unwrap();
    let band = 3.0 / (2.0 * ((n * reps) as f64).sqrt());
    assert!((row.estimate - 0.5).abs() <= band, "{}", row.estimate);
    assert_eq!(result.row("occupancy.count_mismatch", n).unwrap().estimate, 0.0);
}

#[test]
fn escape_frequency_respects_bound_and_vanishes() {
    let grid = vec![8, 16, 32, 64, 128, 256];
    let c = config(params(1, 4), vec![Target::EscapeProbability], grid.clone(), 20_000, 2);
    let result = run_experiment(&c, &Engine::new(0).unwrap()).unwrap();
    let cells = c.params.occupancy_cells();
    for &n in &grid {
        let row = result.row("escape_probability.vs_bound", n).unwrap();
        assert_eq!(row.reference, escape_probability_bound(cells, n));
        assert!(row.z <= 3.0, "n={n}: z = {}", row.z);
        let exact = result.row("escape_probability.frequency", n).unwrap();
        assert!(exact.reference <= row.reference);
    }
    assert_eq!(result.row("escape_probability.frequency", 256).unwrap().estimate, 0.0);
}

#[test]
fn l1_deviation_decreases_along_grid() {
    let grid = vec![16, 32, 64, 128, 256];
    let seq = compute_sequence(Rational::new(1, 3), 256).unwrap();
    let c = config(params(1, 3), vec![Target::L1Rate], grid.clone(), 3000, 5);
    let result = run_l1_rate(&c, &Engine::new(0).unwrap(), &seq).unwrap();
    let rows: Vec<_> = result.rows_for("l1_rate.mean_abs_deviation").collect();
    assert_eq!(rows.len(), grid.len());
    for w in rows.windows(2) {
        assert!(w[0].estimate >= 0.0);
        assert!(w[1].estimate <= w[0].estimate + 2.0 * w[0].stderr.max(w[1].stderr));
    }
    for &n in &grid {
        assert_eq!(result.row("l1_rate.invariant_violations", n).unwrap().estimate, 0.0);
        // for phi <= 1/3 the deviation is exactly the cross gap when both halves are occupied
        let omitted = result.row("l1_rate.omitted_terms", n).unwrap();
        assert!(omitted.estimate.abs() <= 4.0 * omitted.stderr.max(1e-15), "n={n}");
    }
}

#[test]
fn asymptotic_reference_beyond_sequence() {
    let seq = compute_sequence(Rational::new(1, 3), 32).unwrap();
    let c = config(params(1, 3), vec![Target::L1Rate], vec![16, 64], 200, 1);
    let result = run_l1_rate(&c, &Engine::new(1).unwrap(), &seq).unwrap();
    assert!(result.row("l1_rate.ratio_exact", 16).is_some());
    assert!(result.row("l1_rate.ratio_exact", 64).is_none());
    let constant = rate_constant(&c.params).unwrap();
    let reference = result.row("l1_rate.mean_abs_deviation", 64).unwrap().reference;
    let expected = 2.0 * constant.c_value * 64f64.powf(-constant.exponent);
    assert!(((reference - expected) / expected).abs() < 1e-15);
}

#[test]
fn identity_rhs_positive() {
    for (p, q) in [(1, 4), (1, 3), (2, 5)] {
        let seq = compute_sequence(Rational::new(p, q), 200).unwrap();
        assert_eq!(identity_rhs(&seq, 1).unwrap(), 0.0);
        for n in 2..=200 {
            assert!(identity_rhs(&seq, n).unwrap() > 0.0, "phi={p}/{q} n={n}");
        }
    }
}

#[test]
fn rho_stays_bounded() {
    for (p, q) in [(1, 10), (1, 4), (2, 5), (49, 100)] {
        let seq = compute_sequence(Rational::new(p, q), 300).unwrap();
        let constant = rate_constant(&params(p, q)).unwrap();
        let rho = sequence_asymptotic_ratio(&seq, &constant).unwrap();
        assert!(rho.iter().all(|&r| r > 0.0 && r < 3.0), "phi={p}/{q}");
        assert!((rho[299] - 1.0).abs() < 0.1, "phi={p}/{q}: rho_300 = {}", rho[299]);
    }
}

#[test]
fn results_independent_of_thread_count() {
    let c = config(params(2, 5), Target::ALL.to_vec(), vec![4, 9, 20], 300, 77);
    let one = run_experiment(&c, &Engine::new(1).unwrap()).unwrap();
    let four = run_experiment(&c, &Engine::new(4).unwrap()).unwrap();
    assert_eq!(one.to_csv(), four.to_csv());
    let bits = |r: &cantor_rgg::ExperimentResult| -> Vec<u64> { r.rows.iter().map(|row| row.estimate.to_bits()).collect() };
    assert_eq!(bits(&one), bits(&four));
}

fn valid_configs() -> impl Strategy<Value = ExperimentConfig> {
    let phi = (3i64..200).prop_flat_map(|q| (1..=(q - 1) / 2, Just(q)));
    let grid = prop::collection::btree_set(2usize..5000, 1..6);
    let targets = prop::sample::subsequence(Target::ALL.to_vec(), 1..=5);
    (phi, 1u32..80, grid, 2usize..100_000, any::<u64>(), targets).prop_map(|((p, q), depth, grid, reps, seed, targets)| {
        ExperimentConfig {
            params: CantorParams::new(Rational::new(p, q)).unwrap().with_depth(depth).unwrap(),
            n_grid: grid.into_iter().collect(),
            replicates: reps,
            master_seed: seed,
            targets,
        }
    })
}

proptest! {
    #[test]
    fn config_round_trips(c in valid_configs()) {
        prop_assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }
}
