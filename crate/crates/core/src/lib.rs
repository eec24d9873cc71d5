//! Random geometric graphs on Cantor-distributed points.
//!
//! The connectivity threshold `R_n` of `n` i.i.d. Cantor(phi) points tends to
//! `1 - 2 phi`, and `E|R_n - (1 - 2 phi)|` decays like `2 C(phi) n^(-1/d_phi)`.
//! This crate samples the points, computes thresholds, evaluates the exact
//! expected-minimum sequence and the rate constant, and runs the Monte Carlo
//! checks that tie them together.

pub mod error;
pub mod exact_seq;
pub mod experiments;
pub mod params;
pub mod sampler;
pub mod specfun;
pub mod stats;
pub mod threshold;
pub mod union_find;
pub mod verify;

pub use error::{Error, Result};
pub use experiments::{run_experiment, Engine, ExperimentConfig, ExperimentResult, ResultRow, Target};
pub use exact_seq::{
    compute_sequence, min_expectation_oracle, sequence_asymptotic_ratio, Bracket, ExactSequence,
};
pub use params::{
    cantor_cdf, default_depth, format_rational, make_params, parse_rational, theoretical_limit,
    CantorParams, CdfValue, Rational,
};
pub use sampler::{sample_batch, split_points, split_stats, SampleBatch, SplitStats};
pub use specfun::{gamma, rate_constant, zeta, RateConstant};
pub use threshold::{connectivity_threshold, is_connected, threshold_by_search, Method, ThresholdResult};
