//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain function of the same name in
//! [`ops`], which is what the native tests exercise.

use wasm_bindgen::prelude::*;

pub mod ops;

fn js(e: cantor_rgg::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Cantor CDF on `resolution` evenly spaced points of `[0, 1]`.
#[wasm_bindgen]
pub fn cdf_curve(phi: &str, resolution: usize) -> Result<Vec<f64>, JsError> {
    ops::cdf_curve(phi, resolution).map_err(js)
}

/// Histogram of `n` sampled points over `bins` equal bins.
#[wasm_bindgen]
pub fn sample_histogram(phi: &str, n: usize, bins: usize, seed: u64) -> Result<Vec<u32>, JsError> {
    ops::sample_histogram(phi, n, bins, seed).map_err(js)
}

/// Flattened `(k, R_k)` pairs for growing prefixes of one sample.
#[wasm_bindgen]
pub fn threshold_trace(phi: &str, n_max: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    ops::threshold_trace(phi, n_max, seed).map_err(js)
}

/// `rho_n = a_n n^(1/d) / C(phi)` for `n = 1..=n_max`.
#[wasm_bindgen]
pub fn rho_sequence(phi: &str, n_max: usize) -> Result<Vec<f64>, JsError> {
    ops::rho_sequence(phi, n_max).map_err(js)
}

/// `1 - 2 phi`, the limit of the threshold.
#[wasm_bindgen]
pub fn threshold_limit(phi: &str) -> Result<f64, JsError> {
    ops::params(phi).map(|p| p.gap_f64()).map_err(js)
}
