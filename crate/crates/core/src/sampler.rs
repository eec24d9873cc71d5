//! Cantor(phi) draws from the truncated series `sum phi^(i-1) Z_i`, and the
//! split statistics of a batch around the first deleted interval.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{domain, Error, Result};
use crate::params::CantorParams;

/// Absolute slack when locating a floating-point point inside a Cantor
/// interval; grows as `1 / phi^j` in the normalized coordinates of level `j`.
const CLASSIFY_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    points: Vec<f64>,
    params: CantorParams,
    seed: u64,
    replicate_id: u64,
}

impl SampleBatch {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn into_points(self) -> Vec<f64> {
        self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn params(&self) -> &CantorParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replicate_id(&self) -> u64 {
        self.replicate_id
    }
}

/// Random-bit source for one replicate: a ChaCha8 keyed by `seed` on stream
/// `replicate_id`. Point `i` consumes words `i * w .. (i + 1) * w` where
/// `w = ceil(depth / 64)`, so the stream never depends on scheduling.
fn replicate_rng(seed: u64, replicate_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate_id);
    rng
}

/// Horner evaluation of `sum_{i=1}^{D} phi^(i-1) Z_i`, where `digit(i - 1)`
/// says whether `Z_i = 1 - phi`.
fn horner(depth: u32, phi: f64, one_minus_phi: f64, digit: impl Fn(u32) -> bool) -> f64 {
    (0..depth).rev().fold(0.0, |x, i| {
        let z = if digit(i) { one_minus_phi } else { 0.0 };
        phi * x + z
    })
}

/// The truncated-series point for an explicit digit stream. Digits past
/// `params.depth()` are ignored; missing digits count as zero.
pub fn point_from_digits(digits: &[bool], params: &CantorParams) -> f64 {
    let phi = params.phi_f64();
    let one_minus_phi = 1.0 - phi;
    horner(params.depth(), phi, one_minus_phi, |i| {
        digits.get(i as usize).copied().unwrap_or(false)
    })
}

pub fn sample_batch(params: &CantorParams, n: usize, seed: u64, replicate_id: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(domain("sample_batch: n must be at least 1"));
    }
    let mut rng = replicate_rng(seed, replicate_id);
    let depth = params.depth();
    let phi = params.phi_f64();
    let one_minus_phi = {
        let (p, q) = params.phi_parts();
        (q - p) as f64 / q as f64
    };
    let words = depth.div_ceil(64) as usize;
    let mut buf = vec![0u64; words];
    let points = (0..n)
        .map(|_| {
            buf.iter_mut().for_each(|w| *w = rng.next_u64());
            horner(depth, phi, one_minus_phi, |i| {
                buf[(i / 64) as usize] >> (i % 64) & 1 == 1
            })
        })
        .collect();
    Ok(SampleBatch {
        points,
        params: params.clone(),
        seed,
        replicate_id,
    })
}

/// Index, left to right, of the level-`level` Cantor interval holding `x`.
///
/// Fails when `x` sits in a deleted interval of level at most `level`.
pub fn cell_index(x: f64, params: &CantorParams, level: u32) -> Result<usize> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("point {x} is outside [0, 1]")));
    }
    let phi = params.phi_f64();
    let upper_start = 1.0 - phi;
    let mut y = x;
    let mut index = 0usize;
    let mut tolerance = CLASSIFY_TOLERANCE;
    for j in 0..level {
        index <<= 1;
        if y <= phi + tolerance {
            y = (y / phi).min(1.0);
        } else if y >= upper_start - tolerance {
            index |= 1;
            y = ((y - upper_start) / phi).clamp(0.0, 1.0);
        } else {
            return Err(Error::Internal(format!(
                "point {x} lies in a deleted interval of level {}",
                j + 1
            )));
        }
        tolerance /= phi;
    }
    Ok(index)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitStats {
    /// Points in `[0, phi]`.
    pub n_lower: usize,
    /// Largest point in `[0, phi]`, absent when that half is empty.
    pub l_max: Option<f64>,
    /// Smallest point in `[1 - phi, 1]`, absent when that half is empty.
    pub u_min: Option<f64>,
    pub minimum: f64,
    pub maximum: f64,
    /// Counts over the `2^K` level-K intervals, K = occupancy depth.
    pub occupancy: Vec<u32>,
}

impl SplitStats {
    /// Every level-K interval holds at least one point.
    pub fn all_occupied(&self) -> bool {
        self.occupancy.iter().all(|&c| c > 0)
    }

    /// `U - L` when both halves are occupied.
    pub fn cross_gap(&self) -> Option<f64> {
        Some(self.u_min? - self.l_max?)
    }
}

pub fn split_stats(batch: &SampleBatch) -> Result<SplitStats> {
    split_points(batch.points(), batch.params())
}

/// [`split_stats`] for a bare point slice.
pub fn split_points(points: &[f64], params: &CantorParams) -> Result<SplitStats> {
    if points.is_empty() {
        return Err(domain("split_stats: empty batch"));
    }
    let k = params.occupancy_depth();
    let cells = params.occupancy_cells();
    let half = cells / 2;
    let mut occupancy = vec![0u32; cells];
    let mut n_lower = 0;
    let mut l_max: Option<f64> = None;
    let mut u_min: Option<f64> = None;
    let mut minimum = f64::INFINITY;
    let mut maximum = f64::NEG_INFINITY;
    for &x in points {
        let cell = cell_index(x, params, k)?;
        occupancy[cell] += 1;
        if cell < half {
            n_lower += 1;
            l_max = Some(l_max.map_or(x, |l| l.max(x)));
        } else {
            u_min = Some(u_min.map_or(x, |u| u.min(x)));
        }
        minimum = minimum.min(x);
        maximum = maximum.max(x);
    }
    Ok(SplitStats {
        n_lower,
        l_max,
        u_min,
        minimum,
        maximum,
        occupancy,
    })
}
