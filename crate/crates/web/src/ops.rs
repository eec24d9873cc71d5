use cantor_rgg::error::{Error, Result};
use cantor_rgg::{
    cantor_cdf, compute_sequence, connectivity_threshold, parse_rational, rate_constant, sample_batch,
    sequence_asymptotic_ratio, CantorParams,
};

/// Sizes beyond these would stall a browser tab.
pub const MAX_RESOLUTION: usize = 4096;
pub const MAX_POINTS: usize = 1_000_000;
pub const MAX_SEQUENCE: usize = 512;
pub const MAX_TRACE: usize = 200_000;

fn limit(what: &str, value: usize, max: usize) -> Result<()> {
    if value == 0 || value > max {
        return Err(Error::Domain(format!("{what} must be in 1..={max}, got {value}")));
    }
    Ok(())
}

pub fn params(phi: &str) -> Result<CantorParams> {
    CantorParams::new(parse_rational(phi)?)
}

pub fn cdf_curve(phi: &str, resolution: usize) -> Result<Vec<f64>> {
    limit("resolution", resolution, MAX_RESOLUTION)?;
    let params = params(phi)?;
    let step = 1.0 / (resolution.max(2) - 1) as f64;
    (0..resolution)
        .map(|i| cantor_cdf((i as f64 * step).min(1.0), &params).map(|v| v.value))
        .collect()
}

pub fn sample_histogram(phi: &str, n: usize, bins: usize, seed: u64) -> Result<Vec<u32>> {
    limit("n", n, MAX_POINTS)?;
    limit("bins", bins, MAX_RESOLUTION)?;
    let batch = sample_batch(&params(phi)?, n, seed, 0)?;
    let mut counts = vec![0u32; bins];
    for &x in batch.points() {
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    Ok(counts)
}

pub fn threshold_trace(phi: &str, n_max: usize, seed: u64) -> Result<Vec<f64>> {
    limit("n_max", n_max, MAX_TRACE)?;
    let points = sample_batch(&params(phi)?, n_max, seed, 0)?.into_points();
    // about eight sizes per doubling
    let mut sizes: Vec<usize> = (0..)
        .map(|i| 2f64.powf(1.0 + i as f64 / 8.0).round() as usize)
        .take_while(|&k| k < n_max)
        .collect();
    sizes.push(n_max);
    sizes.dedup();
    let mut out = Vec::with_capacity(2 * sizes.len());
    for k in sizes {
        out.push(k as f64);
        out.push(connectivity_threshold(&points[..k])?.r);
    }
    Ok(out)
}

pub fn rho_sequence(phi: &str, n_max: usize) -> Result<Vec<f64>> {
    limit("n_max", n_max, MAX_SEQUENCE)?;
    let params = params(phi)?;
    let seq = compute_sequence(params.phi(), n_max)?;
    sequence_asymptotic_ratio(&seq, &rate_constant(&params)?)
}
