//! Exact expected minimum `a_n = E[min(X_1..X_n)]` of Cantor(phi) samples.
//!
//! With `phi = p/q`, the recursion
//!
//! ```text
//! (q 2^n - 2p) a_n = (q - p) + p * sum_{k=1}^{n-1} C(n,k) a_k
//! ```
//!
//! is solved over the fixed common denominator `D = prod_{j<=N} (q 2^j - 2p)`,
//! so every `a_k D` is an integer. The binomial sums come from the Euler
//! transform triangle `T(j, m) = sum_i C(j, i) a_{m+i}`: each new `a_n`
//! extends one anti-diagonal using only additions, and the sum needed for
//! `a_{n+1}` falls out of the same sweep. Cost is `O(N^2)` additions of
//! `N^2 / 2`-bit integers.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{domain, Error, Result};
use crate::params::{format_rational, CantorParams, Rational};
use crate::specfun::RateConstant;

/// Largest `n_max` computed without a warning.
pub const DESK_SCALE_LIMIT: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSequence {
    phi: Rational,
    denominator: BigUint,
    /// `numerators[k - 1] = a_k * denominator`.
    numerators: Vec<BigUint>,
}

impl ExactSequence {
    pub fn phi(&self) -> Rational {
        self.phi
    }

    pub fn n_max(&self) -> usize {
        self.numerators.len()
    }

    /// Shared denominator of every stored value (not reduced).
    pub fn common_denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn numerator(&self, n: usize) -> &BigUint {
        &self.numerators[n - 1]
    }

    /// `a_n` in lowest terms. Reduction costs a big gcd, which grows
    /// quadratically with the bit length (about `n^2 / 2` bits).
    pub fn value(&self, n: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.numerators[n - 1].clone()),
            BigInt::from(self.denominator.clone()),
        )
    }

    pub fn to_f64(&self, n: usize) -> f64 {
        ratio_to_f64(&self.numerators[n - 1], &self.denominator)
    }

    pub fn values_f64(&self) -> Vec<f64> {
        (1..=self.n_max()).map(|n| self.to_f64(n)).collect()
    }
}

/// Quotient of two large integers, correctly rounded up to a few ulps.
pub(crate) fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    let shift = den.bits().saturating_sub(120);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

fn step_factor(p: u64, q: u64, j: usize) -> BigUint {
    (BigUint::from(q) << j) - BigUint::from(2 * p)
}

pub fn compute_sequence(phi: Rational, n_max: usize) -> Result<ExactSequence> {
    CantorParams::new(phi)?;
    if n_max == 0 {
        return Err(domain("compute_sequence: n_max must be at least 1"));
    }
    if n_max > DESK_SCALE_LIMIT {
        log::warn!("compute_sequence: n_max = {n_max} exceeds {DESK_SCALE_LIMIT}; cost grows like n^4");
    }
    let p = *phi.numer() as u64;
    let q = *phi.denom() as u64;

    let denominator = (1..=n_max).fold(BigUint::from(1u32), |acc, j| acc * step_factor(p, q, j));
    let base = &denominator * (q - p);
    // T entries stay below 2^N D and the running sum below N 2^N D
    let width_bits = denominator.bits() as usize + n_max + (usize::BITS - n_max.leading_zeros()) as usize + 4;
    let width = width_bits.div_ceil(64);

    let mut numerators = Vec::with_capacity(n_max);
    // anti-diagonal n - 1 of the triangle, diag[j] = T(j, n - 1 - j) * D
    let mut diag: Vec<Vec<u64>> = vec![vec![0; width]];
    let mut running = vec![0u64; width];
    let mut total = vec![0u64; width];
    // sum_{k<n} C(n,k) a_k D
    let mut binomial_sum = BigUint::zero();

    for n in 1..=n_max {
        let (value, rem) = (&base + &binomial_sum * p).div_rem(&step_factor(p, q, n));
        if !rem.is_zero() {
            return Err(Error::Internal(format!("a_{n} is not an integer multiple of 1/D")));
        }
        if n < n_max {
            let value_limbs = kernel::to_limbs(&value, width);
            running.fill(0);
            total.fill(0);
            for cell in diag.iter_mut() {
                kernel::sweep(&mut running, cell, &value_limbs, &mut total);
            }
            diag.insert(0, value_limbs);
            binomial_sum = kernel::from_limbs(&total) + &value * (n as u64 + 1);
        }
        numerators.push(value);
    }
    Ok(ExactSequence {
        phi,
        denominator,
        numerators,
    })
}

mod kernel {
    use num_bigint::BigUint;

    pub fn to_limbs(x: &BigUint, width: usize) -> Vec<u64> {
        let mut limbs = x.to_u64_digits();
        assert!(limbs.len() <= width, "value exceeds the fixed limb width");
        limbs.resize(width, 0);
        limbs
    }

    pub fn from_limbs(limbs: &[u64]) -> BigUint {
        let halves: Vec<u32> = limbs
            .iter()
            .flat_map(|&w| [w as u32, (w >> 32) as u32])
            .collect();
        BigUint::new(halves)
    }

    /// One cell of the anti-diagonal update, fused over the limbs:
    /// `running += cell; cell = running + add; total += running`.
    pub fn sweep(running: &mut [u64], cell: &mut [u64], add: &[u64], total: &mut [u64]) {
        let len = running.len();
        let (cell, add, total) = (&mut cell[..len], &add[..len], &mut total[..len]);
        let (mut c_run, mut c_cell, mut c_total) = (0u128, 0u128, 0u128);
        for i in 0..len {
            let r = running[i] as u128 + cell[i] as u128 + c_run;
            c_run = r >> 64;
            let r = r as u64;
            running[i] = r;
            let c = r as u128 + add[i] as u128 + c_cell;
            c_cell = c >> 64;
            cell[i] = c as u64;
            let t = total[i] as u128 + r as u128 + c_total;
            c_total = t >> 64;
            total[i] = t as u64;
        }
        debug_assert!(c_run == 0 && c_cell == 0 && c_total == 0, "limb overflow");
    }
}

/// `rho_n = a_n n^(1/d) / C(phi)` for `n = 1..=n_max`.
pub fn sequence_asymptotic_ratio(seq: &ExactSequence, constant: &RateConstant) -> Result<Vec<f64>> {
    if seq.phi() != constant.phi {
        return Err(Error::Consistency(format!(
            "sequence is for phi = {} but the constant is for phi = {}",
            format_rational(&seq.phi()),
            format_rational(&constant.phi)
        )));
    }
    Ok((1..=seq.n_max())
        .map(|n| seq.to_f64(n) * (n as f64).powf(constant.exponent) / constant.c_value)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Running sum with Neumaier compensation.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Certified interval for `a_n = integral_0^1 (1 - F(x))^n dx`.
///
/// `F` is constant on each deleted interval of level `<= depth`, so those
/// contribute in closed form. On the `2^depth` remaining intervals of length
/// `phi^depth`, `F` runs from `i / 2^depth` to `(i + 1) / 2^depth`, which pins
/// the integrand between its endpoint values. The interval width is
/// `phi^depth` plus a floating-point allowance.
pub fn min_expectation_oracle(phi: Rational, n: u32, depth: u32) -> Result<Bracket> {
    let params = CantorParams::new(phi)?;
    if n == 0 {
        return Err(domain("min_expectation_oracle: n must be at least 1"));
    }
    if depth == 0 || depth > 26 {
        return Err(domain(format!("min_expectation_oracle: depth {depth} outside 1..=26")));
    }
    let phi = params.phi_f64();
    let n = n as i32;
    let mut flats = CompensatedSum::default();
    for level in 1..=depth {
        let cells = 1u64 << level;
        let mut level_sum = CompensatedSum::default();
        for m in (1..cells).step_by(2) {
            level_sum.add((1.0 - m as f64 / cells as f64).powi(n));
        }
        flats.add(phi.powi(level as i32 - 1) * (1.0 - 2.0 * phi) * level_sum.value());
    }
    let cells = 1u64 << depth;
    let mut grid = CompensatedSum::default();
    for i in 0..cells {
        grid.add((1.0 - i as f64 / cells as f64).powi(n));
    }
    let residual = phi.powi(depth as i32);
    let lo = flats.value() + residual * (grid.value() - 1.0);
    let hi = flats.value() + residual * grid.value();
    let slack = 4.0 * (n as f64 + depth as f64 + 10.0) * f64::EPSILON * hi;
    Ok(Bracket {
        lo: lo - slack,
        hi: hi + slack,
    })
}
