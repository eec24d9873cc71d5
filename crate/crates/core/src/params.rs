//! The distribution parameter, its derived constants, and a depth-limited
//! evaluation of the Cantor(phi) distribution function.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};

pub type Rational = num_rational::Ratio<i64>;

/// Parses a rational written as `p/q`.
///
/// Decimal notation is rejected on purpose: `0.333` is not `1/3`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || domain(format!("`{text}` is not a rational \"p/q\" string"));
    let (p, q) = text.trim().split_once('/').ok_or_else(bad)?;
    let p: i64 = p.trim().parse().map_err(|_| bad())?;
    let q: i64 = q.trim().parse().map_err(|_| bad())?;
    if q == 0 {
        return Err(domain(format!("`{text}` has a zero denominator")));
    }
    Ok(Rational::new(p, q))
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Series truncation depth that pushes the geometric tail `phi^D / (1 - phi)`
/// below 2^-53.
pub fn default_depth(phi: &Rational) -> u32 {
    let phi = rational_to_f64(phi);
    let target = (2f64.powi(-53) * (1.0 - phi)).ln();
    (target / phi.ln()).ceil().max(1.0) as u32
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct CantorParams {
    phi: Rational,
    depth: u32,
    dim: f64,
    gap: Rational,
    occupancy_depth: u32,
}

impl CantorParams {
    /// Parameters with the default truncation depth.
    pub fn new(phi: Rational) -> Result<Self> {
        check_phi(&phi)?;
        make_params(phi, default_depth(&phi))
    }

    pub fn phi(&self) -> Rational {
        self.phi
    }

    pub fn phi_f64(&self) -> f64 {
        rational_to_f64(&self.phi)
    }

    /// Numerator and denominator of phi in lowest terms, both positive.
    pub fn phi_parts(&self) -> (u64, u64) {
        (*self.phi.numer() as u64, *self.phi.denom() as u64)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Hausdorff dimension `-ln 2 / ln phi` of the generalized Cantor set.
    pub fn dim(&self) -> f64 {
        self.dim
    }

    /// Length `1 - 2 phi` of the first deleted interval.
    pub fn gap(&self) -> Rational {
        self.gap
    }

    pub fn gap_f64(&self) -> f64 {
        rational_to_f64(&self.gap)
    }

    /// Least K with `phi^K < (1 - phi)(1 - 2 phi) / 2`.
    pub fn occupancy_depth(&self) -> u32 {
        self.occupancy_depth
    }

    /// Number of level-K intervals, `2^K`.
    pub fn occupancy_cells(&self) -> usize {
        1usize << self.occupancy_depth
    }

    pub fn with_depth(&self, depth: u32) -> Result<Self> {
        make_params(self.phi, depth)
    }
}

fn check_phi(phi: &Rational) -> Result<()> {
    let half = Rational::new(1, 2);
    if *phi <= Rational::zero() || *phi >= half {
        return Err(Error::PhiOutOfRange {
            value: format_rational(phi),
        });
    }
    Ok(())
}

pub fn make_params(phi: Rational, depth: u32) -> Result<CantorParams> {
    check_phi(&phi)?;
    if depth == 0 {
        return Err(domain("truncation depth must be positive"));
    }
    let (p, q) = (*phi.numer() as f64, *phi.denom() as f64);
    let dim = std::f64::consts::LN_2 / (q.ln() - p.ln());
    Ok(CantorParams {
        phi,
        depth,
        dim,
        gap: Rational::one() - phi * 2,
        occupancy_depth: occupancy_depth(&phi),
    })
}

/// Linear search for the least K with `2 q^2 p^K < (q - p)(q - 2p) q^K`.
fn occupancy_depth(phi: &Rational) -> u32 {
    let p = BigUint::from(*phi.numer() as u64);
    let q = BigUint::from(*phi.denom() as u64);
    let rhs_factor = (&q - &p) * (&q - &p - &p);
    let lhs_factor = &q * &q * 2u32;
    let (mut pk, mut qk) = (p.clone(), q.clone());
    let mut k = 1;
    while &lhs_factor * &pk >= &rhs_factor * &qk {
        pk *= &p;
        qk *= &q;
        k += 1;
    }
    k
}

/// Limit `1 - 2 phi` of the connectivity threshold.
pub fn theoretical_limit(params: &CantorParams) -> Rational {
    params.gap
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdfValue {
    pub value: f64,
    pub error_bound: f64,
}

/// Cantor(phi) distribution function at `x`, unrolled `params.depth()` levels
/// of self-similarity.
///
/// `x` is taken as the exact dyadic rational it represents, and the
/// recursion runs in exact arithmetic. The result is exact when `x` reaches
/// a deleted interval or an endpoint before the depth runs out; otherwise the
/// midpoint of the remaining range is returned with half its width as the
/// error bound.
pub fn cantor_cdf(x: f64, params: &CantorParams) -> Result<CdfValue> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("cantor_cdf: x = {x} is outside [0, 1]")));
    }
    let exact = BigRational::from_float(x).expect("finite");
    let (p, q) = params.phi_parts();
    let (p, q) = (BigInt::from(p), BigInt::from(q));
    let q_minus_p = &q - &p;
    let mut num = exact.numer().clone();
    let mut den = exact.denom().clone();
    let mut acc = 0.0;
    let mut scale = 1.0;
    for _ in 0..params.depth {
        if num.is_zero() {
            return Ok(CdfValue { value: acc, error_bound: 0.0 });
        }
        if num == den {
            return Ok(CdfValue { value: acc + scale, error_bound: 0.0 });
        }
        let scaled = &num * &q;
        let below = scaled < &p * &den;
        let above = scaled > &q_minus_p * &den;
        if !below && !above {
            return Ok(CdfValue { value: acc + scale / 2.0, error_bound: 0.0 });
        }
        num = if below {
            scaled
        } else {
            acc += scale / 2.0;
            scaled - &q_minus_p * &den
        };
        den *= &p;
        scale /= 2.0;
        debug_assert!(!num.is_negative());
    }
    if num.is_zero() {
        return Ok(CdfValue { value: acc, error_bound: 0.0 });
    }
    if num == den {
        return Ok(CdfValue { value: acc + scale, error_bound: 0.0 });
    }
    Ok(CdfValue {
        value: acc + scale / 2.0,
        error_bound: scale / 2.0,
    })
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    phi: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<u32>,
}

impl Serialize for CantorParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ParamsRepr {
            phi: format_rational(&self.phi),
            depth: Some(self.depth),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CantorParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ParamsRepr::deserialize(deserializer)?;
        let phi = parse_rational(&repr.phi).map_err(D::Error::custom)?;
        check_phi(&phi).map_err(D::Error::custom)?;
        let depth = repr.depth.unwrap_or_else(|| default_depth(&phi));
        make_params(phi, depth).map_err(D::Error::custom)
    }
}

impl CdfValue {
    pub fn lower(&self) -> f64 {
        self.value - self.error_bound
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }
}
