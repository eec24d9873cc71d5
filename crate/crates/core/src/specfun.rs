//! Gamma and Riemann zeta on the positive real line, and the rate constant
//! `C(phi) = (1 - phi)(1 - 2 phi) / (phi ln 2) * Gamma(s) * zeta(s)`
//! with `s = -log2 phi`.

use std::f64::consts::{E, LN_2, PI};

use serde::Serialize;

use crate::error::{domain, Result};
use crate::params::{CantorParams, Rational};

// Lanczos approximation, g = 10.900511, eleven terms (Pugh 2004, as used by statrs).
const LANCZOS_G: f64 = 10.900511;

const LANCZOS_COEFFS: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];

const TWO_SQRT_E_OVER_PI: f64 = 1.860_382_734_205_265_717_336_249_247_266_663_112_059_42;

/// Relative accuracy claimed for [`gamma`] on `(0, 171]`.
pub const GAMMA_REL_TOL: f64 = 1e-14;

/// Terms in the accelerated alternating series for zeta.
const ZETA_TERMS: usize = 40;

fn lanczos_sum(x: f64) -> f64 {
    LANCZOS_COEFFS
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_COEFFS[0], |s, (i, &c)| s + c / (x + i as f64 - 1.0))
}

pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("gamma: argument must be positive, got {x}")));
    }
    if x > 171.7 {
        return Err(domain(format!("gamma: {x} overflows f64")));
    }
    if x < 0.5 {
        // reflection keeps the series on its accurate half-line
        return Ok(PI / ((PI * x).sin() * gamma(1.0 - x)?));
    }
    let base = (x - 0.5 + LANCZOS_G) / E;
    // split the power so large x does not overflow before the product
    let half = base.powf((x - 0.5) / 2.0);
    Ok(lanczos_sum(x) * TWO_SQRT_E_OVER_PI * half * half)
}

/// Borwein's accelerated series for `eta(s) = (1 - 2^(1-s)) zeta(s)`.
fn borwein_weights(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut weights = Vec::with_capacity(n + 1);
    let mut term = 1.0;
    let mut sum = 1.0;
    weights.push(sum);
    for i in 1..=n {
        let i_f = i as f64;
        term *= 4.0 * (nf + i_f - 1.0) * (nf - i_f + 1.0) / ((2.0 * i_f) * (2.0 * i_f - 1.0));
        sum += term;
        weights.push(sum);
    }
    weights
}

/// Error bound, relative, of [`zeta`] at `s`.
pub fn zeta_rel_error(s: f64) -> f64 {
    let amplification = 1.0 / (1.0 - 2f64.powf(1.0 - s));
    let truncation = 3.0 * (3.0 + 8f64.sqrt()).powi(-(ZETA_TERMS as i32));
    amplification * (4.0 * ZETA_TERMS as f64 * f64::EPSILON + truncation)
}

pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(domain(format!("zeta: argument must exceed 1, got {s}")));
    }
    let weights = borwein_weights(ZETA_TERMS);
    let d_n = weights[ZETA_TERMS];
    let eta: f64 = (0..ZETA_TERMS)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * (d_n - weights[k]) / d_n / ((k + 1) as f64).powf(s)
        })
        .sum();
    Ok(eta / (1.0 - 2f64.powf(1.0 - s)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateConstant {
    #[serde(serialize_with = "serialize_rational")]
    pub phi: Rational,
    pub c_value: f64,
    pub gamma_factor: f64,
    pub zeta_factor: f64,
    /// `1 / d_phi = -log2 phi`.
    pub exponent: f64,
    pub est_error: f64,
}

fn serialize_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::params::format_rational(r))
}

pub fn rate_constant(params: &CantorParams) -> Result<RateConstant> {
    let (p, q) = params.phi_parts();
    let (pf, qf) = (p as f64, q as f64);
    let exponent = (qf.ln() - pf.ln()) / LN_2;
    let prefactor = (qf - pf) * (qf - 2.0 * pf) / (pf * qf * LN_2);
    let gamma_factor = gamma(exponent)?;
    let zeta_factor = zeta(exponent)?;
    let c_value = prefactor * gamma_factor * zeta_factor;
    let est_error = c_value * (GAMMA_REL_TOL + zeta_rel_error(exponent) + 8.0 * f64::EPSILON);
    Ok(RateConstant {
        phi: params.phi(),
        c_value,
        gamma_factor,
        zeta_factor,
        exponent,
        est_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Euler-Maclaurin evaluation of zeta, independent of the alternating route.
    fn zeta_euler_maclaurin(s: f64) -> f64 {
        const B2K: [f64; 8] = [
            1.0 / 6.0,
            -1.0 / 30.0,
            1.0 / 42.0,
            -1.0 / 30.0,
            5.0 / 66.0,
            -691.0 / 2730.0,
            7.0 / 6.0,
            -3617.0 / 510.0,
        ];
        let n = 20.0f64;
        let mut sum: f64 = (1..20).map(|k| (k as f64).powf(-s)).sum();
        sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
        let mut rising = s; // s (s+1) ... (s + 2k - 2)
        let mut factorial = 2.0; // (2k)!
        for (k, b) in B2K.iter().enumerate() {
            let k = k as i32 + 1;
            sum += b / factorial * rising * n.powf(-s - 2.0 * k as f64 + 1.0);
            rising *= (s + 2.0 * k as f64 - 1.0) * (s + 2.0 * k as f64);
            factorial *= (2.0 * k as f64 + 1.0) * (2.0 * k as f64 + 2.0);
        }
        sum
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma(1.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(gamma(5.0).unwrap(), 24.0) < 1e-14);
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-12);
        assert!(rel(gamma(0.1).unwrap(), 9.513_507_698_668_731_836_292_487) < 1e-13);
        assert!(rel(gamma(170.5).unwrap(), 5.562_092_414_559_999_6e305) < 1e-12);
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
        assert!(gamma(f64::NAN).is_err());
    }

    #[test]
    fn gamma_agrees_with_statrs() {
        for i in 1..400 {
            let x = i as f64 * 0.05;
            let ours = gamma(x).unwrap();
            let theirs = statrs::function::gamma::gamma(x);
            assert!(rel(ours, theirs) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn zeta_known_values() {
        assert!(rel(zeta(2.0).unwrap(), PI * PI / 6.0) < 1e-12);
        assert!(rel(zeta(4.0).unwrap(), PI.powi(4) / 90.0) < 1e-12);
        let z30 = zeta(30.0).unwrap();
        assert!((z30 - 1.0 - 2f64.powi(-30)).abs() < 2.0 * 3f64.powi(-30));
        assert!(zeta(1.0).is_err());
        assert!(zeta(0.5).is_err());
    }

    #[test]
    fn zeta_agrees_with_euler_maclaurin() {
        for s in [1.01, 1.029, 1.1, 1.3219, 1.585, 2.0, 2.5, 3.3219, 6.0, 12.0] {
            let a = zeta(s).unwrap();
            let b = zeta_euler_maclaurin(s);
            assert!(rel(a, b) < 1e-12f64.max(2.0 * zeta_rel_error(s)), "s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn rate_constant_for_standard_cantor() {
        let params = CantorParams::new(Rational::new(1, 3)).unwrap();
        let c = rate_constant(&params).unwrap();
        let s = 3f64.log2();
        assert!(rel(c.exponent, s) < 1e-15);
        assert!(rel(c.exponent, 1.0 / params.dim()) < 1e-14);
        assert!(rel(c.gamma_factor, gamma(s).unwrap()) < 1e-15);
        assert!(rel(c.zeta_factor, zeta(s).unwrap()) < 1e-15);
        let prefactor = (2.0 / 3.0) / LN_2;
        assert!(rel(c.c_value, prefactor * c.gamma_factor * c.zeta_factor) < 1e-15);
        assert!(c.est_error > 0.0 && c.est_error < 1e-11);
    }

    #[test]
    fn rate_constant_positive() {
        for (p, q) in [(1, 10), (1, 4), (1, 3), (2, 5), (49, 100)] {
            let c = rate_constant(&CantorParams::new(Rational::new(p, q)).unwrap()).unwrap();
            assert!(c.c_value > 0.0, "phi={p}/{q}");
            assert!(c.exponent > 1.0);
        }
    }

    proptest! {
        #[test]
        fn gamma_functional_equation(x in 1.0f64..10.0) {
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            prop_assert!(rel(lhs, rhs) <= 1e-12);
        }

        #[test]
        fn log2_argument_stays_in_domain(p in 1i64..500) {
            let params = CantorParams::new(Rational::new(p, 1001)).unwrap();
            let c = rate_constant(&params).unwrap();
            prop_assert!(c.exponent > 1.0);
            prop_assert!(c.c_value > 0.0);
        }
    }
}
