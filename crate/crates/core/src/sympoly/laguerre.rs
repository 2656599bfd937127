//! Generalized Laguerre polynomials `L_n^ν(u) = Σ_m binom(ν+n, n−m)(−1)^m u^m/m!`.
//!
//! Generalized binomials are falling-factorial products, so `ν` may be any
//! real (or rational) number; no Gamma function is evaluated.

use num_rational::BigRational;
use num_traits::One;

use super::poly::int;

fn binom_f64(a: f64, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (a - i as f64) / (i + 1) as f64)
}

fn binom_exact(a: &BigRational, j: u32) -> BigRational {
    (0..j).fold(BigRational::one(), |acc, i| acc * (a - int(i as i64)) / int(i as i64 + 1))
}

/// Coefficients `[a₀, …, a_n]` of `L_n^ν(u) = Σ a_m u^m`.
pub fn coefficients_f64(n: u32, nu: f64) -> Vec<f64> {
    let mut fact = 1.0;
    (0..=n)
        .map(|m| {
            if m > 0 {
                fact *= m as f64;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            binom_f64(nu + n as f64, n - m) * sign / fact
        })
        .collect()
}

/// Exact coefficients for rational `ν`.
pub fn coefficients(n: u32, nu: &BigRational) -> Vec<BigRational> {
    let top = nu + int(n as i64);
    let mut fact = BigRational::one();
    (0..=n)
        .map(|m| {
            if m > 0 {
                fact *= int(m as i64);
            }
            let sign = if m % 2 == 0 { int(1) } else { int(-1) };
            binom_exact(&top, n - m) * sign / &fact
        })
        .collect()
}

pub fn radial_laguerre(n: u32, nu: f64, u: f64) -> f64 {
    coefficients_f64(n, nu).iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

/// Value and first two derivatives in `u`.
pub fn radial_laguerre_with_derivatives(n: u32, nu: f64, u: f64) -> (f64, f64, f64) {
    let c = coefficients_f64(n, nu);
    let mut v = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (m, &a) in c.iter().enumerate().rev() {
        v = v * u + a;
        if m >= 1 {
            d1 = d1 * u + a * m as f64;
        }
        if m >= 2 {
            d2 = d2 * u + a * (m * (m - 1)) as f64;
        }
    }
    (v, d1, d2)
}
