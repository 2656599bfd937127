use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poly::{divide_terms_by_difference, int, Exponents, Polynomial};
use super::SympolyError;
use crate::model::ExactParams;

/// `D₊ = Σ ∂ᵢ² + Σ_{i<j, j−i≤r} 2λ/(xᵢ − xⱼ) (∂ᵢ − ∂ⱼ)`, applied exactly.
///
/// Each pair term divides `(∂ᵢ − ∂ⱼ) f` by `(xᵢ − xⱼ)`; a nonzero remainder
/// yields [`SympolyError::NonPolynomial`]. Symmetric inputs always divide.
pub fn apply_dplus(p: &ExactParams, f: &Polynomial) -> Result<Polynomial, SympolyError> {
    let n = p.n();
    if f.nvars() != n {
        return Err(SympolyError::VariableCount {
            expected: n,
            got: f.nvars(),
        });
    }
    // Work on L·f with integer coefficients; rationals only at the end.
    let (l, g) = f.integer_terms();
    let mut lap: BTreeMap<Exponents, BigInt> = BTreeMap::new();
    let mut grads: Vec<BTreeMap<Exponents, BigInt>> = vec![BTreeMap::new(); n];
    for (e, c) in &g {
        for i in 0..n {
            if e[i] >= 1 {
                let mut ne = e.clone();
                ne[i] -= 1;
                *grads[i].entry(ne).or_insert_with(BigInt::zero) += c * e[i];
            }
            if e[i] >= 2 {
                let mut ne = e.clone();
                ne[i] -= 2;
                *lap.entry(ne).or_insert_with(BigInt::zero) += c * (e[i] * (e[i] - 1));
            }
        }
    }
    let inv_l = BigRational::new(BigInt::one(), l);
    let mut out = Polynomial::from_integer_terms(n, lap, &inv_l);
    if p.lambda().is_zero() {
        return Ok(out);
    }
    let mut drift: BTreeMap<Exponents, BigInt> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            if !p.in_range(i, j) {
                continue;
            }
            let mut diff = grads[i].clone();
            for (e, c) in &grads[j] {
                *diff.entry(e.clone()).or_insert_with(BigInt::zero) -= c;
            }
            diff.retain(|_, c| !c.is_zero());
            if diff.is_empty() {
                continue;
            }
            let q = divide_terms_by_difference(diff.iter(), i, j).ok_or(SympolyError::NonPolynomial { i, j })?;
            for (e, c) in q {
                *drift.entry(e).or_insert_with(BigInt::zero) += c;
            }
        }
    }
    out.add_assign(Polynomial::from_integer_terms(n, drift, &(p.lambda() * int(2) * inv_l)));
    Ok(out)
}

/// `exp(−D₊/4ω̃) f = Σⱼ (−D₊/4ω̃)ʲ f / j!` with `ω̃ = 1`.
///
/// The series terminates because `D₊` lowers the degree by two. A failed
/// exact division at any order marks a non-normalizable candidate.
pub fn similarity_series(p: &ExactParams, f: &Polynomial) -> Result<Polynomial, SympolyError> {
    let mut total = f.clone();
    let mut term = f.clone();
    let mut j: i64 = 0;
    loop {
        j += 1;
        term = apply_dplus(p, &term)?.scale(&BigRational::new((-1).into(), (4 * j).into()));
        if term.is_zero() {
            return Ok(total);
        }
        total = &total + &term;
    }
}

/// `ρ^{2n} P` as an exact polynomial.
pub fn rho_power_times(nvars: usize, n: u32, poly: &Polynomial) -> Polynomial {
    assert_eq!(poly.nvars(), nvars);
    (0..n).fold(poly.clone(), |acc, _| acc.times_rho_squared())
}

/// Checks `(D₊/4ω̃)[ρ^{2n} P_k] = (n/ω̃)(E⁰/ħω + k − 1 + n) ρ^{2(n−1)} P_k`
/// in exact arithmetic. `p_k` must solve `D₊ P_k = 0` and be homogeneous of
/// degree `k`.
pub fn recurrence_check(
    p: &ExactParams,
    k: u32,
    n: u32,
    p_k: &Polynomial,
) -> Result<bool, SympolyError> {
    let residual = apply_dplus(p, p_k)?;
    if !residual.is_zero() || !p_k.is_homogeneous() || p_k.degree().is_some_and(|d| d != k) {
        return Err(SympolyError::ConstraintViolation);
    }
    let lhs = apply_dplus(p, &rho_power_times(p.n(), n, p_k))?.scale(&BigRational::new(1.into(), 4.into()));
    if n == 0 {
        return Ok(lhs.is_zero());
    }
    let coef = int(n as i64) * (p.ground_state_energy() + int(k as i64) - BigRational::one() + int(n as i64));
    let rhs = rho_power_times(p.n(), n - 1, p_k).scale(&coef);
    Ok(lhs == rhs)
}
