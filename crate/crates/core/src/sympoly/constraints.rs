//! Generalized Laplace equation `D₊ P_k = 0` over the monomial symmetric
//! basis, solved exactly.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::dplus::apply_dplus;
use super::linalg::{canonical_basis, nullspace};
use super::partition::{partition_count, partitions, Partition};
use super::poly::{format_rational, int, monomial_symmetric, parse_rational, Exponents, Polynomial};
use super::SympolyError;
use crate::model::ExactParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `r < N − 1`: one solution per degree.
    Truncated,
    /// `r = N − 1`: `M(k) − M(k−2)` solutions per degree.
    FullRange,
}

impl Regime {
    pub fn of(p: &ExactParams) -> Self {
        if p.is_full_range() {
            Regime::FullRange
        } else {
            Regime::Truncated
        }
    }
}

/// The linear system `D₊(Σ c_α m_α) = 0`: one row per monomial of the
/// (generally non-symmetric) image, one column per partition of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub partitions: Vec<Partition>,
    pub rows: BTreeMap<Exponents, Vec<BigRational>>,
}

impl ConstraintSystem {
    pub fn matrix(&self) -> Vec<Vec<BigRational>> {
        self.rows.values().cloned().collect()
    }
}

fn check_regime(n: usize, k: u32) -> Result<(), SympolyError> {
    if k as usize > n {
        return Err(SympolyError::OutOfRegime { k, n });
    }
    Ok(())
}

pub fn constraint_system(p: &ExactParams, k: u32) -> Result<ConstraintSystem, SympolyError> {
    check_regime(p.n(), k)?;
    let parts = partitions(k, p.n());
    let ncols = parts.len();
    let mut rows: BTreeMap<Exponents, Vec<BigRational>> = BTreeMap::new();
    for (col, alpha) in parts.iter().enumerate() {
        let image = apply_dplus(p, &monomial_symmetric(alpha, p.n())?)?;
        for (e, c) in image.terms() {
            rows.entry(e.clone())
                .or_insert_with(|| vec![BigRational::zero(); ncols])[col] = c.clone();
        }
    }
    Ok(ConstraintSystem {
        partitions: parts,
        rows,
    })
}

/// Constraint matrix as `A₀ + λ A₁`, reconstructed from the instantiations
/// at `λ = 0` and `λ = 1`. Rows are aligned on the union of monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSystem {
    pub partitions: Vec<Partition>,
    pub constant: BTreeMap<Exponents, Vec<BigRational>>,
    pub slope: BTreeMap<Exponents, Vec<BigRational>>,
}

impl AffineSystem {
    pub fn at(&self, lambda: &BigRational) -> BTreeMap<Exponents, Vec<BigRational>> {
        let mut out = BTreeMap::new();
        for (e, a0) in &self.constant {
            let a1 = &self.slope[e];
            let row: Vec<BigRational> = a0.iter().zip(a1).map(|(c, s)| c + s * lambda).collect();
            if row.iter().any(|v| !v.is_zero()) {
                out.insert(e.clone(), row);
            }
        }
        out
    }
}

pub fn affine_constraint_system(p: &ExactParams, k: u32) -> Result<AffineSystem, SympolyError> {
    let s0 = constraint_system(&p.with_lambda(BigRational::zero())?, k)?;
    let s1 = constraint_system(&p.with_lambda(BigRational::one())?, k)?;
    let ncols = s0.partitions.len();
    let zero_row = vec![BigRational::zero(); ncols];
    let keys: std::collections::BTreeSet<_> = s0.rows.keys().chain(s1.rows.keys()).cloned().collect();
    let mut constant = BTreeMap::new();
    let mut slope = BTreeMap::new();
    for e in keys {
        let a0 = s0.rows.get(&e).unwrap_or(&zero_row).clone();
        let a1v = s1.rows.get(&e).unwrap_or(&zero_row);
        let a1: Vec<BigRational> = a1v.iter().zip(&a0).map(|(x, y)| x - y).collect();
        constant.insert(e.clone(), a0);
        slope.insert(e, a1);
    }
    Ok(AffineSystem {
        partitions: s0.partitions,
        constant,
        slope,
    })
}

/// Nullspace of the constraint system at a fixed rational `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSolution {
    pub n: usize,
    pub range: usize,
    pub lambda: BigRational,
    pub k: u32,
    pub regime: Regime,
    pub partitions: Vec<Partition>,
    /// Canonical basis: each vector has a leading 1 at the earliest
    /// (reverse-lexicographically largest) partition it involves.
    pub basis: Vec<Vec<BigRational>>,
}

impl ConstraintSolution {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// 1 for `r < N − 1`, `M(k) − M(k−2)` for `r = N − 1`.
    pub fn expected_dimension(&self) -> usize {
        match self.regime {
            Regime::Truncated => 1,
            Regime::FullRange => {
                (partition_count(self.k as i64, self.n) - partition_count(self.k as i64 - 2, self.n)) as usize
            }
        }
    }

    /// `c_α` of basis vector `idx`; zero if `α` is not a partition of `k`.
    pub fn coefficient(&self, idx: usize, alpha: &Partition) -> BigRational {
        self.partitions
            .iter()
            .position(|a| a == alpha)
            .map(|c| self.basis[idx][c].clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// Coefficients of basis vector `idx` keyed by partition label.
    pub fn coefficients(&self, idx: usize) -> BTreeMap<String, BigRational> {
        self.partitions
            .iter()
            .zip(&self.basis[idx])
            .map(|(a, c)| (a.label(), c.clone()))
            .collect()
    }

    /// `P_k = Σ c_α m_α` for basis vector `idx`.
    pub fn polynomial(&self, idx: usize) -> Polynomial {
        combine(&self.partitions, &self.basis[idx], self.n)
    }

    pub fn to_json(&self) -> ConstraintJson {
        ConstraintJson {
            n: self.n,
            r: self.range,
            lambda: format_rational(&self.lambda),
            k: self.k,
            dimension: self.dimension(),
            basis: (0..self.dimension())
                .map(|i| {
                    self.partitions
                        .iter()
                        .zip(&self.basis[i])
                        .map(|(a, c)| (a.label(), format_rational(c)))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Serialized form; rationals are `"p/q"` strings, partitions `"2,1,1"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstraintJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub r: usize,
    pub lambda: String,
    pub k: u32,
    pub dimension: usize,
    pub basis: Vec<BTreeMap<String, String>>,
}

impl ConstraintJson {
    /// Rebuilds `P_k` for basis vector `idx` from its serialized coefficients.
    pub fn polynomial(&self, idx: usize) -> Result<Polynomial, SympolyError> {
        let mut out = Polynomial::zero(self.n);
        for (label, coeff) in &self.basis[idx] {
            let alpha = Partition::parse(label)?;
            let c = parse_rational(coeff).ok_or_else(|| SympolyError::Parse(coeff.clone()))?;
            out = &out + &monomial_symmetric(&alpha, self.n)?.scale(&c);
        }
        Ok(out)
    }
}

pub(crate) fn combine(parts: &[Partition], coeffs: &[BigRational], n: usize) -> Polynomial {
    let mut out = Polynomial::zero(n);
    for (alpha, c) in parts.iter().zip(coeffs) {
        if c.is_zero() {
            continue;
        }
        let m = monomial_symmetric(alpha, n).expect("partitions are length-filtered");
        out = &out + &m.scale(c);
    }
    out
}

/// Solves `D₊ P_k = 0` for `0 ≤ k ≤ N`. `k > N` is refused.
pub fn laplace_constraints(p: &ExactParams, k: u32) -> Result<ConstraintSolution, SympolyError> {
    let system = constraint_system(p, k)?;
    let ncols = system.partitions.len();
    let basis = canonical_basis(nullspace(&system.matrix(), ncols), ncols);
    Ok(ConstraintSolution {
        n: p.n(),
        range: p.range(),
        lambda: p.lambda().clone(),
        k,
        regime: Regime::of(p),
        partitions: system.partitions,
        basis,
    })
}

/// Residual of the tabulated closed-form relations for a coefficient map
/// (keys are partition labels; missing keys read as zero). Every entry must
/// vanish exactly on a valid solution.
pub fn table_relations(
    regime: Regime,
    n: usize,
    range: usize,
    lambda: &BigRational,
    k: u32,
    c: &BTreeMap<String, BigRational>,
) -> Vec<(&'static str, BigRational)> {
    let g = |label: &str| c.get(label).cloned().unwrap_or_else(BigRational::zero);
    let nn = int(n as i64);
    let lam = lambda.clone();
    let one = BigRational::one();
    let half = BigRational::new(1.into(), 2.into());
    let rr = int((range * (2 * n - range - 1)) as i64);
    let i = |v: i64| int(v);
    match (regime, k) {
        (Regime::Truncated, 2) => vec![(
            "λ(c11 − 2c2)r(2N−r−1) = 2N c2",
            &lam * (g("1,1") - i(2) * g("2")) * &rr - i(2) * &nn * g("2"),
        )],
        (Regime::Truncated, 3) => vec![
            (
                "λ(c21 − 3c3)r(2N−r−1) = 2[3c3 + c21(N−1)]",
                &lam * (g("2,1") - i(3) * g("3")) * &rr
                    - i(2) * (i(3) * g("3") + g("2,1") * (&nn - &one)),
            ),
            ("c111 = 3(c21 − c3)", g("1,1,1") - i(3) * (g("2,1") - g("3"))),
        ],
        (Regime::Truncated, 4) => vec![
            (
                "λ(c31 − 4c4)r(2N−r−1) = 2[6c4 + c22(N−1)]",
                &lam * (g("3,1") - i(4) * g("4")) * &rr
                    - i(2) * (i(6) * g("4") + g("2,2") * (&nn - &one)),
            ),
            ("c1111 = 6(c22 − 2c4)", g("1,1,1,1") - i(6) * (g("2,2") - i(2) * g("4"))),
            (
                "c211 = c31 + 2c22 − 4c4",
                g("2,1,1") - (g("3,1") + i(2) * g("2,2") - i(4) * g("4")),
            ),
            (
                "(N+4)c31 + (N−2)(2c22 − 4c4) + λr(2N−r−1)(2c4 + c31 − c22) = 0",
                (&nn + i(4)) * g("3,1")
                    + (&nn - i(2)) * (i(2) * g("2,2") - i(4) * g("4"))
                    + &lam * &rr * (i(2) * g("4") + g("3,1") - g("2,2")),
            ),
        ],
        (Regime::Truncated, 5) => vec![
            (
                "λ(c41 − 5c5)r(2N−r−1) = 2[10c5 + (N−1)c32]",
                &lam * (g("4,1") - i(5) * g("5")) * &rr
                    - i(2) * (i(10) * g("5") + (&nn - &one) * g("3,2")),
            ),
            (
                "c311 = 2c32 + c41 − 5c5",
                g("3,1,1") - (i(2) * g("3,2") + g("4,1") - i(5) * g("5")),
            ),
            (
                "c221 = 5c32 − 3c41 − 5c5",
                g("2,2,1") - (i(5) * g("3,2") - i(3) * g("4,1") - i(5) * g("5")),
            ),
            (
                "c2111 = 3(4c32 − 3c41 − 5c5)",
                g("2,1,1,1") - i(3) * (i(4) * g("3,2") - i(3) * g("4,1") - i(5) * g("5")),
            ),
            (
                "c11111 = 30(c32 − c41 − c5)",
                g("1,1,1,1,1") - i(30) * (g("3,2") - g("4,1") - g("5")),
            ),
            (
                "(5N−7)c32 − 3(N−4)c41 − 5(N−2)c5 + (λr/2)(2N−r−1)(5c5 + 3c41 − 2c32) = 0",
                (i(5) * &nn - i(7)) * g("3,2")
                    - i(3) * (&nn - i(4)) * g("4,1")
                    - i(5) * (&nn - i(2)) * g("5")
                    + &lam * &rr * &half * (i(5) * g("5") + i(3) * g("4,1") - i(2) * g("3,2")),
            ),
        ],
        (Regime::FullRange, 3) => vec![(
            "6c3 + 2c21(N−1) + 2λ(N−1)[3c3 − c21 + (N−2)(c21 − c111/2)] = 0",
            i(6) * g("3")
                + i(2) * g("2,1") * (&nn - &one)
                + i(2) * &lam * (&nn - &one)
                    * (i(3) * g("3") - g("2,1") + (&nn - i(2)) * (g("2,1") - g("1,1,1") * &half)),
        )],
        (Regime::FullRange, 4) => vec![
            (
                "12c4 + 2(N−1)c22 + 2λ(N−1)[4c4 − c31 + (N−2)(c22 − c211/2)] = 0",
                i(12) * g("4")
                    + i(2) * (&nn - &one) * g("2,2")
                    + i(2) * &lam * (&nn - &one)
                        * (i(4) * g("4") - g("3,1") + (&nn - i(2)) * (g("2,2") - g("2,1,1") * &half)),
            ),
            (
                "12c31 + 2(N−2)c211 + 4λ[2c4 − c22 + (3N−5)c31] + 2λ(N−2)[(N−5)c211 − (N−3)c1111/2] = 0",
                i(12) * g("3,1")
                    + i(2) * (&nn - i(2)) * g("2,1,1")
                    + i(4) * &lam * (i(2) * g("4") - g("2,2") + (i(3) * &nn - i(5)) * g("3,1"))
                    + i(2) * &lam * (&nn - i(2))
                        * ((&nn - i(5)) * g("2,1,1") - (&nn - i(3)) * &half * g("1,1,1,1")),
            ),
        ],
        (Regime::FullRange, 5) => vec![
            (
                // printed with 5c5; only 10c5 (as in the truncated k=5 row) vanishes on the nullspace
                "10c5 + c32(N−1) + λ[(5c5 − c41)(N−1) + (c32 − c311/2)(N−1)(N−2)] = 0",
                i(10) * g("5")
                    + g("3,2") * (&nn - &one)
                    + &lam
                        * ((i(5) * g("5") - g("4,1")) * (&nn - &one)
                            + (g("3,2") - g("3,1,1") * &half) * (&nn - &one) * (&nn - i(2))),
            ),
            (
                "9c311 + (N−3)c2111 + λ[3(4c41 − 2c221 + 2c311) + (9c311 − 3c2111)(N−3) + (c2111 − c11111/2)(N−4)(N−3)] = 0",
                i(9) * g("3,1,1")
                    + (&nn - i(3)) * g("2,1,1,1")
                    + &lam
                        * (i(3) * (i(4) * g("4,1") - i(2) * g("2,2,1") + i(2) * g("3,1,1"))
                            + (i(9) * g("3,1,1") - i(3) * g("2,1,1,1")) * (&nn - i(3))
                            + (g("2,1,1,1") - g("1,1,1,1,1") * &half) * (&nn - i(4)) * (&nn - i(3))),
            ),
            (
                "6c41 + 3c32 + c221(N−2) + λ[(5c5 + 3c41 − 2c32) + (N−2)(4c41 − c311 + 3c32 + (N−4)c221 − (N−3)c2111/2)] = 0",
                i(6) * g("4,1")
                    + i(3) * g("3,2")
                    + g("2,2,1") * (&nn - i(2))
                    + &lam
                        * ((i(5) * g("5") + i(3) * g("4,1") - i(2) * g("3,2"))
                            + (&nn - i(2))
                                * (i(4) * g("4,1") - g("3,1,1") + i(3) * g("3,2")
                                    + (&nn - i(4)) * g("2,2,1")
                                    - g("2,1,1,1") * &half * (&nn - i(3)))),
            ),
        ],
        _ => Vec::new(),
    }
}

/// The full-range `k = 5` first relation exactly as printed (with `5c5`).
/// Kept to document that it is off by `−5c5` on every solution.
pub fn full_range_k5_printed(n: usize, lambda: &BigRational, c: &BTreeMap<String, BigRational>) -> BigRational {
    let g = |label: &str| c.get(label).cloned().unwrap_or_else(BigRational::zero);
    let nn = int(n as i64);
    let one = BigRational::one();
    let half = BigRational::new(1.into(), 2.into());
    int(5) * g("5")
        + g("3,2") * (&nn - &one)
        + lambda
            * ((int(5) * g("5") - g("4,1")) * (&nn - &one)
                + (g("3,2") - g("3,1,1") * &half) * (&nn - &one) * (&nn - int(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sympoly::poly::rat;

    fn params(n: usize, lam: BigRational, r: i64) -> ExactParams {
        ExactParams::new(n, lam, r).unwrap()
    }

    #[test]
    fn k2_example() {
        let s = laplace_constraints(&params(4, int(1), 2), 2).unwrap();
        assert_eq!(s.dimension(), 1);
        let c = s.coefficients(0);
        assert_eq!(c["2"], int(1));
        assert_eq!(&c["1,1"] / &c["2"], rat(14, 5));
        assert!(apply_dplus(&params(4, int(1), 2), &s.polynomial(0)).unwrap().is_zero());
    }

    #[test]
    fn k3_truncated_relation() {
        for (n, r) in [(4usize, 1i64), (5, 3), (6, 2)] {
            let s = laplace_constraints(&params(n, rat(1, 2), r), 3).unwrap();
            assert_eq!(s.dimension(), 1);
            let c = s.coefficients(0);
            assert_eq!(c["1,1,1"], int(3) * (&c["2,1"] - &c["3"]));
        }
    }

    #[test]
    fn full_range_dimension() {
        let s = laplace_constraints(&params(5, int(1), 4), 3).unwrap();
        assert_eq!(s.regime, Regime::FullRange);
        assert_eq!(s.dimension(), 2);
        assert_eq!(s.expected_dimension(), 2);
    }

    #[test]
    fn out_of_regime() {
        assert!(matches!(
            laplace_constraints(&params(3, int(1), 1), 4),
            Err(SympolyError::OutOfRegime { k: 4, n: 3 })
        ));
    }

    #[test]
    fn trivial_degrees() {
        let p = params(4, int(2), 1);
        let s0 = laplace_constraints(&p, 0).unwrap();
        assert_eq!(s0.dimension(), 1);
        assert_eq!(s0.polynomial(0), Polynomial::one(4));
        let s1 = laplace_constraints(&p, 1).unwrap();
        assert_eq!(s1.coefficients(0)["1"], int(1));
    }

    #[test]
    fn json_round_trip() {
        let s = laplace_constraints(&params(4, int(1), 2), 2).unwrap();
        let j = s.to_json();
        assert_eq!(j.basis[0]["1,1"], "14/5");
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.contains("\"N\":4"));
        let back: ConstraintJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.polynomial(0).unwrap(), s.polynomial(0));
    }

    #[test]
    fn affine_in_lambda() {
        let p = params(5, int(1), 2);
        for k in 2..=4 {
            let aff = affine_constraint_system(&p, k).unwrap();
            for lam in [rat(1, 3), rat(7, 2), int(5)] {
                let direct = constraint_system(&p.with_lambda(lam.clone()).unwrap(), k).unwrap();
                assert_eq!(aff.at(&lam), direct.rows, "k={k} λ={lam}");
            }
        }
    }
}
