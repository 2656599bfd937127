//! Model parameters, interaction topology and closed-form energies.
//!
//! Units are fixed globally: `ħ = m = ω = 1`, so lengths are in oscillator
//! lengths `√(ħ/mω)`, energies in `ħω`, and `ω̃ = mω/ħ = 1`.
//!
//! Particle indices are 0-based internally; `Display` impls and error
//! messages print them 1-based.

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("range r = {range} outside 0 ≤ r ≤ N−1 = {max}")]
    RangeOutOfBounds { range: i64, max: i64 },
    #[error("coupling λ = {0} is negative")]
    NegativeCoupling(String),
    #[error("particle count must be at least 1")]
    NoParticles,
}

fn check_shape(n: usize, range: i64) -> Result<usize, ModelError> {
    if n == 0 {
        return Err(ModelError::NoParticles);
    }
    let max = n as i64 - 1;
    if range < 0 || range > max {
        return Err(ModelError::RangeOutOfBounds { range, max });
    }
    Ok(range as usize)
}

/// Validated `(N, λ, r)` for numerical work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    lambda: f64,
    range: usize,
}

impl ModelParams {
    /// Validates raw inputs. `range` is signed so that `r < 0` is reported
    /// rather than wrapped.
    pub fn new(n: usize, lambda: f64, range: i64) -> Result<Self, ModelError> {
        let range = check_shape(n, range)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(ModelError::NegativeCoupling(lambda.to_string()));
        }
        Ok(Self { n, lambda, range })
    }

    /// Full-range Calogero-Sutherland model, `r = N − 1`.
    pub fn full_range(n: usize, lambda: f64) -> Result<Self, ModelError> {
        Self::new(n, lambda, n as i64 - 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn range(&self) -> usize {
        self.range
    }

    /// `ω̃ = mω/ħ`, identically 1 in oscillator units.
    pub fn omega_tilde(&self) -> f64 {
        1.0
    }

    pub fn is_full_range(&self) -> bool {
        self.range + 1 == self.n
    }

    pub fn pair_count(&self) -> usize {
        pair_count(self.n, self.range)
    }

    pub fn in_range(&self, i: usize, j: usize) -> bool {
        i != j && i.abs_diff(j) <= self.range
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={}, λ={}, r={}", self.n, self.lambda, self.range)
    }
}

/// `(N, λ, r)` with an exact rational coupling, for the symbolic engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactParams {
    n: usize,
    lambda: BigRational,
    range: usize,
}

impl ExactParams {
    pub fn new(n: usize, lambda: BigRational, range: i64) -> Result<Self, ModelError> {
        let range = check_shape(n, range)?;
        if lambda.is_negative() {
            return Err(ModelError::NegativeCoupling(lambda.to_string()));
        }
        Ok(Self { n, lambda, range })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> &BigRational {
        &self.lambda
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn is_full_range(&self) -> bool {
        self.range + 1 == self.n
    }

    pub fn in_range(&self, i: usize, j: usize) -> bool {
        i != j && i.abs_diff(j) <= self.range
    }

    pub fn pair_count(&self) -> usize {
        pair_count(self.n, self.range)
    }

    /// Same shape with a different coupling.
    pub fn with_lambda(&self, lambda: BigRational) -> Result<Self, ModelError> {
        Self::new(self.n, lambda, self.range as i64)
    }

    /// `E⁰/ħω` as an exact rational.
    pub fn ground_state_energy(&self) -> BigRational {
        let n = BigRational::from_integer(self.n.into());
        let pairs = BigRational::from_integer(self.pair_count().into());
        let two = BigRational::from_integer(2.into());
        (n + two.clone() * &self.lambda * pairs) / two
    }

    pub fn to_numeric(&self) -> ModelParams {
        ModelParams {
            n: self.n,
            lambda: self.lambda.to_f64().unwrap_or(f64::NAN),
            range: self.range,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.lambda.is_zero()
    }
}

impl fmt::Display for ExactParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={}, λ={}, r={}", self.n, self.lambda, self.range)
    }
}

/// Number of interacting pairs, `r(2N − r − 1)/2`.
pub fn pair_count(n: usize, range: usize) -> usize {
    if n == 0 {
        return 0;
    }
    range * (2 * n - range - 1) / 2
}

pub fn validate_params(n: usize, lambda: f64, range: i64) -> Result<ModelParams, ModelError> {
    ModelParams::new(n, lambda, range)
}

/// `E⁰ = ½[N + λ r(2N − r − 1)]`.
pub fn ground_state_energy(p: &ModelParams) -> f64 {
    0.5 * (p.n as f64 + p.lambda * (2 * p.pair_count()) as f64)
}

/// Ground-state energy with the center-of-mass zero point removed.
pub fn relative_ground_energy(p: &ModelParams) -> f64 {
    ground_state_energy(p) - 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair(pub usize, pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple(pub usize, pub usize, pub usize);

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0 + 1, self.1 + 1)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0 + 1, self.1 + 1, self.2 + 1)
    }
}

/// Explicit index sets of the Hamiltonian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interactions {
    /// `i < j`, `j − i ≤ r`.
    pub pairs: Vec<Pair>,
    /// `i < j < k` with both adjacent gaps in range.
    pub triples: Vec<Triple>,
    /// Triples with `r < k − i ≤ 2r`; these survive the three-body rewrite.
    pub far_triples: Vec<Triple>,
}

pub fn enumerate_interactions(p: &ModelParams) -> Interactions {
    let (n, r) = (p.n, p.range);
    let mut pairs = Vec::with_capacity(p.pair_count());
    // Ordered by neighbor distance first, matching how the sets are usually
    // written out: nearest neighbors, then next-nearest, and so on.
    for d in 1..=r {
        for i in 0..n - d {
            pairs.push(Pair(i, i + d));
        }
    }
    let mut triples = Vec::new();
    let mut far_triples = Vec::new();
    for i in 0..n {
        for j in i + 1..n.min(i + r + 1) {
            for k in j + 1..n.min(j + r + 1) {
                triples.push(Triple(i, j, k));
                if k - i > r {
                    far_triples.push(Triple(i, j, k));
                }
            }
        }
    }
    Interactions {
        pairs,
        triples,
        far_triples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(validate_params(5, 1.0, 4).is_ok());
        assert_eq!(
            validate_params(5, 1.0, 5),
            Err(ModelError::RangeOutOfBounds { range: 5, max: 4 })
        );
        assert!(matches!(
            validate_params(5, 1.0, -1),
            Err(ModelError::RangeOutOfBounds { .. })
        ));
        assert!(matches!(
            validate_params(5, -0.5, 1),
            Err(ModelError::NegativeCoupling(_))
        ));
        assert!(matches!(validate_params(3, f64::NAN, 1), Err(ModelError::NegativeCoupling(_))));
        assert_eq!(validate_params(0, 1.0, 0), Err(ModelError::NoParticles));
        // ideal Bose gas
        let p = validate_params(4, 0.0, 0).unwrap();
        assert_eq!(ground_state_energy(&p), 2.0);
    }

    #[test]
    fn energies() {
        let p = ModelParams::new(5, 1.0, 4).unwrap();
        assert_eq!(ground_state_energy(&p), 12.5);
        let tg: f64 = (0..5).map(|n| n as f64 + 0.5).sum();
        assert_eq!(ground_state_energy(&p), tg);
        assert_eq!(relative_ground_energy(&p), 12.0);
        let p = ModelParams::new(4, 2.0, 1).unwrap();
        assert_eq!(ground_state_energy(&p), 8.0);
        assert_eq!(relative_ground_energy(&p), 7.5);
        let p = ModelParams::new(2, 0.0, 1).unwrap();
        assert_eq!(relative_ground_energy(&p), 0.5);
        for r in 0..7 {
            let p = ModelParams::new(7, 0.0, r).unwrap();
            assert_eq!(ground_state_energy(&p), 3.5);
        }
    }

    #[test]
    fn exact_energy_matches_float() {
        let lam = BigRational::new(7.into(), 2.into());
        let e = ExactParams::new(6, lam, 3).unwrap();
        assert_eq!(
            e.ground_state_energy().to_f64().unwrap(),
            ground_state_energy(&e.to_numeric())
        );
    }

    #[test]
    fn enumeration_examples() {
        let p = ModelParams::new(4, 1.0, 2).unwrap();
        let ints = enumerate_interactions(&p);
        let mut pairs = ints.pairs.clone();
        pairs.sort();
        assert_eq!(
            pairs,
            vec![Pair(0, 1), Pair(0, 2), Pair(1, 2), Pair(1, 3), Pair(2, 3)]
        );
        let p = ModelParams::new(4, 1.0, 1).unwrap();
        assert_eq!(
            enumerate_interactions(&p).triples,
            vec![Triple(0, 1, 2), Triple(1, 2, 3)]
        );
        let p = ModelParams::new(5, 1.0, 4).unwrap();
        assert!(enumerate_interactions(&p).far_triples.is_empty());
        assert_eq!(Triple(0, 1, 2).to_string(), "(1,2,3)");
    }

    #[test]
    fn counts_exhaustive() {
        for n in 1..=12usize {
            for r in 0..n {
                let p = ModelParams::new(n, 1.0, r as i64).unwrap();
                let ints = enumerate_interactions(&p);
                assert_eq!(ints.pairs.len(), r * (2 * n - r - 1) / 2);
                for t in &ints.far_triples {
                    assert!(ints.triples.contains(t));
                }
                // r = 0 has no interactions at all
                assert_eq!(ints.far_triples.is_empty(), r == n - 1 || n < 3 || r == 0, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn energy_monotone_and_linear() {
        for n in 1..=8usize {
            let mut last = f64::NEG_INFINITY;
            for r in 0..n {
                let e = |lam: f64| ground_state_energy(&ModelParams::new(n, lam, r as i64).unwrap());
                assert!(e(1.0) >= last);
                last = e(1.0);
                assert!(e(2.0) >= e(1.0));
                assert!((e(2.0) - 2.0 * e(1.0) + e(0.0)).abs() < 1e-12);
            }
            let full = ModelParams::full_range(n, 1.5).unwrap();
            let nn = n as f64;
            assert_eq!(ground_state_energy(&full), nn / 2.0 + 1.5 * nn * (nn - 1.0) / 2.0);
        }
    }
}
