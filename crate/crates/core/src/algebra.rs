//! Operator-algebra checks: the SU(1,1) generators acting exactly on
//! polynomials, the Euler-operator similarity, and finite matrix
//! representations of the two-oscillator ladders and their sl(2,ℂ)
//! generators.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ExactParams, ModelError};
use crate::sympoly::poly::{format_rational, int, rat};
use crate::sympoly::{apply_dplus, degeneracy, monomial_symmetric, partitions, similarity_series, Polynomial, Regime, SympolyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("s_max = {0} leaves the sl(2) sector empty; need s_max ≥ 2")]
    TruncationTooSmall(u32),
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error(transparent)]
    Symbolic(#[from] SympolyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Differential operators of the spectrum-generating algebra, with
/// `ω̃ = 1`:
/// `K = Σ xᵢ∂ᵢ`, `D₋ = Σ xᵢ²`, `K′ = −(K + E⁰)/2`, `D′₊ = D₊/2`,
/// `D′₋ = Σ xᵢ²/2`. `Euler` is `K` under its other name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PolyOperator {
    K,
    DPlus,
    DMinus,
    KPrime,
    DPlusPrime,
    DMinusPrime,
    Euler,
}

impl fmt::Display for PolyOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PolyOperator::K => "K",
            PolyOperator::DPlus => "D+",
            PolyOperator::DMinus => "D-",
            PolyOperator::KPrime => "K'",
            PolyOperator::DPlusPrime => "D'+",
            PolyOperator::DMinusPrime => "D'-",
            PolyOperator::Euler => "Euler",
        };
        f.write_str(s)
    }
}

/// `D₊` images keyed by input polynomial, shared across the identities
/// checked on one test polynomial.
#[derive(Debug, Default)]
pub struct DplusMemo(HashMap<Polynomial, Polynomial>);

impl DplusMemo {
    fn dplus(&mut self, p: &ExactParams, f: &Polynomial) -> Result<Polynomial, SympolyError> {
        if let Some(v) = self.0.get(f) {
            return Ok(v.clone());
        }
        let v = apply_dplus(p, f)?;
        self.0.insert(f.clone(), v.clone());
        Ok(v)
    }
}

impl PolyOperator {
    pub fn apply(&self, p: &ExactParams, f: &Polynomial) -> Result<Polynomial, SympolyError> {
        self.apply_memo(p, f, &mut DplusMemo::default())
    }

    pub fn apply_memo(&self, p: &ExactParams, f: &Polynomial, memo: &mut DplusMemo) -> Result<Polynomial, SympolyError> {
        Ok(match self {
            PolyOperator::K | PolyOperator::Euler => f.euler(),
            PolyOperator::DPlus => memo.dplus(p, f)?,
            PolyOperator::DMinus => f.times_rho_squared(),
            PolyOperator::KPrime => {
                let shifted = &f.euler() + &f.scale(&p.ground_state_energy());
                shifted.scale(&rat(-1, 2))
            }
            PolyOperator::DPlusPrime => memo.dplus(p, f)?.scale(&rat(1, 2)),
            PolyOperator::DMinusPrime => f.times_rho_squared().scale(&rat(1, 2)),
        })
    }
}

/// `[A, B] = c·C` to be verified.
#[derive(Debug, Clone, PartialEq)]
pub struct Identity {
    pub a: PolyOperator,
    pub b: PolyOperator,
    pub coefficient: BigRational,
    pub expected: PolyOperator,
}

impl Identity {
    pub fn new(a: PolyOperator, b: PolyOperator, coefficient: i64, expected: PolyOperator) -> Self {
        Self {
            a,
            b,
            coefficient: int(coefficient),
            expected,
        }
    }

    pub fn label(&self) -> String {
        format!("[{}, {}] = {}·{}", self.a, self.b, format_rational(&self.coefficient), self.expected)
    }
}

/// The four relations: `[D₊,K] = 2D₊`, `[K′,D′₊] = D′₊`, `[K′,D′₋] = −D′₋`,
/// `[D′₊,D′₋] = −2K′`.
pub fn su11_identities() -> Vec<Identity> {
    use PolyOperator::*;
    vec![
        Identity::new(DPlus, K, 2, DPlus),
        Identity::new(KPrime, DPlusPrime, 1, DPlusPrime),
        Identity::new(KPrime, DMinusPrime, -1, DMinusPrime),
        Identity::new(DPlusPrime, DMinusPrime, -2, KPrime),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub identity: String,
    pub checked: usize,
    /// Test polynomials on which some operator left the polynomial ring.
    pub excluded: usize,
    /// Largest |coefficient| of `[A,B]f − c·Cf`, as `"p/q"`.
    pub max_deviation: String,
    pub pass: bool,
}

/// Max |coefficient| of `[A,B]f − c·Cf`.
fn deviation(p: &ExactParams, id: &Identity, f: &Polynomial, memo: &mut DplusMemo) -> Result<BigRational, SympolyError> {
    let ab = id.a.apply_memo(p, &id.b.apply_memo(p, f, memo)?, memo)?;
    let ba = id.b.apply_memo(p, &id.a.apply_memo(p, f, memo)?, memo)?;
    let rhs = id.expected.apply_memo(p, f, memo)?.scale(&id.coefficient);
    Ok((&(&ab - &ba) - &rhs).max_abs_coefficient())
}

/// Verifies `[A,B]f = c·C f` exactly on every test polynomial.
pub fn commutator_check(p: &ExactParams, id: &Identity, polys: &[Polynomial]) -> CommutatorReport {
    commutator_checks(p, std::slice::from_ref(id), polys).remove(0)
}

/// [`commutator_check`] for several identities, sharing `D₊` images.
pub fn commutator_checks(p: &ExactParams, ids: &[Identity], polys: &[Polynomial]) -> Vec<CommutatorReport> {
    let per_poly: Vec<Vec<Option<BigRational>>> = polys
        .par_iter()
        .map(|f| {
            let mut memo = DplusMemo::default();
            ids.iter().map(|id| deviation(p, id, f, &mut memo).ok()).collect()
        })
        .collect();
    ids.iter()
        .enumerate()
        .map(|(k, id)| {
            let mut max_dev = BigRational::zero();
            let mut checked = 0;
            let mut excluded = 0;
            for d in per_poly.iter().map(|row| &row[k]) {
                match d {
                    Some(m) => {
                        checked += 1;
                        if *m > max_dev {
                            max_dev = m.clone();
                        }
                    }
                    None => excluded += 1,
                }
            }
            CommutatorReport {
                identity: id.label(),
                checked,
                excluded,
                pass: max_dev.is_zero() && checked > 0,
                max_deviation: format_rational(&max_dev),
            }
        })
        .collect()
}

/// Random symmetric polynomials of degree ≤ `max_degree`: a random rational
/// constant plus 1–4 monomial symmetric functions with coefficients `a/b`,
/// `|a| ≤ 9`, `1 ≤ b ≤ 9`.
pub fn random_symmetric_polynomials(n: usize, max_degree: u32, count: usize, seed: u64) -> Vec<Polynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<_> = (1..=max_degree).flat_map(|k| partitions(k, n)).collect();
    let coeff = |rng: &mut ChaCha8Rng| loop {
        let a: i64 = rng.gen_range(-9..=9);
        if a != 0 {
            return rat(a, rng.gen_range(1..=9));
        }
    };
    (0..count)
        .map(|_| {
            let mut f = Polynomial::constant(n, coeff(&mut rng));
            let terms = rng.gen_range(1..=4);
            for alpha in pool.choose_multiple(&mut rng, terms) {
                let m = monomial_symmetric(alpha, n).expect("partition length within N");
                f = &f + &m.scale(&coeff(&mut rng));
            }
            f
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerReport {
    pub degree: Option<u32>,
    /// `K S = n S` exactly.
    pub euler_eigen: bool,
    /// `(2K − D₊)Φ = 2nΦ` for `Φ = exp(−D₊/4)S`; `None` when `Φ` is not a
    /// polynomial (excluded case).
    pub similarity_eigen: Option<bool>,
    pub excluded_reason: Option<String>,
}

/// Checks that a homogeneous `S` is a `K` eigenvector and that its similarity
/// image solves the transformed eigenvalue equation.
pub fn euler_similarity_check(p: &ExactParams, s: &Polynomial) -> Result<EulerReport, AlgebraError> {
    if !s.is_homogeneous() {
        return Err(AlgebraError::NotHomogeneous);
    }
    let n = s.degree().unwrap_or(0);
    let euler_eigen = s.euler() == s.scale(&int(n as i64));
    let phi = similarity_series(p, s).and_then(|phi| {
        let lhs = &phi.euler().scale(&int(2)) - &apply_dplus(p, &phi)?;
        Ok(lhs == phi.scale(&int(2 * n as i64)))
    });
    let (similarity_eigen, excluded_reason) = match phi {
        Ok(ok) => (Some(ok), None),
        Err(e @ SympolyError::NonPolynomial { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    Ok(EulerReport {
        degree: s.degree(),
        euler_eigen,
        similarity_eigen,
        excluded_reason,
    })
}

/// Occupation basis `(n_X, n_rel)` with `s = n_X + 2n_rel ≤ s_max`, ordered by
/// `s`, then by decreasing `n_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderMatrixRep {
    pub s_max: u32,
    pub e0_rel: f64,
    pub basis: Vec<(u32, u32)>,
    pub a_x_plus: DMatrix<f64>,
    pub a_x_minus: DMatrix<f64>,
    pub a_rel_plus: DMatrix<f64>,
    pub a_rel_minus: DMatrix<f64>,
    pub b_rel_plus: DMatrix<f64>,
    pub b_rel_minus: DMatrix<f64>,
    pub n_x: DMatrix<f64>,
    pub n_rel: DMatrix<f64>,
    pub j_plus: DMatrix<f64>,
    pub j_minus: DMatrix<f64>,
    pub j_z: DMatrix<f64>,
    pub casimir: DMatrix<f64>,
    pub h_cm: DMatrix<f64>,
    pub h_rel: DMatrix<f64>,
}

impl LadderMatrixRep {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index(&self, n_x: u32, n_rel: u32) -> Option<usize> {
        self.basis.iter().position(|&b| b == (n_x, n_rel))
    }

    pub fn level(&self, i: usize) -> u32 {
        let (a, b) = self.basis[i];
        a + 2 * b
    }

    /// Basis indices of the fixed-`s` block.
    pub fn block(&self, s: u32) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.level(i) == s).collect()
    }
}

/// Builds the truncated two-oscillator representation for the relative
/// ground energy `E⁰_rel = E⁰ − 1/2`.
///
/// `a_rel^+|n⟩ = √((n+1)(n + E⁰_rel))|n+1⟩`, so `a⁺a⁻ = φ(N̂) =
/// N̂(N̂ − 1 + E⁰_rel)`. `J₊ = (a_X⁺)² b_rel (2(N̂_X+1))^{−1/2}` has entries
/// `√(n_rel(n_X+2)/2)`; `J₋` has entries `√(n_X(n_rel+1)/2)` for `n_X ≥ 2` and
/// vanishes on `n_X < 2` because `(a_X⁻)²` does. The Casimir is built in
/// normal-ordered form: `J₊J₋ → n_X(n_rel+1)/2`, `J₋J₊ → n_rel(n_X+2)/2`
/// on the diagonal.
pub fn build_ladder_rep(p: &ExactParams, s_max: u32) -> Result<LadderMatrixRep, AlgebraError> {
    if s_max < 2 {
        return Err(AlgebraError::TruncationTooSmall(s_max));
    }
    let e0_rel = p.ground_state_energy().to_f64().unwrap_or(f64::NAN) - 0.5;
    let mut basis = Vec::new();
    for s in 0..=s_max {
        for n_rel in 0..=s / 2 {
            basis.push((s - 2 * n_rel, n_rel));
        }
    }
    let d = basis.len();
    let idx: BTreeMap<(u32, u32), usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let zero = || DMatrix::<f64>::zeros(d, d);
    let (mut axp, mut arp, mut brp, mut jp) = (zero(), zero(), zero(), zero());
    let (mut nx, mut nr, mut jz, mut cas, mut hcm, mut hrel) = (zero(), zero(), zero(), zero(), zero(), zero());
    let mut jm = zero();
    for (i, &(a, b)) in basis.iter().enumerate() {
        let (af, bf) = (a as f64, b as f64);
        nx[(i, i)] = af;
        nr[(i, i)] = bf;
        hcm[(i, i)] = af + 0.5;
        hrel[(i, i)] = 2.0 * bf + e0_rel;
        jz[(i, i)] = (af - 2.0 * bf) / 4.0;
        let m = jz[(i, i)];
        cas[(i, i)] = m * m + 0.5 * (af * (bf + 1.0) / 2.0 + bf * (af + 2.0) / 2.0);
        if let Some(&t) = idx.get(&(a + 1, b)) {
            axp[(t, i)] = (af + 1.0).sqrt();
        }
        if let Some(&t) = idx.get(&(a, b + 1)) {
            arp[(t, i)] = ((bf + 1.0) * (bf + e0_rel)).sqrt();
            brp[(t, i)] = (bf + 1.0).sqrt();
        }
        if b >= 1 {
            if let Some(&t) = idx.get(&(a + 2, b - 1)) {
                jp[(t, i)] = (bf * (af + 2.0) / 2.0).sqrt();
            }
        }
        if a >= 2 {
            if let Some(&t) = idx.get(&(a - 2, b + 1)) {
                jm[(t, i)] = (af * (bf + 1.0) / 2.0).sqrt();
            }
        }
    }
    Ok(LadderMatrixRep {
        s_max,
        e0_rel,
        basis,
        a_x_minus: axp.transpose(),
        a_rel_minus: arp.transpose(),
        b_rel_minus: brp.transpose(),
        a_x_plus: axp,
        a_rel_plus: arp,
        b_rel_plus: brp,
        n_x: nx,
        n_rel: nr,
        j_plus: jp,
        j_minus: jm,
        j_z: jz,
        casimir: cas,
        h_cm: hcm,
        h_rel: hrel,
    })
}

fn comm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Largest entry of `m` over rows not in `skip`.
fn max_abs_rows(m: &DMatrix<f64>, skip: &[usize]) -> f64 {
    let mut out: f64 = 0.0;
    for i in 0..m.nrows() {
        if skip.contains(&i) {
            continue;
        }
        for j in 0..m.ncols() {
            out = out.max(m[(i, j)].abs());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualCheck {
    pub name: String,
    pub residual: f64,
    pub excluded_rows: Vec<(u32, u32)>,
    pub pass: bool,
}

pub const MATRIX_TOLERANCE: f64 = 1e-12;

impl ResidualCheck {
    fn new(name: &str, residual: f64, excluded: Vec<(u32, u32)>) -> Self {
        Self {
            name: name.into(),
            residual,
            pass: residual < MATRIX_TOLERANCE,
            excluded_rows: excluded,
        }
    }
}

/// Ladder-level identities: oscillator commutators away from the truncation
/// edge, `[H, a^±]`, and the spectrum `H_CM + H_rel − E⁰ = n_X + 2n_rel`.
pub fn ladder_checks(rep: &LadderMatrixRep) -> Vec<ResidualCheck> {
    let d = rep.dim();
    let edge_x: Vec<usize> = (0..d).filter(|&i| rep.level(i) + 1 > rep.s_max).collect();
    let edge_r: Vec<usize> = (0..d).filter(|&i| rep.level(i) + 2 > rep.s_max).collect();
    let labels = |rows: &[usize]| rows.iter().map(|&i| rep.basis[i]).collect::<Vec<_>>();
    let id = DMatrix::<f64>::identity(d, d);

    let ax = comm(&rep.a_x_minus, &rep.a_x_plus) - &id;
    let deformed = comm(&rep.a_rel_minus, &rep.a_rel_plus) - (&rep.n_rel * 2.0 + &id * rep.e0_rel);
    let phi = &rep.a_rel_plus * &rep.a_rel_minus
        - &rep.n_rel * (&rep.n_rel - &id + &id * rep.e0_rel);
    let hcm_p = comm(&rep.h_cm, &rep.a_x_plus) - &rep.a_x_plus;
    let hcm_m = comm(&rep.h_cm, &rep.a_x_minus) + &rep.a_x_minus;
    let hrel_p = comm(&rep.h_rel, &rep.a_rel_plus) - &rep.a_rel_plus * 2.0;
    let hrel_m = comm(&rep.h_rel, &rep.a_rel_minus) + &rep.a_rel_minus * 2.0;
    let e0 = rep.e0_rel + 0.5;
    let spectrum = &rep.h_cm + &rep.h_rel - &id * e0 - (&rep.n_x + &rep.n_rel * 2.0);
    let bos = comm(&rep.b_rel_minus, &rep.b_rel_plus) - &id;

    vec![
        ResidualCheck::new("[a_X-, a_X+] = 1", max_abs_rows(&ax, &edge_x), labels(&edge_x)),
        ResidualCheck::new("[b_rel-, b_rel+] = 1", max_abs_rows(&bos, &edge_r), labels(&edge_r)),
        ResidualCheck::new(
            "[a_rel-, a_rel+] = 2N_rel + E0_rel",
            max_abs_rows(&deformed, &edge_r),
            labels(&edge_r),
        ),
        ResidualCheck::new("a_rel+ a_rel- = phi(N_rel)", max_abs_rows(&phi, &[]), vec![]),
        ResidualCheck::new("[H_CM, a_X+] = a_X+", max_abs_rows(&hcm_p, &[]), vec![]),
        ResidualCheck::new("[H_CM, a_X-] = -a_X-", max_abs_rows(&hcm_m, &[]), vec![]),
        ResidualCheck::new("[H_rel, a_rel+] = 2 a_rel+", max_abs_rows(&hrel_p, &[]), vec![]),
        ResidualCheck::new("[H_rel, a_rel-] = -2 a_rel-", max_abs_rows(&hrel_m, &[]), vec![]),
        ResidualCheck::new("H_CM + H_rel - E0 = n_X + 2 n_rel", max_abs_rows(&spectrum, &[]), vec![]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub s: u32,
    pub dimension: usize,
    pub expected_dimension: u64,
    pub j: f64,
    pub casimir_expected: f64,
    /// Max |eigenvalue − j(j+1)| of the normal-ordered Casimir on the block.
    pub casimir_residual: f64,
    /// Casimir from explicit matrix products, on rows not excluded.
    pub casimir_product_residual: f64,
    pub commutator_residual: f64,
    /// Rows where `J₋` would leave the basis (`n_X = 1` in odd blocks).
    pub excluded_rows: Vec<(u32, u32)>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sl2Report {
    pub s_max: u32,
    pub blocks: Vec<BlockReport>,
    pub pass: bool,
}

/// Block-by-block sl(2,ℂ) check for `2 ≤ s ≤ s_max`: `[J_z, J±] = ±J±`,
/// `[J₊, J₋] = 2J_z`, block dimension `⌊s/2⌋ + 1` (equal to the main-text
/// degeneracy), and Casimir eigenvalue `(s/4)(s/4 + 1)`.
pub fn sl2_check(rep: &LadderMatrixRep) -> Result<Sl2Report, AlgebraError> {
    if rep.s_max < 2 {
        return Err(AlgebraError::TruncationTooSmall(rep.s_max));
    }
    let blocks: Vec<BlockReport> = (2..=rep.s_max)
        .into_par_iter()
        .map(|s| block_check(rep, s))
        .collect();
    let pass = blocks.iter().all(|b| b.pass);
    Ok(Sl2Report {
        s_max: rep.s_max,
        blocks,
        pass,
    })
}

fn block_check(rep: &LadderMatrixRep, s: u32) -> BlockReport {
    let idx = rep.block(s);
    let sub = |m: &DMatrix<f64>| DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]);
    let (jp, jm, jz, cas) = (sub(&rep.j_plus), sub(&rep.j_minus), sub(&rep.j_z), sub(&rep.casimir));
    let excluded: Vec<usize> = (0..idx.len()).filter(|&a| rep.basis[idx[a]].0 == 1).collect();

    let r1 = max_abs_rows(&(comm(&jz, &jp) - &jp), &[]);
    let r2 = max_abs_rows(&(comm(&jz, &jm) + &jm), &[]);
    let r3 = max_abs_rows(&(comm(&jp, &jm) - &jz * 2.0), &excluded);
    let products = &jz * &jz + (&jp * &jm + &jm * &jp) * 0.5;

    let j = s as f64 / 4.0;
    let expected = j * (j + 1.0);
    let eye = DMatrix::<f64>::identity(idx.len(), idx.len());
    let casimir_product_residual = max_abs_rows(&(products - &eye * expected), &excluded);
    let casimir_residual = cas
        .symmetric_eigenvalues()
        .iter()
        .map(|e| (e - expected).abs())
        .fold(0.0, f64::max);
    let expected_dimension = degeneracy::degeneracy_unchecked(Regime::Truncated, usize::MAX, s);
    let commutator_residual = r1.max(r2).max(r3);
    BlockReport {
        s,
        dimension: idx.len(),
        expected_dimension,
        j,
        casimir_expected: expected,
        pass: idx.len() as u64 == expected_dimension
            && casimir_residual < MATRIX_TOLERANCE
            && casimir_product_residual < MATRIX_TOLERANCE
            && commutator_residual < MATRIX_TOLERANCE,
        casimir_residual,
        casimir_product_residual,
        commutator_residual,
        excluded_rows: excluded.iter().map(|&a| rep.basis[idx[a]]).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport {
    pub n: u32,
    pub k: u32,
    pub solutions: usize,
    pub pass: bool,
}

/// `D₊/4 [ρ^{2n} P_k] = n(E⁰ + k − 1 + n) ρ^{2(n−1)} P_k` for every basis
/// solution `P_k` of the Laplace constraints, `n ≤ n_max`, `k ≤ k_max`.
pub fn recurrence_checks(p: &ExactParams, n_max: u32, k_max: u32) -> Result<Vec<RecurrenceReport>, AlgebraError> {
    let mut out = Vec::new();
    for k in 0..=k_max.min(p.n() as u32) {
        let sol = crate::sympoly::laplace_constraints(p, k)?;
        for n in 0..=n_max {
            let mut pass = sol.dimension() > 0;
            for i in 0..sol.dimension() {
                pass &= crate::sympoly::recurrence_check(p, k, n, &sol.polynomial(i))?;
            }
            out.push(RecurrenceReport {
                n,
                k,
                solutions: sol.dimension(),
                pass,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraReport {
    pub n: usize,
    pub lambda: String,
    pub range: usize,
    pub commutators: Vec<CommutatorReport>,
    pub euler: Vec<EulerReport>,
    pub ladder: Vec<ResidualCheck>,
    pub sl2: Sl2Report,
    pub recurrence: Vec<RecurrenceReport>,
    pub pass: bool,
}

/// Full operator-algebra verification for one parameter cell.
pub fn algebra_report(p: &ExactParams, n_polys: usize, max_degree: u32, s_max: u32, seed: u64) -> Result<AlgebraReport, AlgebraError> {
    let polys = random_symmetric_polynomials(p.n(), max_degree, n_polys, seed);
    let commutators = commutator_checks(p, &su11_identities(), &polys);
    let mut euler = Vec::new();
    for k in 0..=max_degree.min(4) {
        for alpha in partitions(k, p.n()) {
            euler.push(euler_similarity_check(p, &monomial_symmetric(&alpha, p.n())?)?);
        }
    }
    let rep = build_ladder_rep(p, s_max)?;
    let ladder = ladder_checks(&rep);
    let sl2 = sl2_check(&rep)?;
    let recurrence = recurrence_checks(p, 3, 3)?;
    let pass = commutators.iter().all(|c| c.pass)
        && euler.iter().all(|e| e.euler_eigen && e.similarity_eigen != Some(false))
        && ladder.iter().all(|c| c.pass)
        && sl2.pass
        && recurrence.iter().all(|r| r.pass);
    Ok(AlgebraReport {
        n: p.n(),
        lambda: format_rational(p.lambda()),
        range: p.range(),
        commutators,
        euler,
        ladder,
        sl2,
        recurrence,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sympoly::Partition;

    fn params(n: usize, lam: BigRational, r: i64) -> ExactParams {
        ExactParams::new(n, lam, r).unwrap()
    }

    #[test]
    fn su11_on_random_polynomials() {
        let p = params(4, int(1), 2);
        let polys = random_symmetric_polynomials(4, 8, 50, 1);
        assert!(polys.iter().all(|f| f.is_symmetric() && f.degree().unwrap() <= 8));
        for id in su11_identities() {
            let rep = commutator_check(&p, &id, &polys);
            assert!(rep.pass, "{rep:?}");
            assert_eq!(rep.checked, 50);
        }
    }

    #[test]
    fn wrong_identity_is_caught() {
        let p = params(3, rat(1, 2), 1);
        let polys = random_symmetric_polynomials(3, 6, 10, 2);
        let bad = Identity::new(PolyOperator::DPlus, PolyOperator::K, 1, PolyOperator::DPlus);
        assert!(!commutator_check(&p, &bad, &polys).pass);
    }

    #[test]
    fn euler_examples() {
        let p = params(4, int(1), 2);
        let m2 = monomial_symmetric(&Partition::new(vec![2]).unwrap(), 4).unwrap();
        let rep = euler_similarity_check(&p, &m2).unwrap();
        assert!(rep.euler_eigen);
        assert_eq!(rep.similarity_eigen, Some(true));
        let m1 = monomial_symmetric(&Partition::new(vec![1]).unwrap(), 4).unwrap();
        assert_eq!(similarity_series(&p, &m1).unwrap(), m1);
        let c = Polynomial::one(4);
        assert_eq!(euler_similarity_check(&p, &c).unwrap().degree, Some(0));
        // non-polynomial similarity image is an excluded case, not a failure
        let p = params(3, int(1), 1);
        let m4 = monomial_symmetric(&Partition::new(vec![4]).unwrap(), 3).unwrap();
        let rep = euler_similarity_check(&p, &m4).unwrap();
        assert!(rep.euler_eigen);
        assert_eq!(rep.similarity_eigen, None);
        assert!(rep.excluded_reason.is_some());
        let inhom = &m4 + &Polynomial::one(3);
        assert_eq!(euler_similarity_check(&p, &inhom), Err(AlgebraError::NotHomogeneous));
    }

    #[test]
    fn ladder_rep() {
        let p = params(5, int(1), 2);
        assert_eq!(build_ladder_rep(&p, 1), Err(AlgebraError::TruncationTooSmall(1)));
        let rep = build_ladder_rep(&p, 20).unwrap();
        let expected: usize = (0..=20u32).map(|s| (s / 2 + 1) as usize).sum();
        assert_eq!(rep.dim(), expected);
        for c in ladder_checks(&rep) {
            assert!(c.pass, "{c:?}");
        }
        let sl2 = sl2_check(&rep).unwrap();
        assert!(sl2.pass);
        let b4 = &sl2.blocks[2];
        assert_eq!((b4.s, b4.dimension, b4.casimir_expected), (4, 3, 2.0));
        let b2 = &sl2.blocks[0];
        assert_eq!((b2.dimension, b2.casimir_expected), (2, 0.75));
        // only odd blocks carry the n_X = 1 exclusion
        for b in &sl2.blocks {
            assert_eq!(b.excluded_rows.is_empty(), b.s % 2 == 0);
        }
    }

    #[test]
    fn two_oscillator_count_matches_degeneracy() {
        let rep = build_ladder_rep(&params(3, int(2), 1), 40).unwrap();
        for s in 0..=40 {
            assert_eq!(
                rep.block(s).len() as u64,
                degeneracy::degeneracy_unchecked(Regime::Truncated, 100, s)
            );
        }
    }

    #[test]
    fn recurrence_low_orders() {
        for rep in recurrence_checks(&params(4, rat(1, 2), 1), 3, 3).unwrap() {
            assert!(rep.pass, "{rep:?}");
        }
    }
}
