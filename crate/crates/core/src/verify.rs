//! The invariant suite behind `tcsm verify`: local-energy constancy,
//! three-body identity, virial, SU(1,1) commutators, sl(2,ℂ) blocks,
//! nullspace dimensions and closed-form relations, degeneracy identities,
//! Laguerre closed forms and the radial recurrence.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{build_ladder_rep, commutator_checks, random_symmetric_polynomials, recurrence_checks, sl2_check, su11_identities};
use crate::model::{ground_state_energy, ExactParams, ModelParams};
use crate::sampler::{run_chain, ChainConfig};
use crate::stats::blocking;
use crate::sympoly::constraints::table_relations;
use crate::sympoly::degeneracy::{count_by_quantum_numbers, count_calogero_quantum_numbers, degeneracy_unchecked};
use crate::sympoly::laguerre::{coefficients, radial_laguerre};
use crate::sympoly::poly::{format_rational, int, rat};
use crate::sympoly::{laplace_constraints, partition_count, Regime};
use crate::wavefunction::{local_energy, three_body_identity, SectorConfiguration};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Post-burn-in samples per virial cell.
    pub virial_samples: usize,
    pub polys_per_cell: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            virial_samples: 100_000,
            polys_per_cell: 50,
        }
    }
}

/// `(N, λ, r)` for `N ≤ 6`, `λ ∈ {1/2, 1, 2}`, `1 ≤ r ≤ N−1`.
pub fn standard_cells() -> Vec<(usize, BigRational, usize)> {
    let mut out = Vec::new();
    for n in 2..=6usize {
        for lam in [rat(1, 2), int(1), int(2)] {
            for r in 1..n {
                out.push((n, lam.clone(), r));
            }
        }
    }
    out
}

fn numeric(n: usize, lam: &BigRational, r: usize) -> ModelParams {
    ModelParams::new(n, lam.to_f64().unwrap(), r as i64).expect("valid cell")
}

/// Smallest adjacent gap of the random sector points used for
/// local-energy checks; keeps finite differences away from coincidences.
pub const MIN_SECTOR_GAP: f64 = 0.1;

/// Descending sector point with every adjacent gap at least `min_gap`.
pub fn random_sector_point(rng: &mut ChaCha8Rng, n: usize, min_gap: f64) -> SectorConfiguration {
    loop {
        let mut x: Vec<f64> = (0..n).map(|_| 1.5 * rng.sample::<f64, _>(StandardNormal)).collect();
        x.sort_unstable_by(|a, b| b.total_cmp(a));
        if x.windows(2).all(|w| w[0] - w[1] >= min_gap) {
            return SectorConfiguration::new(x).expect("sorted with gaps");
        }
    }
}

fn local_energy_fd(p: &ModelParams, x: &[f64], h: f64) -> f64 {
    let lp = |y: &[f64]| crate::wavefunction::log_amplitude(p, &SectorConfiguration::new(y.to_vec()).unwrap()).unwrap();
    let l0 = lp(x);
    let mut kin = 0.0;
    let mut y = x.to_vec();
    // Five-point stencil on Ψ(x)/Ψ(x₀), O(h⁴).
    for i in 0..x.len() {
        let mut ratio = |d: f64| {
            y[i] = x[i] + d;
            let v = (lp(&y) - l0).exp();
            y[i] = x[i];
            v
        };
        let (p1, m1, p2, m2) = (ratio(h), ratio(-h), ratio(2.0 * h), ratio(-2.0 * h));
        kin += (16.0 * (p1 + m1) - (p2 + m2) - 30.0) / (12.0 * h * h);
    }
    let v = crate::wavefunction::potential_energy(p, &SectorConfiguration::new(x.to_vec()).unwrap()).unwrap();
    -0.5 * kin + v
}

/// Max relative deviation of `E_L` from `E⁰` over random sector points, for
/// analytic derivatives and for a central finite-difference Laplacian.
pub fn local_energy_spread(p: &ModelParams, points: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e0 = ground_state_energy(p);
    let (mut an, mut fd) = (0.0f64, 0.0f64);
    for _ in 0..points {
        let x = random_sector_point(&mut rng, p.n(), MIN_SECTOR_GAP);
        let e = local_energy(p, &x).unwrap();
        an = an.max(((e - e0) / e0).abs());
        let f = local_energy_fd(p, x.coords(), 1e-3);
        fd = fd.max(((f - e0) / e0).abs());
    }
    (an, fd)
}

fn check_local_energy(seed: u64) -> CheckResult {
    let worst: Vec<(f64, f64)> = standard_cells()
        .par_iter()
        .map(|(n, lam, r)| local_energy_spread(&numeric(*n, lam, *r), 100, seed))
        .collect();
    let an = worst.iter().map(|w| w.0).fold(0.0, f64::max);
    let fd = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    CheckResult::new(
        "local energy constant",
        an < 1e-9 && fd < 1e-5,
        format!("max relative deviation: analytic {an:.2e}, finite-difference {fd:.2e}"),
    )
}

fn check_three_body(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for n in 1..=8usize {
        for r in 0..n {
            let p = ModelParams::new(n, 1.0, r as i64).unwrap();
            for _ in 0..20 {
                let x = random_sector_point(&mut rng, n, 0.05);
                let (l, rr) = three_body_identity(&p, &x).unwrap();
                worst = worst.max((l - rr).abs() / (1.0 + rr.abs()));
            }
        }
    }
    CheckResult::new("three-body identity", worst < 1e-10, format!("max relative |lhs − rhs| = {worst:.2e}"))
}

fn check_virial(opts: &VerifyOptions) -> CheckResult {
    let cells = standard_cells();
    let results: Vec<Result<(f64, f64, f64), String>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, (n, lam, r))| {
            let p = numeric(*n, lam, *r);
            let mut cfg = ChainConfig::ground(opts.seed.wrapping_add(i as u64), opts.virial_samples);
            cfg.burn_in = 1_000;
            let batch = run_chain(&p, &cfg).map_err(|e| e.to_string())?;
            let b = blocking(&batch.sum_x2_series());
            Ok((b.mean, b.std_error, ground_state_energy(&p)))
        })
        .collect();
    let mut fails = Vec::new();
    for ((n, lam, r), res) in cells.iter().zip(&results) {
        match res {
            Ok((m, e, e0)) if (m - e0).abs() <= 3.0 * e => {}
            Ok((m, e, e0)) => fails.push(format!("N={n} λ={lam} r={r}: {m:.4} ± {e:.4} vs {e0}")),
            Err(msg) => fails.push(format!("N={n} λ={lam} r={r}: {msg}")),
        }
    }
    CheckResult::new(
        "virial ⟨Σx²⟩ = E⁰",
        fails.is_empty(),
        if fails.is_empty() {
            format!("{} cells within 3σ", cells.len())
        } else {
            fails.join("; ")
        },
    )
}

fn check_commutators(opts: &VerifyOptions) -> CheckResult {
    let cells = standard_cells();
    let fails: Vec<String> = cells
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, (n, lam, r))| {
            let p = ExactParams::new(*n, lam.clone(), *r as i64).unwrap();
            let polys = random_symmetric_polynomials(*n, 8, opts.polys_per_cell, opts.seed.wrapping_add(i as u64));
            commutator_checks(&p, &su11_identities(), &polys)
                .into_iter()
                .filter(|rep| !rep.pass)
                .map(|rep| format!("N={n} λ={lam} r={r}: {} deviation {}", rep.identity, rep.max_deviation))
                .collect::<Vec<_>>()
        })
        .collect();
    CheckResult::new(
        "SU(1,1) commutators",
        fails.is_empty(),
        if fails.is_empty() {
            format!("{} cells × 4 identities × {} polynomials exact", cells.len(), opts.polys_per_cell)
        } else {
            fails.join("; ")
        },
    )
}

fn check_sl2() -> CheckResult {
    let p = ExactParams::new(5, int(1), 2).unwrap();
    match build_ladder_rep(&p, 20).and_then(|rep| sl2_check(&rep)) {
        Ok(rep) => {
            let worst = rep
                .blocks
                .iter()
                .map(|b| b.casimir_residual.max(b.commutator_residual).max(b.casimir_product_residual))
                .fold(0.0, f64::max);
            CheckResult::new("sl(2) blocks", rep.pass, format!("2 ≤ s ≤ 20, max residual {worst:.2e}"))
        }
        Err(e) => CheckResult::new("sl(2) blocks", false, e.to_string()),
    }
}

/// Nullspace dimension and closed-form relations for one cell; `None` when
/// all hold.
pub fn constraint_cell(n: usize, range: usize, lambda: &BigRational, k: u32) -> Option<String> {
    let p = ExactParams::new(n, lambda.clone(), range as i64).ok()?;
    let sol = match laplace_constraints(&p, k) {
        Ok(s) => s,
        Err(e) => return Some(e.to_string()),
    };
    if sol.dimension() != sol.expected_dimension() {
        return Some(format!("dimension {} ≠ {}", sol.dimension(), sol.expected_dimension()));
    }
    for i in 0..sol.dimension() {
        for (name, res) in table_relations(sol.regime, n, range, lambda, k, &sol.coefficients(i)) {
            if !res.is_zero() {
                return Some(format!("relation {name} residual {}", format_rational(&res)));
            }
        }
    }
    None
}

fn check_constraints() -> CheckResult {
    let mut cells = Vec::new();
    for n in 4..=8usize {
        for lam in [rat(1, 3), int(1), rat(7, 2)] {
            for r in 1..n {
                for k in 0..=5u32.min(n as u32) {
                    cells.push((n, r, lam.clone(), k));
                }
            }
        }
    }
    let fails: Vec<String> = cells
        .par_iter()
        .filter_map(|(n, r, lam, k)| {
            constraint_cell(*n, *r, lam, *k).map(|m| format!("N={n} r={r} λ={lam} k={k}: {m}"))
        })
        .collect();
    CheckResult::new(
        "constraint nullspaces",
        fails.is_empty(),
        if fails.is_empty() {
            format!("{} cells", cells.len())
        } else {
            fails.join("; ")
        },
    )
}

fn check_degeneracy() -> CheckResult {
    let mut fails = Vec::new();
    for n in 1..=10usize {
        for s in 0..=8u32 {
            if count_by_quantum_numbers(Regime::Truncated, n, s) != degeneracy_unchecked(Regime::Truncated, n, s) {
                fails.push(format!("truncated N={n} s={s}"));
            }
            let m = partition_count(s as i64, n);
            if count_by_quantum_numbers(Regime::FullRange, n, s) != m || count_calogero_quantum_numbers(n, s) != m {
                fails.push(format!("full range N={n} s={s}"));
            }
        }
    }
    CheckResult::new("degeneracy identities", fails.is_empty(), fails.join("; "))
}

fn check_laguerre() -> CheckResult {
    let mut worst = 0.0f64;
    let mut exact_ok = true;
    for nu in [rat(-1, 2), int(0), rat(7, 3), int(12)] {
        let c = coefficients(3, &nu);
        // L₃^ν(u) = [(ν+1)(ν+2)(ν+3) − 3(ν+2)(ν+3)u + 3(ν+3)u² − u³]/6
        let one = int(1);
        let expected = [
            (&nu + &one) * (&nu + int(2)) * (&nu + int(3)) / int(6),
            -(&nu + int(2)) * (&nu + int(3)) / int(2),
            (&nu + int(3)) / int(2),
            rat(-1, 6),
        ];
        exact_ok &= c.as_slice() == expected.as_slice();
        let v = nu.to_f64().unwrap();
        for u in [0.0, 0.3, 1.7, 5.0] {
            let closed = [
                1.0,
                1.0 + v - u,
                0.5 * ((v + 1.0) * (v + 2.0) - 2.0 * (v + 2.0) * u + u * u),
            ];
            for (n, want) in closed.iter().enumerate() {
                let got = radial_laguerre(n as u32, v, u);
                worst = worst.max((got - want).abs() / (1.0 + want.abs()));
            }
        }
    }
    CheckResult::new(
        "Laguerre closed forms",
        exact_ok && worst < 1e-12,
        format!("exact L₃ coefficients {}, max float deviation {worst:.2e}", if exact_ok { "match" } else { "differ" }),
    )
}

fn check_recurrence() -> CheckResult {
    let mut fails = Vec::new();
    for (n, lam, r) in [(4, rat(1, 2), 1), (4, int(1), 2), (5, int(2), 4), (6, rat(1, 2), 3), (3, int(1), 2)] {
        let p = ExactParams::new(n, lam.clone(), r).unwrap();
        match recurrence_checks(&p, 3, 3) {
            Ok(reps) => {
                for rep in reps.iter().filter(|x| !x.pass) {
                    fails.push(format!("N={n} λ={lam} r={r} n={} k={}", rep.n, rep.k));
                }
            }
            Err(e) => fails.push(e.to_string()),
        }
    }
    CheckResult::new("radial recurrence", fails.is_empty(), fails.join("; "))
}

/// Runs every check. Each is independent; failures do not stop the suite.
pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let checks = vec![
        check_local_energy(opts.seed),
        check_three_body(opts.seed),
        check_virial(opts),
        check_commutators(opts),
        check_sl2(),
        check_constraints(),
        check_degeneracy(),
        check_laguerre(),
        check_recurrence(),
    ];
    let pass = checks.iter().all(|c| c.pass);
    VerifyReport {
        seed: opts.seed,
        checks,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_checks_pass() {
        for c in [check_three_body(3), check_sl2(), check_degeneracy(), check_laguerre(), check_recurrence()] {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn local_energy_small_cell() {
        let (an, fd) = local_energy_spread(&ModelParams::new(4, 2.0, 2).unwrap(), 20, 5);
        assert!(an < 1e-9 && fd < 1e-5, "{an} {fd}");
    }

    #[test]
    fn constraint_cell_detects_wrong_dimension_claims() {
        assert_eq!(constraint_cell(5, 2, &int(1), 3), None);
        assert_eq!(constraint_cell(5, 4, &rat(7, 2), 4), None);
    }
}
