//! Ground and excited wavefunctions of the truncated model, evaluated in log
//! space on the ordered sector `x₁ > x₂ > ⋯ > x_N`.
//!
//! The normalization constant is never computed; every estimator built on
//! these amplitudes is a ratio.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::model::{enumerate_interactions, ground_state_energy, ExactParams, ModelParams};
use crate::sympoly::laguerre::radial_laguerre_with_derivatives;
use crate::sympoly::poly::{FloatPolynomial, Polynomial};
use crate::sympoly::{apply_dplus, laplace_constraints, monomial_symmetric, Partition, SympolyError};

/// Pairwise gaps below this (oscillator units) count as coincident.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WavefunctionError {
    #[error("coordinates {} and {} coincide (gap {gap:e})", .i + 1, .j + 1)]
    CoincidentCoordinates { i: usize, j: usize, gap: f64 },
    #[error("coordinates are not strictly descending at position {}", .0 + 1)]
    NotDescending(usize),
    #[error("expected {expected} coordinates, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid excited-state label: {0}")]
    InvalidLabel(String),
    #[error(transparent)]
    Symbolic(#[from] SympolyError),
}

/// A point of the ordered sector: strictly descending, no gap below
/// [`COINCIDENCE_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct SectorConfiguration(Vec<f64>);

impl SectorConfiguration {
    pub fn new(coords: Vec<f64>) -> Result<Self, WavefunctionError> {
        for i in 1..coords.len() {
            let gap = coords[i - 1] - coords[i];
            if !(gap > 0.0) {
                if gap.abs() < COINCIDENCE_TOLERANCE || gap.is_nan() {
                    return Err(WavefunctionError::CoincidentCoordinates { i: i - 1, j: i, gap });
                }
                return Err(WavefunctionError::NotDescending(i));
            }
            if gap < COINCIDENCE_TOLERANCE {
                return Err(WavefunctionError::CoincidentCoordinates { i: i - 1, j: i, gap });
            }
        }
        Ok(Self(coords))
    }

    /// Sorts arbitrary coordinates into the sector.
    pub fn from_unsorted(mut coords: Vec<f64>) -> Result<Self, WavefunctionError> {
        coords.sort_unstable_by(|a, b| b.total_cmp(a));
        Self::new(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rho_squared(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

fn check_len(p: &ModelParams, x: &SectorConfiguration) -> Result<(), WavefunctionError> {
    if x.len() != p.n() {
        return Err(WavefunctionError::LengthMismatch {
            expected: p.n(),
            got: x.len(),
        });
    }
    Ok(())
}

/// `ln|φ(x)ϕ(x)| = −½Σxᵢ² + λ Σ_{pairs} ln(xᵢ − xⱼ)` on a sorted slice.
/// No validation; callers guarantee the sector.
pub(crate) fn log_amplitude_sorted(p: &ModelParams, x: &[f64]) -> f64 {
    let n = x.len();
    let r = p.range();
    let mut gauss = 0.0;
    let mut pair = 0.0;
    for i in 0..n {
        gauss += x[i] * x[i];
        for j in i + 1..n.min(i + r + 1) {
            pair += (x[i] - x[j]).ln();
        }
    }
    let lam = p.lambda();
    if lam == 0.0 {
        -0.5 * gauss
    } else {
        -0.5 * gauss + lam * pair
    }
}

pub fn log_amplitude(p: &ModelParams, x: &SectorConfiguration) -> Result<f64, WavefunctionError> {
    check_len(p, x)?;
    Ok(log_amplitude_sorted(p, x.coords()))
}

/// Gradient of `ln Ψ₀` and the sum of its diagonal second derivatives.
pub fn derivatives_log(
    p: &ModelParams,
    x: &SectorConfiguration,
) -> Result<(Vec<f64>, f64), WavefunctionError> {
    check_len(p, x)?;
    let x = x.coords();
    let n = x.len();
    let lam = p.lambda();
    let mut grad: Vec<f64> = x.iter().map(|v| -v).collect();
    let mut lap = -(n as f64);
    for i in 0..n {
        for j in i + 1..n.min(i + p.range() + 1) {
            let inv = 1.0 / (x[i] - x[j]);
            grad[i] += lam * inv;
            grad[j] -= lam * inv;
            lap -= 2.0 * lam * inv * inv;
        }
    }
    Ok((grad, lap))
}

/// Three-body sum in both forms.
///
/// `lhs` sums `r⃗ⱼᵢ·r⃗ⱼₖ/(r⃗ⱼᵢ² r⃗ⱼₖ²)` over every centre `j` whose two
/// partners `i < k` are both within range of `j`: for a triple whose outer
/// pair is also in range all three centres appear (and cancel), otherwise
/// only the middle index qualifies. `rhs` is the far-triple form
/// `−Σ_{r<k−i≤2r} 1/(|xᵢ−xⱼ||xⱼ−xₖ|)`.
pub fn three_body_identity(
    p: &ModelParams,
    x: &SectorConfiguration,
) -> Result<(f64, f64), WavefunctionError> {
    check_len(p, x)?;
    let x = x.coords();
    let ints = enumerate_interactions(p);
    let centred = |c: usize, a: usize, b: usize| {
        let (u, v) = (x[c] - x[a], x[c] - x[b]);
        (u * v) / (u * u * v * v)
    };
    let mut lhs = 0.0;
    for t in &ints.triples {
        let (i, j, k) = (t.0, t.1, t.2);
        lhs += centred(j, i, k);
        if k - i <= p.range() {
            lhs += centred(i, j, k) + centred(k, i, j);
        }
    }
    let rhs = -ints
        .far_triples
        .iter()
        .map(|t| 1.0 / ((x[t.0] - x[t.1]).abs() * (x[t.1] - x[t.2]).abs()))
        .sum::<f64>();
    Ok((lhs, rhs))
}

/// Trap, two-body and three-body potential at a sector point.
pub fn potential_energy(p: &ModelParams, x: &SectorConfiguration) -> Result<f64, WavefunctionError> {
    check_len(p, x)?;
    let lam = p.lambda();
    let trap = 0.5 * x.rho_squared();
    if lam == 0.0 {
        return Ok(trap);
    }
    let xs = x.coords();
    let n = xs.len();
    let mut two_body = 0.0;
    for i in 0..n {
        for j in i + 1..n.min(i + p.range() + 1) {
            let g = xs[i] - xs[j];
            two_body += 1.0 / (g * g);
        }
    }
    let (three_body, _) = three_body_identity(p, x)?;
    Ok(trap + lam * (lam - 1.0) * two_body + lam * lam * three_body)
}

/// `E_L = −½(Σ∂ᵢ² ln Ψ₀ + |∇ ln Ψ₀|²) + V`; constant `E⁰` for the exact ground state.
pub fn local_energy(p: &ModelParams, x: &SectorConfiguration) -> Result<f64, WavefunctionError> {
    let (grad, lap) = derivatives_log(p, x)?;
    let g2: f64 = grad.iter().map(|g| g * g).sum();
    Ok(-0.5 * (lap + g2) + potential_energy(p, x)?)
}

/// Sorts `y` descending into `scratch` and returns `ln Ψ`, or `None` on a
/// coincidence. The sampler's hot path.
pub(crate) fn log_symmetrized_into(p: &ModelParams, y: &[f64], scratch: &mut Vec<f64>) -> Option<f64> {
    scratch.clear();
    scratch.extend_from_slice(y);
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    if scratch.windows(2).any(|w| !(w[0] - w[1] >= COINCIDENCE_TOLERANCE)) {
        return None;
    }
    Some(log_amplitude_sorted(p, scratch))
}

/// `ln Ψ^S(y)` for arbitrary coordinates, through the sorting convention.
pub fn log_symmetrized(p: &ModelParams, y: &[f64]) -> Result<f64, WavefunctionError> {
    let x = SectorConfiguration::from_unsorted(y.to_vec())?;
    log_amplitude(p, &x)
}

/// Unnormalized symmetrized ground state `Ψ^S(y)`. Sector supports are
/// disjoint, so sorting `y` and evaluating on the sector reproduces the
/// symmetrized sum up to a constant absorbed into normalization.
pub fn eval_symmetrized(p: &ModelParams, y: &[f64]) -> Result<f64, WavefunctionError> {
    Ok(log_symmetrized(p, y)?.exp())
}

/// Quantum numbers and angular polynomial of an excited state
/// `Ψ_{n,k} = Ψ₀ L_n^ν(ρ²) P_k`, with `ν = E⁰ + k − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitedLabel {
    params: ExactParams,
    radial: u32,
    degree: u32,
    angular: Polynomial,
    angular_f64: FloatPolynomial,
    nu: f64,
}

impl ExcitedLabel {
    /// Builds a label from explicit `c_α`; rejects polynomials that are not
    /// homogeneous of degree `k` or fail `D₊P_k = 0`.
    pub fn new(
        params: &ExactParams,
        radial: u32,
        degree: u32,
        coefficients: &[(Partition, BigRational)],
    ) -> Result<Self, WavefunctionError> {
        let mut poly = Polynomial::zero(params.n());
        for (alpha, c) in coefficients {
            if alpha.weight() != degree {
                return Err(WavefunctionError::InvalidLabel(format!(
                    "partition {alpha} has weight {} ≠ k = {degree}",
                    alpha.weight()
                )));
            }
            poly = &poly + &monomial_symmetric(alpha, params.n())?.scale(c);
        }
        Self::from_polynomial(params, radial, degree, poly)
    }

    pub fn from_polynomial(
        params: &ExactParams,
        radial: u32,
        degree: u32,
        angular: Polynomial,
    ) -> Result<Self, WavefunctionError> {
        if angular.is_zero() {
            return Err(WavefunctionError::InvalidLabel("P_k is identically zero".into()));
        }
        if !angular.is_homogeneous() || angular.degree() != Some(degree) {
            return Err(WavefunctionError::InvalidLabel(format!("P_k is not homogeneous of degree {degree}")));
        }
        let residual = apply_dplus(params, &angular)?;
        if !residual.is_zero() {
            return Err(WavefunctionError::InvalidLabel(format!(
                "constraint residual D₊P_k = {residual} is nonzero"
            )));
        }
        let nu = (params.ground_state_energy() + BigRational::from_integer(degree.into())
            - BigRational::from_integer(1.into()))
        .to_f64()
        .unwrap_or(f64::NAN);
        if !(nu > -1.0) {
            return Err(WavefunctionError::InvalidLabel(format!("ν = {nu} ≤ −1")));
        }
        Ok(Self {
            params: params.clone(),
            radial,
            degree,
            angular_f64: angular.to_float(),
            angular,
            nu,
        })
    }

    /// Uses basis vector `basis_index` of the solved constraint system.
    pub fn from_constraints(
        params: &ExactParams,
        radial: u32,
        degree: u32,
        basis_index: usize,
    ) -> Result<Self, WavefunctionError> {
        let sol = laplace_constraints(params, degree)?;
        if basis_index >= sol.dimension() {
            return Err(WavefunctionError::InvalidLabel(format!(
                "basis index {basis_index} ≥ dimension {}",
                sol.dimension()
            )));
        }
        Self::from_polynomial(params, radial, degree, sol.polynomial(basis_index))
    }

    pub fn ground(params: &ExactParams) -> Self {
        Self::from_polynomial(params, 0, 0, Polynomial::one(params.n())).expect("constant solves D₊P = 0")
    }

    pub fn radial(&self) -> u32 {
        self.radial
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// `s = 2n + k`.
    pub fn level(&self) -> u32 {
        2 * self.radial + self.degree
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn angular(&self) -> &Polynomial {
        &self.angular
    }

    pub fn params(&self) -> &ExactParams {
        &self.params
    }

    /// `E⁰ + 2n + k`.
    pub fn energy(&self) -> f64 {
        ground_state_energy(&self.params.to_numeric()) + self.level() as f64
    }

    fn matches(&self, p: &ModelParams) -> Result<(), WavefunctionError> {
        let q = self.params.to_numeric();
        if q.n() != p.n() || q.range() != p.range() || (q.lambda() - p.lambda()).abs() > 1e-12 * (1.0 + p.lambda()) {
            return Err(WavefunctionError::InvalidLabel(format!(
                "label built for {} used with {}",
                self.params, p
            )));
        }
        Ok(())
    }

    /// `L_n^ν(ρ²) P_k(x)` with its gradient and Laplacian.
    fn envelope(&self, x: &[f64]) -> (f64, Vec<f64>, f64) {
        let rho2: f64 = x.iter().map(|v| v * v).sum();
        let (l, dl, d2l) = radial_laguerre_with_derivatives(self.radial, self.nu, rho2);
        let (pk, gp, lp) = self.angular_f64.eval_with_derivatives(x);
        let n = x.len() as f64;
        let x_dot_gp: f64 = x.iter().zip(&gp).map(|(a, b)| a * b).sum();
        let grad = x
            .iter()
            .zip(&gp)
            .map(|(&xi, &gi)| 2.0 * dl * xi * pk + l * gi)
            .collect();
        let lap = 4.0 * rho2 * d2l * pk + 2.0 * n * dl * pk + 4.0 * dl * x_dot_gp + l * lp;
        (l * pk, grad, lap)
    }
}

/// `(ln|Ψ_{n,k}|, sign)` on a sector point.
pub fn log_excited(
    p: &ModelParams,
    label: &ExcitedLabel,
    x: &SectorConfiguration,
) -> Result<(f64, f64), WavefunctionError> {
    label.matches(p)?;
    check_len(p, x)?;
    let base = log_amplitude_sorted(p, x.coords());
    let rho2 = x.rho_squared();
    let f = crate::sympoly::laguerre::radial_laguerre(label.radial, label.nu, rho2)
        * label.angular_f64.eval(x.coords());
    Ok((base + f.abs().ln(), f.signum()))
}

pub(crate) fn log_abs_excited_sorted(p: &ModelParams, label: &ExcitedLabel, x: &[f64]) -> f64 {
    let base = log_amplitude_sorted(p, x);
    let rho2: f64 = x.iter().map(|v| v * v).sum();
    let f = crate::sympoly::laguerre::radial_laguerre(label.radial, label.nu, rho2) * label.angular_f64.eval(x);
    base + f.abs().ln()
}

/// `φ(x)ϕ(x) L_n^ν(ρ²) P_k(x)`, unnormalized.
pub fn eval_excited(p: &ModelParams, label: &ExcitedLabel, x: &SectorConfiguration) -> Result<f64, WavefunctionError> {
    let (l, s) = log_excited(p, label, x)?;
    Ok(s * l.exp())
}

/// `(HΨ_{n,k})/Ψ_{n,k}` at a sector point away from the nodes.
pub fn excited_local_energy(
    p: &ModelParams,
    label: &ExcitedLabel,
    x: &SectorConfiguration,
) -> Result<f64, WavefunctionError> {
    label.matches(p)?;
    let (grad0, lap0) = derivatives_log(p, x)?;
    let (f, grad_f, lap_f) = label.envelope(x.coords());
    let g2: f64 = grad0.iter().map(|g| g * g).sum();
    let cross: f64 = grad0.iter().zip(&grad_f).map(|(a, b)| a * b).sum();
    let lap_over_psi = lap0 + g2 + 2.0 * cross / f + lap_f / f;
    Ok(-0.5 * lap_over_psi + potential_energy(p, x)?)
}

impl ExactParams {
    /// Convenience for tests and the CLI: `λ` must be exactly representable.
    pub fn from_numeric(p: &ModelParams) -> Option<Self> {
        let lam = BigRational::from_float(p.lambda())?;
        if lam.is_zero() && p.lambda() != 0.0 {
            return None;
        }
        Self::new(p.n(), lam, p.range() as i64).ok()
    }
}
