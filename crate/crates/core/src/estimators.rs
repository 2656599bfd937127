//! Observables from sample batches: density profile, one-body reduced
//! density matrix, momentum distribution and power-law tail fits.
//!
//! Every estimator is a ratio over samples, so the normalization constant of
//! `Ψ` never enters. Statistical errors come from contiguous batch means.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::ModelParams;
use crate::sampler::{run_chain, ChainConfig, SampleBatch, SamplerError, TargetState};
use crate::stats::batch_ranges;
use crate::wavefunction::{log_amplitude_sorted, ExcitedLabel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("{fraction:.4} of particle positions fall outside the grid (limit 0.005)")]
    GridTooNarrow { fraction: f64 },
    #[error("bin at x = {x} holds {count} samples; at least {needed} required")]
    InsufficientBinCounts { x: f64, count: u64, needed: u64 },
    #[error("grid is not symmetric about 0")]
    AsymmetricGrid,
    #[error("non-positive value {value} at x = {x} inside the fit window")]
    NonPositiveData { x: f64, value: f64 },
    #[error("fit window holds {0} points; at least 5 required")]
    WindowTooSmall(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("estimate has the wrong shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Uniform grid `min, min + Δ, …, max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self, EstimatorError> {
        if points < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(EstimatorError::InvalidGrid(format!("[{min}, {max}] with {points} points")));
        }
        Ok(Self { min, max, points })
    }

    pub fn symmetric(half_width: f64, points: usize) -> Result<Self, EstimatorError> {
        Self::new(-half_width, half_width, points)
    }

    /// Default position grid: `|x| ≤ 5`, 101 points.
    pub fn default_position() -> Self {
        Self { min: -5.0, max: 5.0, points: 101 }
    }

    /// Default momentum grid: `|k| ≤ 8`, 161 points.
    pub fn default_momentum() -> Self {
        Self { min: -8.0, max: 8.0, points: 161 }
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.point(i)).collect()
    }

    /// Index of the bin of width `Δ` centred on a grid point that holds `x`.
    pub fn bin(&self, x: f64) -> Option<usize> {
        let t = ((x - self.min) / self.spacing() + 0.5).floor();
        (t >= 0.0 && t < self.points as f64).then_some(t as usize)
    }

    pub fn is_symmetric(&self) -> bool {
        (self.min + self.max).abs() <= 1e-12 * self.max.abs().max(1.0)
    }

    /// Index of `x = 0` on a symmetric grid with odd point count.
    pub fn zero_index(&self) -> Option<usize> {
        (self.is_symmetric() && self.points % 2 == 1).then_some(self.points / 2)
    }

    /// Trapezoid weights including `Δ`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let d = self.spacing();
        (0..self.points)
            .map(|i| if i == 0 || i + 1 == self.points { 0.5 * d } else { d })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct EstimateMetadata {
    pub observable: String,
    pub n: usize,
    pub lambda: f64,
    pub range: usize,
    pub samples: usize,
    pub seed: Option<u64>,
    pub target: String,
}

impl EstimateMetadata {
    fn new(observable: &str, n: usize, samples: usize) -> Self {
        Self {
            observable: observable.into(),
            n,
            samples,
            target: "ground".into(),
            ..Default::default()
        }
    }

    fn with_params(mut self, p: &ModelParams) -> Self {
        self.n = p.n();
        self.lambda = p.lambda();
        self.range = p.range();
        self
    }
}

/// Gridded observable. 2D values are row-major: `values[i * cols + j]` is
/// at `(axes[0][i], axes[1][j])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEstimate {
    pub axes: Vec<Grid>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Samples per bin along the first axis (histogram-based estimates).
    pub counts: Vec<u64>,
    /// Per-batch estimates, used to propagate errors through transforms.
    #[serde(skip)]
    pub batch_values: Vec<Vec<f64>>,
    pub metadata: EstimateMetadata,
    /// Free-form diagnostics (e.g. imaginary residual of a transform).
    pub diagnostics: Vec<(String, f64)>,
}

impl GridEstimate {
    pub fn is_2d(&self) -> bool {
        self.axes.len() == 2
    }

    pub fn axis(&self) -> &Grid {
        &self.axes[0]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axes[1].points + j]
    }

    pub fn err_at(&self, i: usize, j: usize) -> f64 {
        self.std_errors[i * self.axes[1].points + j]
    }

    /// `Σ values · w` with trapezoid weights (1D).
    pub fn integral(&self) -> f64 {
        self.axes[0]
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// `Σ values · Δ` (1D), the histogram normalization.
    pub fn sum_times_spacing(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.axes[0].spacing()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.axes[0].points).map(|i| self.at(i, i)).collect()
    }

    /// Column `x′ = axes[1][j]` as `(values, errors)`.
    pub fn column(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        (0..self.axes[0].points).map(|i| (self.at(i, j), self.err_at(i, j))).unzip()
    }

    /// CSV with header `x,<value>,err` (1D) or `x,xp,<value>,err` (2D).
    pub fn write_csv<W: Write>(&self, mut w: W, value_name: &str, axis_name: &str) -> std::io::Result<()> {
        if self.is_2d() {
            writeln!(w, "{axis_name},{axis_name}p,{value_name},err")?;
            for i in 0..self.axes[0].points {
                for j in 0..self.axes[1].points {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        self.axes[0].point(i),
                        self.axes[1].point(j),
                        self.at(i, j),
                        self.err_at(i, j)
                    )?;
                }
            }
        } else {
            writeln!(w, "{axis_name},{value_name},err")?;
            for (i, (v, e)) in self.values.iter().zip(&self.std_errors).enumerate() {
                writeln!(w, "{},{},{}", self.axes[0].point(i), v, e)?;
            }
        }
        Ok(())
    }
}

/// Default number of contiguous batches for error bars.
pub const DEFAULT_BATCHES: usize = 100;

/// Share of out-of-grid positions tolerated by histogram estimators.
pub const MAX_OUTSIDE_FRACTION: f64 = 0.005;

fn mean_and_error(batch_values: &[Vec<f64>], len: usize) -> (Vec<f64>, Vec<f64>) {
    let b = batch_values.len() as f64;
    let mut mean = vec![0.0; len];
    for v in batch_values {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / b;
        }
    }
    let mut err = vec![0.0; len];
    if batch_values.len() > 1 {
        for v in batch_values {
            for ((e, x), m) in err.iter_mut().zip(v).zip(&mean) {
                *e += (x - m) * (x - m);
            }
        }
        for e in err.iter_mut() {
            *e = (*e / (b * (b - 1.0))).sqrt();
        }
    }
    (mean, err)
}

/// Histogram estimate of `n(x)`, normalized so `Σ n Δx = N` (up to mass
/// outside the grid). Bins are centred on grid points. Errors are batch-mean
/// errors, floored at one count per bin so empty bins are not error-free.
pub fn density_profile(batch: &SampleBatch, grid: &Grid) -> Result<GridEstimate, EstimatorError> {
    density_profile_batched(batch, grid, DEFAULT_BATCHES)
}

pub fn density_profile_batched(
    batch: &SampleBatch,
    grid: &Grid,
    batches: usize,
) -> Result<GridEstimate, EstimatorError> {
    let s = batch.len();
    let n = batch.n_particles();
    if s == 0 {
        return Err(EstimatorError::Shape("empty sample batch".into()));
    }
    let dx = grid.spacing();
    let mut counts = vec![0u64; grid.points];
    let mut outside = 0usize;
    let ranges = batch_ranges(s, batches);
    let mut batch_values = Vec::with_capacity(ranges.len());
    for r in &ranges {
        let mut c = vec![0u64; grid.points];
        for idx in r.clone() {
            for &x in batch.configuration(idx) {
                match grid.bin(x) {
                    Some(b) => c[b] += 1,
                    None => outside += 1,
                }
            }
        }
        let norm = 1.0 / (r.len() as f64 * dx);
        batch_values.push(c.iter().map(|&v| v as f64 * norm).collect());
        for (t, v) in counts.iter_mut().zip(&c) {
            *t += v;
        }
    }
    let fraction = outside as f64 / (s * n) as f64;
    if fraction > MAX_OUTSIDE_FRACTION {
        return Err(EstimatorError::GridTooNarrow { fraction });
    }
    let norm = 1.0 / (s as f64 * dx);
    let values: Vec<f64> = counts.iter().map(|&c| c as f64 * norm).collect();
    let (_, err) = mean_and_error(&batch_values, grid.points);
    let std_errors = err.iter().map(|e| e.max(norm)).collect();
    let mut metadata = EstimateMetadata::new("density", n, s);
    metadata.n = n;
    Ok(GridEstimate {
        axes: vec![*grid],
        values,
        std_errors,
        counts,
        batch_values,
        metadata,
        diagnostics: vec![("outside_fraction".into(), fraction)],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObrdmOptions {
    pub batches: usize,
    /// Bins whose sample count falls below this are estimated from the
    /// transposed side only.
    pub min_bin_count: u64,
    /// Every bin with `|x|` up to this extent must reach `min_bin_count`.
    pub required_extent: f64,
}

impl Default for ObrdmOptions {
    fn default() -> Self {
        Self {
            batches: DEFAULT_BATCHES,
            min_bin_count: 100,
            required_extent: 2.5,
        }
    }
}

/// Accumulates `Σ Ψ(x′_g, z)/Ψ(x_i, z)` into the bin of `x_i` for every
/// particle `i` of every sample (exchange symmetry makes each particle a
/// valid "first" coordinate).
fn accumulate_obrdm(
    p: &ModelParams,
    batch: &SampleBatch,
    range: std::ops::Range<usize>,
    grid: &Grid,
    acc: &mut [f64],
    counts: &mut [u64],
) {
    let n = p.n();
    let g = grid.points;
    let xs = grid.values();
    let mut sorted = Vec::with_capacity(n);
    let mut trial = vec![0.0; n];
    for idx in range {
        sorted.clear();
        sorted.extend_from_slice(batch.configuration(idx));
        sorted.sort_unstable_by(|a, b| b.total_cmp(a));
        let base = log_amplitude_sorted(p, &sorted);
        for i in 0..n {
            let Some(b) = grid.bin(sorted[i]) else { continue };
            counts[b] += 1;
            let row = &mut acc[b * g..(b + 1) * g];
            // z = sorted without i, still descending
            let z: Vec<f64> = sorted[..i].iter().chain(&sorted[i + 1..]).copied().collect();
            for (gi, &xp) in xs.iter().enumerate() {
                let pos = z.partition_point(|&v| v > xp);
                trial[..pos].copy_from_slice(&z[..pos]);
                trial[pos] = xp;
                trial[pos + 1..].copy_from_slice(&z[pos..]);
                let l = log_amplitude_sorted(p, &trial);
                let ratio = (l - base).exp();
                if ratio.is_finite() {
                    row[gi] += ratio;
                }
            }
        }
    }
}

/// Bin-conditioned ratio estimate of `ρ(x, x′)` from ground-state samples.
///
/// Row `b` averages `Ψ(x′, z)/Ψ(x, z)` over samples with `x` in bin `b`
/// and multiplies by `n(x_b)`. The result is symmetrized; where one side's
/// row has fewer than `min_bin_count` samples the other side is used alone.
pub fn obrdm_from_batch(
    p: &ModelParams,
    batch: &SampleBatch,
    grid: &Grid,
    opts: &ObrdmOptions,
) -> Result<GridEstimate, EstimatorError> {
    if batch.n_particles() != p.n() {
        return Err(EstimatorError::Shape("batch particle count differs from N".into()));
    }
    let s = batch.len();
    let n = p.n();
    let g = grid.points;
    let dx = grid.spacing();

    let outside: usize = batch
        .configurations()
        .map(|c| c.iter().filter(|&&x| grid.bin(x).is_none()).count())
        .sum();
    let fraction = outside as f64 / (s * n) as f64;
    if fraction > MAX_OUTSIDE_FRACTION {
        return Err(EstimatorError::GridTooNarrow { fraction });
    }

    let ranges = batch_ranges(s, opts.batches);
    let partial: Vec<(Vec<f64>, Vec<u64>, usize)> = ranges
        .par_iter()
        .map(|r| {
            let mut acc = vec![0.0; g * g];
            let mut counts = vec![0u64; g];
            accumulate_obrdm(p, batch, r.clone(), grid, &mut acc, &mut counts);
            (acc, counts, r.len())
        })
        .collect();

    let mut counts = vec![0u64; g];
    for (_, c, _) in &partial {
        for (t, v) in counts.iter_mut().zip(c) {
            *t += v;
        }
    }
    for (b, &c) in counts.iter().enumerate() {
        let x = grid.point(b);
        if x.abs() <= opts.required_extent + 1e-12 && c < opts.min_bin_count {
            return Err(EstimatorError::InsufficientBinCounts {
                x,
                count: c,
                needed: opts.min_bin_count,
            });
        }
    }
    let good: Vec<bool> = counts.iter().map(|&c| c >= opts.min_bin_count).collect();

    let symmetrize = |raw: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; g * g];
        for a in 0..g {
            for b in 0..g {
                let (ab, ba) = (raw[a * g + b], raw[b * g + a]);
                out[a * g + b] = match (good[a], good[b]) {
                    (true, false) => ab,
                    (false, true) => ba,
                    _ => 0.5 * (ab + ba),
                };
            }
        }
        out
    };

    let batch_values: Vec<Vec<f64>> = partial
        .iter()
        .map(|(acc, _, len)| {
            let norm = 1.0 / (*len as f64 * dx);
            let raw: Vec<f64> = acc.iter().map(|v| v * norm).collect();
            symmetrize(&raw)
        })
        .collect();
    let mut total = vec![0.0; g * g];
    for (acc, _, _) in &partial {
        for (t, v) in total.iter_mut().zip(acc) {
            *t += v;
        }
    }
    let norm = 1.0 / (s as f64 * dx);
    let total: Vec<f64> = total.iter().map(|v| v * norm).collect();
    let values = symmetrize(&total);
    let (_, mut std_errors) = mean_and_error(&batch_values, g * g);
    for e in std_errors.iter_mut() {
        *e = e.max(norm);
    }
    let metadata = EstimateMetadata::new("obrdm", n, s).with_params(p);
    Ok(GridEstimate {
        axes: vec![*grid, *grid],
        values,
        std_errors,
        counts,
        batch_values,
        metadata,
        diagnostics: vec![("outside_fraction".into(), fraction)],
    })
}

/// Samples the ground state with `cfg` and estimates the OBRDM.
pub fn obrdm_grid(p: &ModelParams, cfg: &ChainConfig, grid: &Grid) -> Result<GridEstimate, EstimatorError> {
    let batch = run_chain(p, cfg)?;
    let mut est = obrdm_from_batch(p, &batch, grid, &ObrdmOptions::default())?;
    est.metadata.seed = Some(cfg.seed);
    Ok(est)
}

/// `n(k) = (1/2π) ∬ ρ(x,x′) e^{−ik(x−x′)} dx dx′` by trapezoid quadrature.
/// The imaginary part's largest magnitude is reported in `diagnostics`.
pub fn momentum_distribution(obrdm: &GridEstimate, kgrid: &Grid) -> Result<GridEstimate, EstimatorError> {
    if !obrdm.is_2d() || obrdm.axes[0] != obrdm.axes[1] {
        return Err(EstimatorError::Shape("momentum distribution needs a square 2D OBRDM".into()));
    }
    let grid = obrdm.axes[0];
    if !grid.is_symmetric() {
        return Err(EstimatorError::AsymmetricGrid);
    }
    let xs = grid.values();
    let w = grid.trapezoid_weights();
    let g = grid.points;
    let ks = kgrid.values();
    // e^{−ik(x−x′)} = (cos kx cos kx′ + sin kx sin kx′) − i(sin kx cos kx′ − cos kx sin kx′)
    let basis: Vec<(Vec<f64>, Vec<f64>)> = ks
        .iter()
        .map(|&k| {
            let c = xs.iter().zip(&w).map(|(x, wi)| (k * x).cos() * wi).collect();
            let s = xs.iter().zip(&w).map(|(x, wi)| (k * x).sin() * wi).collect();
            (c, s)
        })
        .collect();
    let transform = |rho: &[f64]| -> (Vec<f64>, f64) {
        let mut max_imag: f64 = 0.0;
        let nk = basis
            .iter()
            .map(|(c, s)| {
                let mut re = 0.0;
                let mut im = 0.0;
                for a in 0..g {
                    let row = &rho[a * g..(a + 1) * g];
                    let rc: f64 = row.iter().zip(c).map(|(r, v)| r * v).sum();
                    let rs: f64 = row.iter().zip(s).map(|(r, v)| r * v).sum();
                    re += c[a] * rc + s[a] * rs;
                    im += s[a] * rc - c[a] * rs;
                }
                max_imag = max_imag.max(im.abs());
                re / (2.0 * PI)
            })
            .collect();
        (nk, max_imag / (2.0 * PI))
    };
    let (values, imag) = transform(&obrdm.values);
    let batch_values: Vec<Vec<f64>> = obrdm.batch_values.par_iter().map(|b| transform(b).0).collect();
    let std_errors = if batch_values.len() > 1 {
        mean_and_error(&batch_values, kgrid.points).1
    } else {
        vec![0.0; kgrid.points]
    };
    let mut metadata = obrdm.metadata.clone();
    metadata.observable = "momentum".into();
    Ok(GridEstimate {
        axes: vec![*kgrid],
        values,
        std_errors,
        counts: Vec::new(),
        batch_values,
        metadata,
        diagnostics: vec![("max_imaginary_residual".into(), imag)],
    })
}

/// `ρ(x,0) = γ/|x|^p` fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub gamma: f64,
    pub gamma_err: f64,
    pub p: f64,
    pub p_err: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub chi2_per_dof: f64,
}

/// Default fit window `x_min ≤ |x| ≤ x_max`.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.5, 2.5);

/// Weighted least squares of `ln ρ = ln γ − p ln|x|` over grid points with
/// `x_min ≤ |x| ≤ x_max` (both signs). Weights are `(ρ/σ)²`; if any error in
/// the window is zero the fit is unweighted. Reported errors are scaled by
/// `√χ²_ν` when that exceeds one.
pub fn powerlaw_fit(
    xs: &[f64],
    values: &[f64],
    errors: &[f64],
    window: (f64, f64),
) -> Result<FitResult, EstimatorError> {
    let (lo, hi) = window;
    let tol = 1e-9;
    let mut pts = Vec::new();
    for ((&x, &v), &e) in xs.iter().zip(values).zip(errors) {
        let ax = x.abs();
        if ax + tol >= lo && ax <= hi + tol {
            if !(v > 0.0) {
                return Err(EstimatorError::NonPositiveData { x, value: v });
            }
            pts.push((ax.ln(), v.ln(), e / v));
        }
    }
    if pts.len() < 5 {
        return Err(EstimatorError::WindowTooSmall(pts.len()));
    }
    let weighted = pts.iter().all(|p| p.2 > 0.0 && p.2.is_finite());
    let wt = |s: f64| if weighted { 1.0 / (s * s) } else { 1.0 };
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(u, y, s) in &pts {
        let w = wt(s);
        sw += w;
        swx += w * u;
        swy += w * y;
        swxx += w * u * u;
        swxy += w * u * y;
    }
    let det = sw * swxx - swx * swx;
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swxx * swy - swx * swxy) / det;
    let dof = (pts.len() - 2) as f64;
    let chi2: f64 = pts
        .iter()
        .map(|&(u, y, s)| wt(s) * (y - intercept - slope * u).powi(2))
        .sum();
    let chi2_per_dof = chi2 / dof;
    // unweighted fits take their scale entirely from the residuals
    let scale = if weighted { chi2_per_dof.max(1.0) } else { chi2_per_dof };
    let var_slope = scale * sw / det;
    let var_intercept = scale * swxx / det;
    let gamma = intercept.exp();
    Ok(FitResult {
        gamma,
        gamma_err: gamma * var_intercept.sqrt(),
        p: -slope,
        p_err: var_slope.sqrt(),
        x_min: lo,
        x_max: hi,
        points: pts.len(),
        chi2_per_dof,
    })
}

/// Fit of the `x′ = 0` column of an OBRDM.
pub fn fit_obrdm(obrdm: &GridEstimate, window: (f64, f64)) -> Result<FitResult, EstimatorError> {
    let grid = obrdm.axes[1];
    let j = grid.zero_index().ok_or(EstimatorError::AsymmetricGrid)?;
    let (v, e) = obrdm.column(j);
    powerlaw_fit(&obrdm.axes[0].values(), &v, &e, window)
}

/// Fits over every window with each edge moved by `−δ, 0, +δ`.
pub fn window_sensitivity(
    obrdm: &GridEstimate,
    window: (f64, f64),
    delta: f64,
) -> Result<Vec<FitResult>, EstimatorError> {
    let mut out = Vec::with_capacity(9);
    for dl in [-delta, 0.0, delta] {
        for dh in [-delta, 0.0, delta] {
            out.push(fit_obrdm(obrdm, (window.0 + dl, window.1 + dh))?);
        }
    }
    Ok(out)
}

/// CSV with header `r,gamma,gamma_err,p,p_err,xmin,xmax`.
pub fn write_fits_csv<W: Write>(mut w: W, fits: &[(usize, FitResult)]) -> std::io::Result<()> {
    writeln!(w, "r,gamma,gamma_err,p,p_err,xmin,xmax")?;
    for (r, f) in fits {
        writeln!(w, "{},{},{},{},{},{},{}", r, f.gamma, f.gamma_err, f.p, f.p_err, f.x_min, f.x_max)?;
    }
    Ok(())
}

/// Density of an excited state from multi-chain sampling of `|Ψ_{n,k}|²`.
pub fn excited_density(
    p: &ModelParams,
    label: &ExcitedLabel,
    cfg: &ChainConfig,
    grid: &Grid,
) -> Result<(GridEstimate, SampleBatch), EstimatorError> {
    let mut cfg = cfg.clone();
    cfg.target = TargetState::Excited(Box::new(label.clone()));
    let batch = run_chain(p, &cfg)?;
    let mut est = density_profile(&batch, grid)?;
    est.metadata = est.metadata.clone().with_params(p);
    est.metadata.seed = Some(cfg.seed);
    est.metadata.target = cfg.target.describe();
    Ok((est, batch))
}

/// Ground-state density from a fresh chain.
pub fn ground_density(p: &ModelParams, cfg: &ChainConfig, grid: &Grid) -> Result<(GridEstimate, SampleBatch), EstimatorError> {
    let batch = run_chain(p, cfg)?;
    let mut est = density_profile(&batch, grid)?;
    est.metadata = est.metadata.clone().with_params(p);
    est.metadata.seed = Some(cfg.seed);
    Ok((est, batch))
}

/// `∫n(k)dk` over ℝ: trapezoid sum on the grid plus the `C/k⁴` tail beyond
/// `|k| = k_max`, with `C` taken from the mean of the two edge values.
pub fn momentum_normalization(nk: &GridEstimate) -> f64 {
    let g = nk.axes[0];
    let kmax = g.max.abs().min(g.min.abs());
    let edge = 0.5 * (nk.values[0] + nk.values[g.points - 1]);
    nk.integral() + 2.0 * edge.max(0.0) * kmax / 3.0
}

/// Number of strict interior local maxima of a profile.
pub fn local_maxima(values: &[f64]) -> usize {
    values.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}

/// `∫_{|k|>k0} n(k) dk` by trapezoid weights.
pub fn tail_mass(nk: &GridEstimate, k0: f64) -> f64 {
    let w = nk.axes[0].trapezoid_weights();
    nk.axes[0]
        .values()
        .iter()
        .zip(&nk.values)
        .zip(&w)
        .filter(|((k, _), _)| k.abs() > k0)
        .map(|((_, v), w)| v * w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_bins() {
        let g = Grid::default_position();
        assert_eq!(g.spacing(), 0.1);
        assert_eq!(g.bin(0.0), Some(50));
        assert_eq!(g.bin(0.049), Some(50));
        assert_eq!(g.bin(0.051), Some(51));
        assert_eq!(g.bin(-5.04), Some(0));
        assert_eq!(g.bin(-5.06), None);
        assert_eq!(g.bin(5.06), None);
        assert_eq!(g.zero_index(), Some(50));
        assert!(Grid::new(1.0, 0.0, 5).is_err());
        assert!(!Grid::new(-1.0, 2.0, 5).unwrap().is_symmetric());
    }

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let v: Vec<f64> = xs.iter().map(|x| 2.0 / x.abs().powf(0.7)).collect();
        let e = vec![0.0; xs.len()];
        let f = powerlaw_fit(&xs, &v, &e, (0.5, 2.0)).unwrap();
        assert!((f.gamma - 2.0).abs() < 1e-12);
        assert!((f.p - 0.7).abs() < 1e-12);
        assert!(f.p_err < 1e-10);
        // weighted fit of the same exact data
        let e: Vec<f64> = v.iter().map(|x| 0.01 * x).collect();
        let f = powerlaw_fit(&xs, &v, &e, (0.5, 2.0)).unwrap();
        assert!((f.p - 0.7).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let xs: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
        let v = vec![1.0; 11];
        let e = vec![0.1; 11];
        assert_eq!(powerlaw_fit(&xs, &v, &e, (0.5, 0.7)), Err(EstimatorError::WindowTooSmall(3)));
        let mut v2 = v.clone();
        v2[6] = -1.0;
        assert!(matches!(
            powerlaw_fit(&xs, &v2, &e, (0.5, 1.0)),
            Err(EstimatorError::NonPositiveData { .. })
        ));
    }

    #[test]
    fn density_normalization_and_narrow_grid() {
        let confs: Vec<Vec<f64>> = (0..1000).map(|i| vec![(i as f64 / 1000.0) - 0.5, 0.3]).collect();
        let b = SampleBatch::from_configurations(2, confs);
        let d = density_profile(&b, &Grid::default_position()).unwrap();
        assert!((d.sum_times_spacing() - 2.0).abs() < 1e-12);
        assert!(d.values.iter().all(|&v| v >= 0.0));
        let narrow = Grid::symmetric(0.2, 5).unwrap();
        assert!(matches!(density_profile(&b, &narrow), Err(EstimatorError::GridTooNarrow { .. })));
    }

    fn gaussian_obrdm(grid: &Grid, n: f64) -> GridEstimate {
        let xs = grid.values();
        let g = grid.points;
        let mut values = vec![0.0; g * g];
        for a in 0..g {
            for b in 0..g {
                values[a * g + b] = n * (-(xs[a] * xs[a] + xs[b] * xs[b]) / 2.0).exp() / PI.sqrt();
            }
        }
        GridEstimate {
            axes: vec![*grid, *grid],
            std_errors: vec![0.0; g * g],
            counts: Vec::new(),
            batch_values: vec![values.clone()],
            values,
            metadata: EstimateMetadata::default(),
            diagnostics: Vec::new(),
        }
    }

    #[test]
    fn gaussian_momentum() {
        let grid = Grid::default_position();
        let rho = gaussian_obrdm(&grid, 5.0);
        let nk = momentum_distribution(&rho, &Grid::default_momentum()).unwrap();
        for (k, v) in nk.axes[0].values().iter().zip(&nk.values) {
            let exact = 5.0 * (-k * k).exp() / PI.sqrt();
            assert!((v - exact).abs() < 1e-5, "k={k}: {v} vs {exact}");
        }
        assert!((nk.integral() - 5.0).abs() < 1e-5);
        assert!(nk.diagnostics[0].1 < 1e-10);
        let shifted = Grid::new(-4.0, 5.0, 91).unwrap();
        assert_eq!(
            momentum_distribution(&gaussian_obrdm(&shifted, 1.0), &Grid::default_momentum()),
            Err(EstimatorError::AsymmetricGrid)
        );
    }

    #[test]
    fn obrdm_ideal_gas() {
        // λ = 0: ρ(x,x′) = N φ₀(x)φ₀(x′) exactly; the ratio estimator needs
        // only the density of x to be right.
        let p = ModelParams::new(3, 0.0, 0).unwrap();
        let mut cfg = ChainConfig::ground(9, 60_000);
        cfg.burn_in = 500;
        let batch = run_chain(&p, &cfg).unwrap();
        let grid = Grid::symmetric(4.0, 41).unwrap();
        let opts = ObrdmOptions {
            required_extent: 1.5,
            ..Default::default()
        };
        let rho = obrdm_from_batch(&p, &batch, &grid, &opts).unwrap();
        let xs = grid.values();
        for a in 0..41 {
            for b in 0..41 {
                assert_eq!(rho.at(a, b), rho.at(b, a));
            }
        }
        let j0 = grid.zero_index().unwrap();
        for a in 10..31 {
            let exact = 3.0 * (-(xs[a] * xs[a]) / 2.0).exp() / PI.sqrt();
            let (v, e) = (rho.at(a, j0), rho.err_at(a, j0));
            assert!((v - exact).abs() < 5.0 * e + 0.02 * exact, "x={}: {v} vs {exact} ± {e}", xs[a]);
        }
        let d = density_profile(&batch, &grid).unwrap();
        for a in 0..41 {
            assert!((rho.at(a, a) - d.values[a]).abs() <= 1e-9 + 3.0 * (d.std_errors[a] + rho.err_at(a, a)));
        }
    }

    #[test]
    fn obrdm_bin_count_guard() {
        let p = ModelParams::new(2, 1.0, 1).unwrap();
        let b = SampleBatch::from_configurations(2, vec![vec![0.5, -0.5]; 200]);
        let grid = Grid::symmetric(4.0, 41).unwrap();
        assert!(matches!(
            obrdm_from_batch(&p, &b, &grid, &ObrdmOptions::default()),
            Err(EstimatorError::InsufficientBinCounts { .. })
        ));
    }

    #[test]
    fn maxima_and_tail() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.0, 2.0, 1.0]), 2);
        let grid = Grid::default_position();
        let nk = momentum_distribution(&gaussian_obrdm(&grid, 1.0), &Grid::default_momentum()).unwrap();
        let exact_tail = 1.0 - libm_erf(2.0);
        assert!((tail_mass(&nk, 2.0) - exact_tail).abs() < 5e-3);
    }

    // erf via its Taylor series; adequate at |x| ≤ 3
    fn libm_erf(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..80 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        2.0 / PI.sqrt() * sum
    }
}
