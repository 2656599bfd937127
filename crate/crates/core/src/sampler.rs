//! Random-walk Metropolis sampling of `|Ψ|²` in unconstrained coordinates.
//!
//! The target is evaluated through the sorting convention, so chains move
//! freely between sectors and sample the symmetrized fluid. Each chain draws
//! from its own ChaCha8 stream (`stream = chain index`) of a generator seeded
//! with the run seed, which makes runs bit-reproducible regardless of how
//! chains are scheduled across threads.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ground_state_energy, ModelParams};
use crate::stats::{blocking, effective_sample_size, integrated_autocorrelation_time};
use crate::wavefunction::{log_abs_excited_sorted, log_symmetrized_into, ExcitedLabel, COINCIDENCE_TOLERANCE};

/// Generator name recorded in run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64(seed), stream = chain index";

/// Acceptance rate the burn-in adaptation steers toward.
pub const TARGET_ACCEPTANCE: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),
    #[error("step-size adaptation failed: chain {chain} accepts {rate:.3} of moves after burn-in")]
    AdaptationFailed { chain: usize, rate: f64 },
    #[error("target amplitude is not finite at {0:?}")]
    NonFiniteAmplitude(Vec<f64>),
    #[error("could not find a valid starting configuration for chain {0}")]
    NoStartingPoint(usize),
    #[error("{got} samples after thinning; at least {needed} required")]
    InsufficientSamples { got: usize, needed: usize },
    #[error("excited-state label does not match the model parameters")]
    LabelMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetState {
    Ground,
    Excited(Box<ExcitedLabel>),
}

impl TargetState {
    pub fn describe(&self) -> String {
        match self {
            TargetState::Ground => "ground".into(),
            TargetState::Excited(l) => format!("excited(n={}, k={})", l.radial(), l.degree()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub seed: u64,
    /// Retained samples in total, split as evenly as possible over chains.
    pub n_samples: usize,
    /// Sweeps discarded per chain; the step size adapts during these.
    pub burn_in: usize,
    /// Sweeps between retained samples.
    pub thinning: usize,
    /// Initial Gaussian proposal width.
    pub step_size: f64,
    pub n_chains: usize,
    pub target: TargetState,
}

impl ChainConfig {
    pub fn ground(seed: u64, n_samples: usize) -> Self {
        Self {
            seed,
            n_samples,
            burn_in: 2_000,
            thinning: 1,
            step_size: 0.5,
            n_chains: 1,
            target: TargetState::Ground,
        }
    }

    /// Excited targets have nodes; default to 16 overdispersed chains.
    pub fn excited(seed: u64, n_samples: usize, label: ExcitedLabel) -> Self {
        Self {
            n_chains: 16,
            target: TargetState::Excited(Box::new(label)),
            ..Self::ground(seed, n_samples)
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.n_samples == 0 {
            return Err(SamplerError::InvalidConfig("n_samples must be positive".into()));
        }
        if self.thinning == 0 {
            return Err(SamplerError::InvalidConfig("thinning must be at least 1".into()));
        }
        if self.n_chains == 0 {
            return Err(SamplerError::InvalidConfig("n_chains must be at least 1".into()));
        }
        if self.n_samples < self.n_chains {
            return Err(SamplerError::InvalidConfig("fewer samples than chains".into()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(SamplerError::InvalidConfig("step size must be positive".into()));
        }
        Ok(())
    }
}

/// Per-chain bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub chain: usize,
    pub samples: usize,
    pub acceptance_rate: f64,
    pub step_size: f64,
}

/// Retained configurations, chain after chain. Metropolis weights are all one.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    n_particles: usize,
    coords: Vec<f64>,
    pub chains: Vec<ChainSummary>,
    /// Overall acceptance rate of production sweeps.
    pub acceptance_rate: f64,
    /// Effective sample size per registered scalar observable.
    pub ess: BTreeMap<String, f64>,
}

impl SampleBatch {
    pub fn from_configurations(n_particles: usize, configurations: Vec<Vec<f64>>) -> Self {
        let n = configurations.len();
        let coords: Vec<f64> = configurations.into_iter().flatten().collect();
        assert_eq!(coords.len(), n * n_particles);
        let mut b = Self {
            n_particles,
            coords,
            chains: vec![ChainSummary {
                chain: 0,
                samples: n,
                acceptance_rate: 1.0,
                step_size: 0.0,
            }],
            acceptance_rate: 1.0,
            ess: BTreeMap::new(),
        };
        b.refresh_ess();
        b
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.n_particles).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn configuration(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n_particles..(i + 1) * self.n_particles]
    }

    pub fn configurations(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.n_particles)
    }

    pub fn weight(&self, _i: usize) -> f64 {
        1.0
    }

    /// `Σᵢ xᵢ²` per sample.
    pub fn sum_x2_series(&self) -> Vec<f64> {
        self.configurations().map(|c| c.iter().map(|x| x * x).sum()).collect()
    }

    /// Center of mass per sample.
    pub fn center_of_mass_series(&self) -> Vec<f64> {
        let n = self.n_particles as f64;
        self.configurations().map(|c| c.iter().sum::<f64>() / n).collect()
    }

    fn refresh_ess(&mut self) {
        self.ess.insert("sum_x2".into(), effective_sample_size(&self.sum_x2_series()));
        self.ess.insert("center_of_mass".into(), effective_sample_size(&self.center_of_mass_series()));
    }

    /// Concatenates batches with matching particle count.
    pub fn merge(mut self, other: SampleBatch) -> SampleBatch {
        assert_eq!(self.n_particles, other.n_particles);
        let (a, b) = (self.len() as f64, other.len() as f64);
        self.acceptance_rate = (self.acceptance_rate * a + other.acceptance_rate * b) / (a + b);
        let offset = self.chains.len();
        self.chains.extend(other.chains.into_iter().map(|mut c| {
            c.chain += offset;
            c
        }));
        self.coords.extend(other.coords);
        self.refresh_ess();
        self
    }

    /// Raw dump with header `chain,step,x1..xN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "chain,step")?;
        for i in 1..=self.n_particles {
            write!(w, ",x{i}")?;
        }
        writeln!(w)?;
        let mut idx = 0;
        for c in &self.chains {
            for step in 0..c.samples {
                write!(w, "{},{}", c.chain, step)?;
                for x in self.configuration(idx) {
                    write!(w, ",{x}")?;
                }
                writeln!(w)?;
                idx += 1;
            }
        }
        Ok(())
    }
}

struct Target<'a> {
    params: &'a ModelParams,
    label: Option<&'a ExcitedLabel>,
    scratch: Vec<f64>,
}

impl Target<'_> {
    /// `ln|Ψ|²`; `−∞` on coincidences and nodes.
    fn log_density(&mut self, y: &[f64]) -> Result<f64, SamplerError> {
        let Some(base) = log_symmetrized_into(self.params, y, &mut self.scratch) else {
            return Ok(f64::NEG_INFINITY);
        };
        let l = match self.label {
            None => base,
            Some(label) => log_abs_excited_sorted(self.params, label, &self.scratch),
        };
        if l.is_nan() || l == f64::INFINITY {
            return Err(SamplerError::NonFiniteAmplitude(y.to_vec()));
        }
        Ok(2.0 * l)
    }
}

fn has_close_pair(y: &[f64]) -> bool {
    let mut s = y.to_vec();
    s.sort_unstable_by(|a, b| b.total_cmp(a));
    s.windows(2).any(|w| w[0] - w[1] < COINCIDENCE_TOLERANCE)
}

struct ChainOutput {
    coords: Vec<f64>,
    summary: ChainSummary,
}

fn run_single_chain(
    p: &ModelParams,
    cfg: &ChainConfig,
    chain: usize,
    samples: usize,
) -> Result<ChainOutput, SamplerError> {
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64);
    let label = match &cfg.target {
        TargetState::Ground => None,
        TargetState::Excited(l) => Some(l.as_ref()),
    };
    let mut target = Target {
        params: p,
        label,
        scratch: Vec::with_capacity(n),
    };

    // overdispersed start: 1.5× the typical single-particle spread
    let energy = label.map_or_else(|| ground_state_energy(p), |l| l.energy());
    let spread = 1.5 * (energy / n as f64).max(0.5).sqrt();
    let mut y = vec![0.0; n];
    let mut logp = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        for v in y.iter_mut() {
            *v = spread * rng.sample::<f64, _>(StandardNormal);
        }
        logp = target.log_density(&y)?;
        if logp.is_finite() {
            break;
        }
    }
    if !logp.is_finite() {
        return Err(SamplerError::NoStartingPoint(chain));
    }

    let mut step = cfg.step_size;
    let mut sweep = |y: &mut Vec<f64>, logp: &mut f64, step: f64, rng: &mut ChaCha8Rng| -> Result<usize, SamplerError> {
        let mut accepted = 0;
        for i in 0..n {
            let old = y[i];
            y[i] = old + step * rng.sample::<f64, _>(StandardNormal);
            let new = target.log_density(y)?;
            let u: f64 = rng.gen();
            if new.is_finite() && u.ln() < new - *logp {
                *logp = new;
                accepted += 1;
            } else {
                y[i] = old;
            }
        }
        Ok(accepted)
    };

    const ADAPT_EVERY: usize = 50;
    let mut window_acc = 0;
    for s in 0..cfg.burn_in {
        window_acc += sweep(&mut y, &mut logp, step, &mut rng)?;
        if (s + 1) % ADAPT_EVERY == 0 {
            let rate = window_acc as f64 / (ADAPT_EVERY * n) as f64;
            step *= (2.0 * (rate - TARGET_ACCEPTANCE)).exp();
            step = step.clamp(1e-4, 20.0);
            window_acc = 0;
        }
    }

    let mut coords = Vec::with_capacity(samples * n);
    let mut accepted = 0usize;
    for _ in 0..samples {
        for _ in 0..cfg.thinning {
            accepted += sweep(&mut y, &mut logp, step, &mut rng)?;
        }
        debug_assert!(!has_close_pair(&y));
        coords.extend_from_slice(&y);
    }
    let rate = accepted as f64 / (samples * cfg.thinning * n) as f64;
    if !(0.1..=0.9).contains(&rate) {
        return Err(SamplerError::AdaptationFailed { chain, rate });
    }
    Ok(ChainOutput {
        coords,
        summary: ChainSummary {
            chain,
            samples,
            acceptance_rate: rate,
            step_size: step,
        },
    })
}

/// Runs `cfg.n_chains` independent chains (in parallel) and concatenates
/// their retained samples in chain order.
pub fn run_chain(p: &ModelParams, cfg: &ChainConfig) -> Result<SampleBatch, SamplerError> {
    cfg.validate()?;
    if let TargetState::Excited(l) = &cfg.target {
        let q = l.params().to_numeric();
        if q.n() != p.n() || q.range() != p.range() || (q.lambda() - p.lambda()).abs() > 1e-12 * (1.0 + p.lambda()) {
            return Err(SamplerError::LabelMismatch);
        }
    }
    let per = crate::stats::batch_ranges(cfg.n_samples, cfg.n_chains);
    let outputs: Vec<ChainOutput> = per
        .par_iter()
        .enumerate()
        .map(|(c, r)| run_single_chain(p, cfg, c, r.len()))
        .collect::<Result<_, _>>()?;
    let total: usize = outputs.iter().map(|o| o.summary.samples).sum();
    let acceptance_rate = outputs
        .iter()
        .map(|o| o.summary.acceptance_rate * o.summary.samples as f64)
        .sum::<f64>()
        / total as f64;
    let mut coords = Vec::with_capacity(total * p.n());
    let mut chains = Vec::new();
    for o in outputs {
        coords.extend(o.coords);
        chains.push(o.summary);
    }
    let mut batch = SampleBatch {
        n_particles: p.n(),
        coords,
        chains,
        acceptance_rate,
        ess: BTreeMap::new(),
    };
    batch.refresh_ess();
    Ok(batch)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableReport {
    pub name: String,
    pub mean: f64,
    pub std_error: f64,
    pub autocorrelation_time: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub samples: usize,
    pub acceptance_rate: f64,
    pub chains: Vec<ChainSummary>,
    pub observables: Vec<ObservableReport>,
}

pub const MIN_DIAGNOSTIC_SAMPLES: usize = 100;

fn observable(name: &str, series: &[f64]) -> ObservableReport {
    let b = blocking(series);
    ObservableReport {
        name: name.to_string(),
        mean: b.mean,
        std_error: b.std_error,
        autocorrelation_time: integrated_autocorrelation_time(series),
        ess: effective_sample_size(series),
    }
}

/// Acceptance, autocorrelation time, ESS and blocking errors for `Σx²` and
/// the center of mass.
pub fn diagnostics(batch: &SampleBatch) -> Result<DiagnosticsReport, SamplerError> {
    if batch.len() < MIN_DIAGNOSTIC_SAMPLES {
        return Err(SamplerError::InsufficientSamples {
            got: batch.len(),
            needed: MIN_DIAGNOSTIC_SAMPLES,
        });
    }
    Ok(DiagnosticsReport {
        samples: batch.len(),
        acceptance_rate: batch.acceptance_rate,
        chains: batch.chains.clone(),
        observables: vec![
            observable("sum_x2", &batch.sum_x2_series()),
            observable("center_of_mass", &batch.center_of_mass_series()),
        ],
    })
}

/// Diagnostics for an arbitrary scalar series (e.g. synthetic input).
pub fn series_diagnostics(name: &str, series: &[f64]) -> Result<ObservableReport, SamplerError> {
    if series.len() < MIN_DIAGNOSTIC_SAMPLES {
        return Err(SamplerError::InsufficientSamples {
            got: series.len(),
            needed: MIN_DIAGNOSTIC_SAMPLES,
        });
    }
    Ok(observable(name, series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;

    #[test]
    fn config_validation() {
        let mut c = ChainConfig::ground(1, 10);
        assert!(c.validate().is_ok());
        c.thinning = 0;
        assert!(matches!(c.validate(), Err(SamplerError::InvalidConfig(_))));
        let mut c = ChainConfig::ground(1, 0);
        assert!(c.validate().is_err());
        c.n_samples = 10;
        c.step_size = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn deterministic_streams() {
        let p = ModelParams::new(3, 1.0, 1).unwrap();
        let mut cfg = ChainConfig::ground(42, 2_000);
        cfg.n_chains = 3;
        cfg.burn_in = 200;
        let a = run_chain(&p, &cfg).unwrap();
        let b = run_chain(&p, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed = 43;
        assert_ne!(run_chain(&p, &cfg).unwrap().configuration(10), a.configuration(10));
    }

    #[test]
    fn single_oscillator() {
        let p = ModelParams::new(1, 0.0, 0).unwrap();
        let mut cfg = ChainConfig::ground(7, 40_000);
        cfg.burn_in = 500;
        let batch = run_chain(&p, &cfg).unwrap();
        let x2 = batch.sum_x2_series();
        let b = blocking(&x2);
        assert!((b.mean - 0.5).abs() < 3.0 * b.std_error, "{} ± {}", b.mean, b.std_error);
        let x4: Vec<f64> = x2.iter().map(|v| v * v).collect();
        let b4 = blocking(&x4);
        assert!((b4.mean - 0.75).abs() < 3.0 * b4.std_error, "{} ± {}", b4.mean, b4.std_error);
        let x: Vec<f64> = batch.configurations().map(|c| c[0]).collect();
        assert!(mean(&x).abs() < 3.0 * blocking(&x).std_error);
        assert!((0.2..=0.7).contains(&batch.acceptance_rate));
    }

    #[test]
    fn no_close_pairs_accepted() {
        let p = ModelParams::new(4, 0.0, 3).unwrap();
        let mut cfg = ChainConfig::ground(3, 5_000);
        cfg.burn_in = 100;
        let batch = run_chain(&p, &cfg).unwrap();
        assert!(batch.configurations().all(|c| !has_close_pair(c)));
    }

    #[test]
    fn diagnostics_edges() {
        let b = SampleBatch::from_configurations(1, vec![vec![0.3]; 50]);
        assert!(matches!(diagnostics(&b), Err(SamplerError::InsufficientSamples { got: 50, .. })));
        let b = SampleBatch::from_configurations(1, vec![vec![0.3]; 500]);
        let rep = diagnostics(&b).unwrap();
        assert!(rep.observables[0].std_error < 1e-12);
        assert!(rep.observables[0].ess >= 1.0);
    }

    #[test]
    fn csv_dump() {
        let b = SampleBatch::from_configurations(2, vec![vec![0.5, -0.5], vec![1.0, 0.0]]);
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "chain,step,x1,x2\n0,0,0.5,-0.5\n0,1,1,0\n");
    }
}
