//! `tcsm` command-line driver.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::algebra::algebra_report;
use crate::estimators::{
    density_profile, excited_density, fit_obrdm, momentum_distribution, momentum_normalization, obrdm_from_batch,
    tail_mass, window_sensitivity, write_fits_csv, FitResult, Grid, GridEstimate, ObrdmOptions,
};
use crate::io::{config_to_args, RunContext, SampleRecord};
use crate::model::{relative_ground_energy, ExactParams, ModelParams};
use crate::sampler::{diagnostics, run_chain, ChainConfig, SampleBatch};
use crate::sympoly::constraints::{table_relations, ConstraintJson};
use crate::sympoly::degeneracy::{count_by_quantum_numbers, degeneracy, degeneracy_unchecked};
use crate::sympoly::poly::{format_rational, int, parse_rational, rat};
use crate::sympoly::{laplace_constraints, Regime};
use crate::verify::{run_verify, VerifyOptions};
use crate::wavefunction::ExcitedLabel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Failed(_) => EXIT_VERIFY_FAILED,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid arguments: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::Failed(m) => write!(f, "verification failed: {m}"),
        }
    }
}

fn rt<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "tcsm",
    version,
    about = "Truncated Calogero-Sutherland model: exact ground state, Monte Carlo correlations, excitations and algebra checks",
    args_override_self = true
)]
pub struct Cli {
    /// Base directory for run outputs (`<out>/<subcommand>/<timestamp>/`).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Flat TOML file of `key = value` flag defaults; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Exact coupling parsed from `p/q`, an integer or a decimal.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda(pub BigRational);

impl Serialize for Lambda {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

fn parse_lambda(s: &str) -> Result<Lambda, String> {
    let q = parse_rational(s).ok_or_else(|| format!("`{s}` is not a rational or decimal number"))?;
    if q < int(0) {
        return Err("λ must be non-negative".into());
    }
    Ok(Lambda(q))
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// Particle number N.
    #[arg(long)]
    pub n: usize,
    /// Coupling λ ≥ 0 as `p/q` or decimal.
    #[arg(long, value_parser = parse_lambda)]
    pub lambda: Lambda,
    /// Interaction range r (neighbor count); defaults to N−1.
    #[arg(long)]
    pub r: Option<i64>,
}

impl ModelArgs {
    fn exact(&self) -> Result<ExactParams, CliError> {
        let r = self.r.unwrap_or(self.n as i64 - 1);
        ExactParams::new(self.n, self.lambda.0.clone(), r).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SamplingArgs {
    /// Run seed (required for sampling).
    #[arg(long)]
    pub seed: u64,
    /// Retained samples in total over all chains.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Burn-in sweeps per chain.
    #[arg(long, default_value_t = 2_000)]
    pub burn_in: usize,
    /// Sweeps between retained samples.
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Initial proposal width.
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    /// Independent chains (default 1 for the ground state, 16 for excited states).
    #[arg(long)]
    pub chains: Option<usize>,
    /// Also write the retained configurations to `samples.csv`.
    #[arg(long)]
    pub write_samples: bool,
}

impl SamplingArgs {
    fn apply(&self, mut cfg: ChainConfig) -> ChainConfig {
        cfg.burn_in = self.burn_in;
        cfg.thinning = self.thin;
        cfg.step_size = self.step;
        if let Some(c) = self.chains {
            cfg.n_chains = c;
        }
        cfg
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    /// Position grid half-width.
    #[arg(long, default_value_t = 5.0)]
    pub xmax: f64,
    /// Position grid points.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<Grid, CliError> {
        Grid::symmetric(self.xmax, self.points).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MomentumArgs {
    /// Momentum grid half-width.
    #[arg(long, default_value_t = 8.0)]
    pub kmax: f64,
    /// Momentum grid points.
    #[arg(long, default_value_t = 161)]
    pub kpoints: usize,
}

impl MomentumArgs {
    fn grid(&self) -> Result<Grid, CliError> {
        Grid::symmetric(self.kmax, self.kpoints).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitArgs {
    /// Lower edge of the power-law fit window.
    #[arg(long, default_value_t = 0.5)]
    pub fit_min: f64,
    /// Upper edge of the power-law fit window.
    #[arg(long, default_value_t = 2.5)]
    pub fit_max: f64,
    /// Edge shift for the window sensitivity scan.
    #[arg(long, default_value_t = 0.25)]
    pub window_delta: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeArg {
    /// r < N−1.
    Truncated,
    /// r = N−1.
    Full,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Truncated => Regime::Truncated,
            RegimeArg::Full => Regime::FullRange,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Artifact {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Table1,
    Table2,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Print the ground-state energy.
    Energy(ModelArgs),
    /// Ground-state density profile n(x).
    Density {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// One-body reduced density matrix ρ(x, x′).
    Obrdm {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Momentum distribution n(k) from the OBRDM.
    Momentum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        momentum: MomentumArgs,
    },
    /// Power-law fit ρ(x, 0) = γ/|x|^p with a window scan.
    Fit {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Density of the excited state L_n^ν(ρ²)·P_k times the ground state.
    Excited {
        #[command(flatten)]
        model: ModelArgs,
        /// Radial quantum number n.
        #[arg(long, default_value_t = 0)]
        radial: u32,
        /// Degree k of P_k.
        #[arg(long)]
        k: u32,
        /// Basis vector of the solved constraint space.
        #[arg(long, default_value_t = 0)]
        basis: usize,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Degeneracy of level s = 2n + k.
    Degeneracy {
        #[arg(long)]
        s: u32,
        #[arg(long, value_enum)]
        regime: RegimeArg,
        /// Particle number; enables the s ≤ N regime check.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Exact solution of D₊P_k = 0 in the monomial symmetric basis.
    Constraints {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        k: u32,
    },
    /// SU(1,1) commutators, Euler similarity, ladder and sl(2) checks.
    AlgebraCheck {
        #[command(flatten)]
        model: ModelArgs,
        /// Random symmetric polynomials per identity.
        #[arg(long, default_value_t = 50)]
        polys: usize,
        #[arg(long, default_value_t = 8)]
        max_degree: u32,
        #[arg(long, default_value_t = 20)]
        s_max: u32,
        /// Seed for the random test polynomials.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the full invariant suite; exits 1 on any failure.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Retained samples per virial cell.
        #[arg(long, default_value_t = 100_000)]
        virial_samples: usize,
        /// Random polynomials per commutator cell.
        #[arg(long, default_value_t = 50)]
        polys: usize,
    },
    /// Regenerate the data behind a figure or table.
    Reproduce {
        #[arg(value_enum)]
        artifact: Artifact,
        /// Run seed; required for every artifact except table2.
        #[arg(long)]
        seed: Option<u64>,
        /// Retained samples per sampling run (artifact-specific default).
        #[arg(long)]
        samples: Option<usize>,
        /// Coupling for table2.
        #[arg(long, value_parser = parse_lambda, default_value = "1")]
        lambda: Lambda,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        momentum: MomentumArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Energy(_) => "energy",
            Command::Density { .. } => "density",
            Command::Obrdm { .. } => "obrdm",
            Command::Momentum { .. } => "momentum",
            Command::Fit { .. } => "fit",
            Command::Excited { .. } => "excited",
            Command::Degeneracy { .. } => "degeneracy",
            Command::Constraints { .. } => "constraints",
            Command::AlgebraCheck { .. } => "algebra-check",
            Command::Verify { .. } => "verify",
            Command::Reproduce { .. } => "reproduce",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Density { sampling, .. }
            | Command::Obrdm { sampling, .. }
            | Command::Momentum { sampling, .. }
            | Command::Fit { sampling, .. }
            | Command::Excited { sampling, .. } => Some(sampling.seed),
            Command::AlgebraCheck { seed, .. } | Command::Verify { seed, .. } => Some(*seed),
            Command::Reproduce { seed, .. } => *seed,
            _ => None,
        }
    }
}

/// Index of the subcommand token, skipping global flags and their values.
fn subcommand_position(argv: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].as_str();
        if a == "--out" || a == "--config" {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut found = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            found = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(v) = a.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
        }
    }
    found
}

/// Splices config-file flags directly after the subcommand (and the
/// reproduce artifact), so that explicit flags, parsed later, win.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let extra = config_to_args(&path).map_err(|e| CliError::Usage(e.to_string()))?;
    let Some(mut pos) = subcommand_position(&argv) else {
        return Ok(argv);
    };
    pos += 1;
    if argv[pos - 1] == "reproduce" && argv.get(pos).is_some_and(|a| !a.starts_with('-')) {
        pos += 1;
    }
    let mut out = argv[..pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos..]);
    Ok(out)
}

/// Parses and runs; returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return e.code();
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}

fn execute(cli: &Cli, argv: Vec<String>) -> Result<(), CliError> {
    let params = serde_json::to_value(&cli.command).map_err(rt)?;
    if let Command::Reproduce { artifact, seed: None, .. } = &cli.command {
        if *artifact != Artifact::Table2 {
            return Err(CliError::Usage(format!("reproduce {artifact:?} draws samples and needs --seed").to_lowercase()));
        }
    }
    let mut ctx = RunContext::create(&cli.out, cli.command.name(), argv, params, cli.command.seed()).map_err(rt)?;
    let outcome = dispatch(&cli.command, &mut ctx);
    if let Err(CliError::Usage(_)) = outcome {
        let _ = std::fs::remove_dir_all(&ctx.dir);
        return outcome;
    }
    let dir = ctx.finish().map_err(rt)?;
    eprintln!("outputs: {}", dir.display());
    outcome
}

fn dispatch(cmd: &Command, ctx: &mut RunContext) -> Result<(), CliError> {
    match cmd {
        Command::Energy(m) => energy(ctx, m),
        Command::Density { model, sampling, grid } => {
            let p = model.exact()?.to_numeric();
            let cfg = sampling.apply(ChainConfig::ground(sampling.seed, sampling.samples));
            let batch = sample(ctx, "ground", &p, &cfg, sampling.write_samples.then_some("samples.csv"))?;
            let est = density_profile(&batch, &grid.grid()?).map_err(rt)?;
            write_estimate(ctx, "density.csv", &est, "n", "x")?;
            write_diagnostics(ctx, "diagnostics.json", &batch)?;
            println!("∫n(x)dx = {}", est.integral());
            Ok(())
        }
        Command::Obrdm { model, sampling, grid } => {
            let p = model.exact()?.to_numeric();
            let cfg = sampling.apply(ChainConfig::ground(sampling.seed, sampling.samples));
            let batch = sample(ctx, "ground", &p, &cfg, sampling.write_samples.then_some("samples.csv"))?;
            let rho = obrdm_from_batch(&p, &batch, &grid.grid()?, &ObrdmOptions::default()).map_err(rt)?;
            write_estimate(ctx, "obrdm.csv", &rho, "rho", "x")?;
            write_diagnostics(ctx, "diagnostics.json", &batch)?;
            println!("trace = {}", trace(&rho));
            Ok(())
        }
        Command::Momentum {
            model,
            sampling,
            grid,
            momentum,
        } => {
            let p = model.exact()?.to_numeric();
            let cfg = sampling.apply(ChainConfig::ground(sampling.seed, sampling.samples));
            let batch = sample(ctx, "ground", &p, &cfg, sampling.write_samples.then_some("samples.csv"))?;
            let rho = obrdm_from_batch(&p, &batch, &grid.grid()?, &ObrdmOptions::default()).map_err(rt)?;
            write_estimate(ctx, "obrdm.csv", &rho, "rho", "x")?;
            let nk = momentum_distribution(&rho, &momentum.grid()?).map_err(rt)?;
            write_estimate(ctx, "momentum.csv", &nk, "nk", "k")?;
            let summary = MomentumSummary::new(p.range(), &rho, &nk);
            ctx.write_json("momentum_summary.json", &summary).map_err(rt)?;
            write_diagnostics(ctx, "diagnostics.json", &batch)?;
            println!("∫n(k)dk = {} (grid sum {})", summary.normalization, summary.grid_sum);
            Ok(())
        }
        Command::Fit {
            model,
            sampling,
            grid,
            fit,
        } => {
            let p = model.exact()?.to_numeric();
            let cfg = sampling.apply(ChainConfig::ground(sampling.seed, sampling.samples));
            let batch = sample(ctx, "ground", &p, &cfg, sampling.write_samples.then_some("samples.csv"))?;
            let rho = obrdm_from_batch(&p, &batch, &grid.grid()?, &ObrdmOptions::default()).map_err(rt)?;
            write_estimate(ctx, "obrdm.csv", &rho, "rho", "x")?;
            let (f, scan) = fit_with_scan(&rho, fit)?;
            write_fits(ctx, "fits.csv", &[(p.range(), f)])?;
            write_fits(ctx, "window_scan.csv", &scan.into_iter().map(|s| (p.range(), s)).collect::<Vec<_>>())?;
            write_diagnostics(ctx, "diagnostics.json", &batch)?;
            println!("gamma = {} ± {}, p = {} ± {}", f.gamma, f.gamma_err, f.p, f.p_err);
            Ok(())
        }
        Command::Excited {
            model,
            radial,
            k,
            basis,
            sampling,
            grid,
        } => {
            let exact = model.exact()?;
            let p = exact.to_numeric();
            let label = ExcitedLabel::from_constraints(&exact, *radial, *k, *basis).map_err(rt)?;
            let est = excited_run(ctx, "excited", &p, &label, sampling.seed, sampling, grid, sampling.write_samples)?;
            write_estimate(ctx, "density.csv", &est.0, "n", "x")?;
            ctx.write_json("state.json", &StateJson::new(&exact, &label, *basis)?).map_err(rt)?;
            println!("E = {}, ∫n(x)dx = {}, <Σx²> = {}", label.energy(), est.0.integral(), est.1);
            Ok(())
        }
        Command::Degeneracy { s, regime, n } => {
            let reg: Regime = (*regime).into();
            let d = match n {
                Some(n) => degeneracy(reg, *n, *s).map_err(|e| CliError::Usage(e.to_string()))?,
                None => degeneracy_unchecked(reg, (*s as usize).max(1), *s),
            };
            let counted = count_by_quantum_numbers(reg, n.unwrap_or((*s as usize).max(1)), *s);
            ctx.write_json(
                "degeneracy.json",
                &serde_json::json!({ "s": s, "regime": regime, "n": n, "degeneracy": d, "counted": counted }),
            )
            .map_err(rt)?;
            println!("{d}");
            Ok(())
        }
        Command::Constraints { model, k } => {
            let exact = model.exact()?;
            let out = constraints_json(&exact, *k)?;
            let text = serde_json::to_string_pretty(&out).map_err(rt)?;
            ctx.write_file("constraints.json", |w| writeln!(w, "{text}")).map_err(rt)?;
            println!("{text}");
            Ok(())
        }
        Command::AlgebraCheck {
            model,
            polys,
            max_degree,
            s_max,
            seed,
        } => {
            let exact = model.exact()?;
            let rep = algebra_report(&exact, *polys, *max_degree, *s_max, *seed).map_err(rt)?;
            ctx.write_json("algebra.json", &rep).map_err(rt)?;
            for c in &rep.commutators {
                println!("{:<5} {} (max deviation {})", pass_word(c.pass), c.identity, c.max_deviation);
            }
            for c in &rep.ladder {
                println!("{:<5} {} (residual {:.2e})", pass_word(c.pass), c.name, c.residual);
            }
            println!("{:<5} sl(2) blocks 2 ≤ s ≤ {}", pass_word(rep.sl2.pass), rep.sl2.s_max);
            println!("{:<5} radial recurrence", pass_word(rep.recurrence.iter().all(|r| r.pass)));
            if rep.pass {
                Ok(())
            } else {
                Err(CliError::Failed("operator algebra".into()))
            }
        }
        Command::Verify {
            seed,
            virial_samples,
            polys,
        } => {
            let rep = run_verify(&VerifyOptions {
                seed: *seed,
                virial_samples: *virial_samples,
                polys_per_cell: *polys,
            });
            ctx.write_json("verify.json", &rep).map_err(rt)?;
            for c in &rep.checks {
                println!("{:<5} {}: {}", pass_word(c.pass), c.name, c.detail);
            }
            if rep.pass {
                Ok(())
            } else {
                let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                Err(CliError::Failed(failed.join(", ")))
            }
        }
        Command::Reproduce {
            artifact,
            seed,
            samples,
            lambda,
            grid,
            momentum,
            fit,
        } => reproduce(ctx, *artifact, seed.unwrap_or(0), *samples, lambda, grid, momentum, fit),
    }
}

fn pass_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn energy(ctx: &mut RunContext, m: &ModelArgs) -> Result<(), CliError> {
    let exact = m.exact()?;
    let e = exact.ground_state_energy();
    let value = e.to_f64().unwrap_or(f64::NAN);
    ctx.write_json(
        "energy.json",
        &serde_json::json!({
            "n": exact.n(),
            "lambda": format_rational(exact.lambda()),
            "r": exact.range(),
            "energy": value,
            "energy_exact": format_rational(&e),
            "relative_energy": relative_ground_energy(&exact.to_numeric()),
        }),
    )
    .map_err(rt)?;
    println!("{value}");
    Ok(())
}

fn sample(
    ctx: &mut RunContext,
    label: &str,
    p: &ModelParams,
    cfg: &ChainConfig,
    samples_file: Option<&str>,
) -> Result<SampleBatch, CliError> {
    let batch = run_chain(p, cfg).map_err(rt)?;
    ctx.record_sampling(SampleRecord::new(label, cfg.seed, &batch));
    if let Some(name) = samples_file {
        ctx.write_file(name, |w| batch.write_csv(w)).map_err(rt)?;
    }
    Ok(batch)
}

fn write_estimate(ctx: &mut RunContext, name: &str, est: &GridEstimate, value: &str, axis: &str) -> Result<(), CliError> {
    ctx.write_file(name, |w| est.write_csv(w, value, axis)).map_err(rt)?;
    Ok(())
}

fn write_fits(ctx: &mut RunContext, name: &str, fits: &[(usize, FitResult)]) -> Result<(), CliError> {
    ctx.write_file(name, |w| write_fits_csv(w, fits)).map_err(rt)?;
    Ok(())
}

fn write_diagnostics(ctx: &mut RunContext, name: &str, batch: &SampleBatch) -> Result<(), CliError> {
    let d = diagnostics(batch).map_err(rt)?;
    ctx.write_json(name, &d).map_err(rt)?;
    Ok(())
}

fn trace(rho: &GridEstimate) -> f64 {
    rho.diagonal().iter().sum::<f64>() * rho.axes[0].spacing()
}

fn fit_with_scan(rho: &GridEstimate, fit: &FitArgs) -> Result<(FitResult, Vec<FitResult>), CliError> {
    let window = (fit.fit_min, fit.fit_max);
    let f = fit_obrdm(rho, window).map_err(rt)?;
    let scan = window_sensitivity(rho, window, fit.window_delta).map_err(rt)?;
    Ok((f, scan))
}

#[derive(Debug, Serialize)]
struct MomentumSummary {
    r: usize,
    trace: f64,
    grid_sum: f64,
    normalization: f64,
    tail_mass_above_2: f64,
    max_imaginary_residual: f64,
}

impl MomentumSummary {
    fn new(r: usize, rho: &GridEstimate, nk: &GridEstimate) -> Self {
        Self {
            r,
            trace: trace(rho),
            grid_sum: nk.integral(),
            normalization: momentum_normalization(nk),
            tail_mass_above_2: tail_mass(nk, 2.0),
            max_imaginary_residual: nk
                .diagnostics
                .iter()
                .find(|(k, _)| k == "max_imaginary_residual")
                .map_or(0.0, |d| d.1),
        }
    }
}

#[derive(Debug, Serialize)]
struct StateJson {
    n: usize,
    lambda: String,
    r: usize,
    radial: u32,
    k: u32,
    basis: usize,
    energy: f64,
    nu: f64,
    polynomial: ConstraintJson,
}

impl StateJson {
    fn new(p: &ExactParams, label: &ExcitedLabel, basis: usize) -> Result<Self, CliError> {
        Ok(Self {
            n: p.n(),
            lambda: format_rational(p.lambda()),
            r: p.range(),
            radial: label.radial(),
            k: label.degree(),
            basis,
            energy: label.energy(),
            nu: label.nu(),
            polynomial: laplace_constraints(p, label.degree()).map_err(rt)?.to_json(),
        })
    }
}

#[derive(Debug, Serialize)]
pub struct ConstraintOutput {
    #[serde(flatten)]
    pub solution: ConstraintJson,
    pub expected_dimension: usize,
    /// Closed-form relation residuals per basis vector (`"0"` when exact).
    pub relations: Vec<Vec<(String, String)>>,
}

pub fn constraints_json(p: &ExactParams, k: u32) -> Result<ConstraintOutput, CliError> {
    let sol = laplace_constraints(p, k).map_err(|e| CliError::Usage(e.to_string()))?;
    let relations = (0..sol.dimension())
        .map(|i| {
            table_relations(sol.regime, p.n(), p.range(), p.lambda(), k, &sol.coefficients(i))
                .into_iter()
                .map(|(name, res)| (name.to_string(), format_rational(&res)))
                .collect()
        })
        .collect();
    Ok(ConstraintOutput {
        solution: sol.to_json(),
        expected_dimension: sol.expected_dimension(),
        relations,
    })
}

#[allow(clippy::too_many_arguments)]
fn excited_run(
    ctx: &mut RunContext,
    label_name: &str,
    p: &ModelParams,
    label: &ExcitedLabel,
    seed: u64,
    sampling: &SamplingArgs,
    grid: &GridArgs,
    write_samples: bool,
) -> Result<(GridEstimate, f64), CliError> {
    let cfg = sampling.apply(ChainConfig::excited(seed, sampling.samples, label.clone()));
    let (est, batch) = excited_density(p, label, &cfg, &grid.grid()?).map_err(rt)?;
    ctx.record_sampling(SampleRecord::new(label_name, seed, &batch));
    if write_samples {
        ctx.write_file(&format!("{label_name}_samples.csv"), |w| batch.write_csv(w)).map_err(rt)?;
    }
    let x2 = crate::stats::mean(&batch.sum_x2_series());
    Ok((est, x2))
}

fn lambda_tag(q: &BigRational) -> String {
    format_rational(q).replace('/', "_")
}

/// Per-run sampling defaults for reproduction.
const REPRODUCE_DENSITY_SAMPLES: usize = 1_000_000;
const REPRODUCE_OBRDM_SAMPLES: usize = 200_000;

#[allow(clippy::too_many_arguments)]
fn reproduce(
    ctx: &mut RunContext,
    artifact: Artifact,
    seed: u64,
    samples: Option<usize>,
    lambda: &Lambda,
    grid: &GridArgs,
    momentum: &MomentumArgs,
    fit: &FitArgs,
) -> Result<(), CliError> {
    let sampling = |offset: u64, default: usize| SamplingArgs {
        seed: seed.wrapping_add(offset),
        samples: samples.unwrap_or(default),
        burn_in: 2_000,
        thin: 1,
        step: 0.5,
        chains: None,
        write_samples: false,
    };
    match artifact {
        Artifact::Fig1 => {
            // Panel a: N = 4, r = 2 over λ (the caption's N = 5 is also run).
            // Panel b: N = 5, λ = 1 over r.
            let mut runs: Vec<(usize, BigRational, i64)> = Vec::new();
            for n in [4usize, 5] {
                for lam in [int(0), rat(1, 2), int(1), int(2)] {
                    runs.push((n, lam, 2));
                }
            }
            for r in [1, 4] {
                runs.push((5, int(1), r));
            }
            let mut maxima = Vec::new();
            for (i, (n, lam, r)) in runs.iter().enumerate() {
                let p = ExactParams::new(*n, lam.clone(), *r).map_err(rt)?.to_numeric();
                let s = sampling(i as u64, REPRODUCE_DENSITY_SAMPLES);
                let tag = format!("N{n}_lambda{}_r{r}", lambda_tag(lam));
                let cfg = s.apply(ChainConfig::ground(s.seed, s.samples));
                let batch = sample(ctx, &tag, &p, &cfg, None)?;
                let est = density_profile(&batch, &grid.grid()?).map_err(rt)?;
                write_estimate(ctx, &format!("density_{tag}.csv"), &est, "n", "x")?;
                maxima.push(serde_json::json!({
                    "run": tag,
                    "local_maxima": crate::estimators::local_maxima(&est.values),
                    "integral": est.integral(),
                    "second_moment": crate::stats::mean(&batch.sum_x2_series()),
                }));
            }
            ctx.write_json("summary.json", &maxima).map_err(rt)?;
        }
        Artifact::Fig2 | Artifact::Fig3 | Artifact::Table1 => {
            let rs: Vec<i64> = if artifact == Artifact::Fig2 { vec![1, 2, 3] } else { vec![1, 2, 3, 4] };
            let mut fits = Vec::new();
            let mut scans = Vec::new();
            let mut summaries = Vec::new();
            for (i, r) in rs.iter().enumerate() {
                let p = ModelParams::new(5, 1.0, *r).map_err(rt)?;
                let s = sampling(i as u64, REPRODUCE_OBRDM_SAMPLES);
                let cfg = s.apply(ChainConfig::ground(s.seed, s.samples));
                let batch = sample(ctx, &format!("r{r}"), &p, &cfg, None)?;
                let rho = obrdm_from_batch(&p, &batch, &grid.grid()?, &ObrdmOptions::default()).map_err(rt)?;
                match artifact {
                    Artifact::Fig2 => write_estimate(ctx, &format!("obrdm_r{r}.csv"), &rho, "rho", "x")?,
                    Artifact::Fig3 => {
                        let j = rho.axes[1].zero_index().ok_or_else(|| rt("grid has no x′ = 0 point"))?;
                        let (v, e) = rho.column(j);
                        let xs = rho.axes[0].values();
                        ctx.write_file(&format!("central_r{r}.csv"), |w| {
                            writeln!(w, "x,rho,err")?;
                            for ((x, v), e) in xs.iter().zip(&v).zip(&e) {
                                writeln!(w, "{x},{v},{e}")?;
                            }
                            Ok(())
                        })
                        .map_err(rt)?;
                        let nk = momentum_distribution(&rho, &momentum.grid()?).map_err(rt)?;
                        write_estimate(ctx, &format!("momentum_r{r}.csv"), &nk, "nk", "k")?;
                        summaries.push(MomentumSummary::new(*r as usize, &rho, &nk));
                    }
                    _ => {
                        let (f, scan) = fit_with_scan(&rho, fit)?;
                        fits.push((*r as usize, f));
                        scans.extend(scan.into_iter().map(|s| (*r as usize, s)));
                    }
                }
            }
            if artifact == Artifact::Fig3 {
                ctx.write_json("momentum_summary.json", &summaries).map_err(rt)?;
            }
            if artifact == Artifact::Table1 {
                write_fits(ctx, "fits.csv", &fits)?;
                write_fits(ctx, "window_scan.csv", &scans)?;
                for (r, f) in &fits {
                    println!("r={r}: gamma = {:.3} ± {:.3}, p = {:.3} ± {:.3}", f.gamma, f.gamma_err, f.p, f.p_err);
                }
            }
        }
        Artifact::Fig4 => {
            let mut summary = Vec::new();
            let mut i = 0u64;
            for (radial, k) in [(0u32, 1u32), (1, 0), (0, 2)] {
                for r in 1..=3i64 {
                    let exact = ExactParams::new(4, int(1), r).map_err(rt)?;
                    let label = ExcitedLabel::from_constraints(&exact, radial, k, 0).map_err(rt)?;
                    let s = sampling(i, REPRODUCE_DENSITY_SAMPLES);
                    i += 1;
                    let tag = format!("n{radial}_k{k}_r{r}");
                    let (est, x2) = excited_run(ctx, &tag, &exact.to_numeric(), &label, s.seed, &s, grid, false)?;
                    write_estimate(ctx, &format!("excited_{tag}.csv"), &est, "n", "x")?;
                    summary.push(serde_json::json!({
                        "run": tag,
                        "energy": label.energy(),
                        "integral": est.integral(),
                        "second_moment": x2,
                        "local_maxima": crate::estimators::local_maxima(&est.values),
                    }));
                }
            }
            ctx.write_json("summary.json", &summary).map_err(rt)?;
        }
        Artifact::Table2 => {
            let mut all = Vec::new();
            let mut rows = Vec::new();
            for n in 4..=8usize {
                for r in 1..n as i64 {
                    let p = ExactParams::new(n, lambda.0.clone(), r).map_err(rt)?;
                    for k in 0..=(n as u32).min(5) {
                        let out = constraints_json(&p, k)?;
                        for (b, rels) in out.relations.iter().enumerate() {
                            for (name, res) in rels {
                                rows.push(format!("{n},{r},{k},{b},{name},{res}"));
                            }
                        }
                        all.push(out);
                    }
                }
            }
            ctx.write_json("constraints.json", &all).map_err(rt)?;
            ctx.write_file("relations.csv", |w| {
                writeln!(w, "n,r,k,basis,relation,residual")?;
                for row in &rows {
                    writeln!(w, "{row}")?;
                }
                Ok(())
            })
            .map_err(rt)?;
            let nonzero = rows.iter().filter(|r| !r.ends_with(",0")).count();
            println!("{} systems, {} relations, {} nonzero residuals", all.len(), rows.len(), nonzero);
        }
    }
    Ok(())
}

/// Sizes the global rayon pool from `TCSM_THREADS` if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("TCSM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("TCSM_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(rt)
}
