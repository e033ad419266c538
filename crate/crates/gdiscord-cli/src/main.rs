//! `gdiscord`: correlation reports, noise sweeps and Monte-Carlo validation
//! for multimode Gaussian states.
//!
//! Exit codes: 0 ok, 2 usage/input error, 3 unphysical state, 4 validation
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gdiscord::{
    apply_noise, classical_mi, duan_criterion, epr, estimate_mi, gaussian_multipartite_qd, ghz,
    outcome_covariance, ppt_criterion, run_sweep, sample_outcomes, state_verdict, vacuum,
    write_csv, CovarianceMatrix, Error as LibError, MeasurementPlan, NoiseKind, NoiseModel,
    SearchOptions, StateSpec, SweepSpec, SAMPLING_ALGORITHM,
};

const EXIT_INPUT: u8 = 2;
const EXIT_UNPHYSICAL: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "gdiscord",
    version,
    about = "Gaussian multipartite classical correlations and quantum discord"
)]
struct Cli {
    /// JSON config file with default values; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full correlation report for one state, as JSON on stdout.
    Report(ReportArgs),
    /// Noise sweep: CSV rows plus a JSON sidecar with bisected thresholds.
    Sweep(SweepArgs),
    /// Monte-Carlo validation of the analytic outcome MI.
    Validate(ValidateArgs),
    /// Separability verdict (Duan or PPT).
    Separability(SeparabilityArgs),
    /// Gaussian entropy and symplectic spectrum.
    Entropy(EntropyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StateName {
    Epr,
    Ghz,
    Vacuum2,
    Vacuum3,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseName {
    Uncorrelated,
    Multiplicative,
    Correlated,
}

impl From<NoiseName> for NoiseKind {
    fn from(n: NoiseName) -> Self {
        match n {
            NoiseName::Uncorrelated => NoiseKind::Uncorrelated,
            NoiseName::Multiplicative => NoiseKind::Multiplicative,
            NoiseName::Correlated => NoiseKind::Correlated,
        }
    }
}

#[derive(Args)]
struct StateArgs {
    /// Built-in state family.
    #[arg(long, value_enum)]
    state: Option<StateName>,
    /// Squeezing parameter for --state epr.
    #[arg(long)]
    r: Option<f64>,
    /// Diagonal parameter for --state ghz.
    #[arg(long)]
    a: Option<f64>,
    /// Covariance JSON file: {"n": int, "matrix": [[row], ...]}.
    #[arg(long, conflicts_with = "state")]
    file: Option<PathBuf>,
    /// Noise kind applied on top of the state.
    #[arg(long, value_enum)]
    noise: Option<NoiseName>,
    /// Noise strength, required with --noise.
    #[arg(long, requires = "noise")]
    v: Option<f64>,
}

#[derive(Args)]
struct OptimizerArgs {
    /// Phase grid points per mode.
    #[arg(long)]
    theta_points: Option<usize>,
    /// Transmissivity grid points per mode.
    #[arg(long)]
    t_points: Option<usize>,
    /// Grid candidates refined with Nelder-Mead.
    #[arg(long)]
    refine_starts: Option<usize>,
    /// Cap on coarse-grid objective evaluations.
    #[arg(long)]
    max_evaluations: Option<u64>,
}

impl OptimizerArgs {
    fn apply(&self, mut base: SearchOptions) -> SearchOptions {
        if let Some(x) = self.theta_points {
            base.theta_points = x;
        }
        if let Some(x) = self.t_points {
            base.t_points = x;
        }
        if let Some(x) = self.refine_starts {
            base.refine_starts = x;
        }
        if let Some(x) = self.max_evaluations {
            base.max_evaluations = x;
        }
        base
    }
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Built-in state family (sweeps do not take covariance files).
    #[arg(long, value_enum)]
    state: StateName,
    /// Squeezing parameter for --state epr.
    #[arg(long)]
    r: Option<f64>,
    /// Diagonal parameter for --state ghz.
    #[arg(long)]
    a: Option<f64>,
    /// Noise kind swept over.
    #[arg(long, value_enum)]
    noise: NoiseName,
    #[arg(long)]
    v_start: f64,
    #[arg(long)]
    v_stop: f64,
    #[arg(long)]
    v_step: f64,
    /// Output CSV path; the thresholds sidecar lands next to it.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for grid evaluation (default: GDISCORD_JOBS or all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanName {
    HomodyneQ,
    HomodyneP,
    Heterodyne,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Canonical measurement plan.
    #[arg(long, value_enum, conflicts_with = "plan_file")]
    plan: Option<PlanName>,
    /// Measurement plan JSON file: {"params": [{"theta": .., "t": ..}, ..]}.
    #[arg(long)]
    plan_file: Option<PathBuf>,
    /// Sample count.
    #[arg(long)]
    m: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SeparabilityArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Force the Duan criterion (two-mode standard form only).
    #[arg(long, conflicts_with = "partition")]
    duan: bool,
    /// PPT bipartition: comma-separated mode indices of one side, e.g. "0" or "0,1".
    #[arg(long)]
    partition: Option<String>,
}

#[derive(Args)]
struct EntropyArgs {
    #[command(flatten)]
    state: StateArgs,
}

/// Values accepted from --config; every field is overridable by a flag.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    jobs: Option<usize>,
    options: Option<SearchOptions>,
    m: Option<usize>,
    seed: Option<u64>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<LibError> for Failure {
    fn from(e: LibError) -> Self {
        let code = match e {
            LibError::Unphysical { .. } | LibError::NotPositiveDefinite => EXIT_UNPHYSICAL,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(format!("io: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let outcome = match cli.command {
        Command::Report(args) => cmd_report(args, &config),
        Command::Sweep(args) => cmd_sweep(args, &config),
        Command::Validate(args) => cmd_validate(args, &config),
        Command::Separability(args) => cmd_separability(args),
        Command::Entropy(args) => cmd_entropy(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("config {path:?}: {e}")))
}

fn build_state(args: &StateArgs) -> Result<CovarianceMatrix, Failure> {
    let base = if let Some(path) = &args.file {
        let text = fs::read_to_string(path)?;
        let v = CovarianceMatrix::from_json_str(&text)
            .map_err(|e| Failure::input(format!("covariance file {path:?}: {e}")))?;
        // Flag-built states are physical by construction; files are checked.
        if !v.is_physical()? {
            return Err(Failure {
                code: EXIT_UNPHYSICAL,
                message: format!("covariance in {path:?} is not a physical state"),
            });
        }
        v
    } else {
        match args.state {
            Some(StateName::Epr) => {
                let r = args.r.ok_or_else(|| Failure::input("--state epr requires --r"))?;
                epr(r)?
            }
            Some(StateName::Ghz) => {
                let a = args.a.ok_or_else(|| Failure::input("--state ghz requires --a"))?;
                ghz(a)?
            }
            Some(StateName::Vacuum2) => vacuum(2),
            Some(StateName::Vacuum3) => vacuum(3),
            None => return Err(Failure::input("provide --state or --file")),
        }
    };
    if let Some(noise) = args.noise {
        let v = args.v.ok_or_else(|| Failure::input("--noise requires --v"))?;
        return Ok(apply_noise(&base, &NoiseModel::new(noise.into(), v)?)?);
    }
    Ok(base)
}

fn cmd_report(args: ReportArgs, config: &FileConfig) -> Result<u8, Failure> {
    let state = build_state(&args.state)?;
    let options = args.optimizer.apply(config.options.unwrap_or_default());
    let report = gaussian_multipartite_qd(&state, &options)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(0)
}

fn sweep_state_spec(args: &SweepArgs) -> Result<StateSpec, Failure> {
    Ok(match args.state {
        StateName::Epr => StateSpec::Epr {
            r: args.r.ok_or_else(|| Failure::input("--state epr requires --r"))?,
        },
        StateName::Ghz => StateSpec::Ghz {
            a: args.a.ok_or_else(|| Failure::input("--state ghz requires --a"))?,
        },
        StateName::Vacuum2 => StateSpec::Vacuum2,
        StateName::Vacuum3 => StateSpec::Vacuum3,
    })
}

fn jobs_from(flag: Option<usize>, config: &FileConfig) -> usize {
    flag.or(config.jobs)
        .or_else(|| {
            std::env::var("GDISCORD_JOBS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0)
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("thresholds.json")
}

fn cmd_sweep(args: SweepArgs, config: &FileConfig) -> Result<u8, Failure> {
    let spec = SweepSpec {
        state: sweep_state_spec(&args)?,
        noise: args.noise.into(),
        v_start: args.v_start,
        v_stop: args.v_stop,
        v_step: args.v_step,
        options: args
            .optimizer
            .apply(config.options.unwrap_or_else(SearchOptions::sweep_grade)),
    };
    let jobs = jobs_from(args.jobs, config);
    let result = run_sweep(&spec, jobs)?;

    let mut csv = Vec::new();
    write_csv(&result.rows, &mut csv)?;
    fs::write(&args.out, &csv)?;
    let sidecar = sidecar_path(&args.out);
    fs::write(
        &sidecar,
        serde_json::to_string_pretty(&result.thresholds).expect("thresholds serialize"),
    )?;
    eprintln!(
        "wrote {} rows to {} and thresholds to {}",
        result.rows.len(),
        args.out.display(),
        sidecar.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct ValidationSummary {
    plan: MeasurementPlan,
    m: usize,
    seed: u64,
    algorithm: &'static str,
    analytic_mi: f64,
    estimated_mi: f64,
    std_err: f64,
    discrepancy_in_se: f64,
    pass: bool,
}

fn cmd_validate(args: ValidateArgs, config: &FileConfig) -> Result<u8, Failure> {
    let state = build_state(&args.state)?;
    if !state.is_physical()? {
        return Err(Failure {
            code: EXIT_UNPHYSICAL,
            message: "cannot validate an unphysical state".into(),
        });
    }
    let n = state.modes();
    let plan = if let Some(path) = &args.plan_file {
        let text = fs::read_to_string(path)?;
        MeasurementPlan::from_json_str(&text)
            .map_err(|e| Failure::input(format!("plan file {path:?}: {e}")))?
    } else {
        match args.plan.unwrap_or(PlanName::HomodyneQ) {
            PlanName::HomodyneQ => MeasurementPlan::homodyne_q(n),
            PlanName::HomodyneP => MeasurementPlan::homodyne_p(n),
            PlanName::Heterodyne => MeasurementPlan::heterodyne(n),
        }
    };
    let m = args.m.or(config.m).unwrap_or(1_000_000);
    let seed = args.seed.or(config.seed).unwrap_or(0);

    let analytic = classical_mi(&outcome_covariance(&state, &plan)?)?;
    let batch = sample_outcomes(&state, &plan, m, seed)?;
    let estimate = estimate_mi(&batch)?;
    let discrepancy = if estimate.std_err > 0.0 {
        (estimate.mi - analytic).abs() / estimate.std_err
    } else {
        0.0
    };
    let pass = discrepancy <= 5.0;
    let summary = ValidationSummary {
        plan,
        m,
        seed,
        algorithm: SAMPLING_ALGORITHM,
        analytic_mi: analytic,
        estimated_mi: estimate.mi,
        std_err: estimate.std_err,
        discrepancy_in_se: discrepancy,
        pass,
    };
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    Ok(if pass { 0 } else { EXIT_VALIDATION })
}

fn parse_partition(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| Failure::input(format!("bad partition index {tok:?}")))
        })
        .collect()
}

fn cmd_separability(args: SeparabilityArgs) -> Result<u8, Failure> {
    let state = build_state(&args.state)?;
    if !state.is_physical()? {
        return Err(Failure {
            code: EXIT_UNPHYSICAL,
            message: "separability of an unphysical matrix is undefined".into(),
        });
    }
    let verdict = if args.duan {
        duan_criterion(&state)?
    } else if let Some(p) = &args.partition {
        ppt_criterion(&state, &parse_partition(p)?)?
    } else {
        state_verdict(&state)?
    };
    println!("{}", serde_json::to_string(&verdict).expect("verdict serializes"));
    Ok(0)
}

#[derive(Serialize)]
struct EntropySummary {
    n: usize,
    symplectic_eigenvalues: Vec<f64>,
    entropy_bits: f64,
}

fn cmd_entropy(args: EntropyArgs) -> Result<u8, Failure> {
    let state = build_state(&args.state)?;
    let spectrum = state.symplectic_eigenvalues()?;
    let entropy = state.gaussian_entropy()?;
    let summary = EntropySummary {
        n: state.modes(),
        symplectic_eigenvalues: spectrum.values().to_vec(),
        entropy_bits: entropy,
    };
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    Ok(0)
}
