//! `sjls` — Wasserstein-metric performance analysis of stochastic jump
//! linear systems from the command line.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sjls_core::gaussian_mixture::GaussianMixture;
use sjls_core::model_builder::{preset_by_name, PRESET_NAMES};
use sjls_core::monte_carlo::{simulate, Semantics, SimulationConfig};
use sjls_core::propagation::{
    analyze, exact_w_series, feasible_exact_horizon, Sjls, DEFAULT_COMPONENT_LIMIT,
};
use sjls_core::Error as CoreError;

use config::{preset_config, SystemConfig};
use output::{emit, Format, Table};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or unusable input; exit code 2.
    Config(String),
    /// The exact engine refused the requested horizon; exit code 3.
    Explosion(String),
    /// Numerical failure (non-PSD covariance); exit code 4.
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Explosion(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Explosion(m) | CliError::Numerical(m) => m,
        }
    }
}

/// Core errors escaping an analysis run (inputs already validated).
fn run_err(e: CoreError) -> CliError {
    match e {
        CoreError::ComponentExplosion { .. } => CliError::Explosion(e.to_string()),
        CoreError::NotPsd { .. } => CliError::Numerical(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "sjls",
    version,
    about = "Wasserstein-distance performance and robustness analysis of stochastic jump linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split-and-merge analysis: constant-memory distance history
    Analyze(AnalyzeArgs),
    /// Exact mode-path enumeration (component count grows like m^k)
    Exact(ExactArgs),
    /// Monte-Carlo estimate of the mean-square state norm
    Montecarlo(MontecarloArgs),
    /// Run both engines and report the worst relative deviation
    Compare(CompareArgs),
    /// List built-in presets, or dump one as a JSON config
    Presets(PresetsArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// Built-in preset name (see `sjls presets`)
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a JSON system description
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SystemArgs {
    fn load(&self) -> Result<(Sjls, GaussianMixture), CliError> {
        match (&self.preset, &self.config) {
            (Some(name), None) => {
                let (aug, rho0) = preset_by_name(name).ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown preset \"{name}\" (available: {})",
                        PRESET_NAMES.join(", ")
                    ))
                })?;
                Ok((aug.into_sjls(), rho0))
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("reading {}: {e}", path.display()))
                })?;
                SystemConfig::from_json(&text)?.build()
            }
            _ => Err(CliError::Config(
                "exactly one of --preset and --config is required".into(),
            )),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the table here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Number of steps (the output has horizon + 1 rows)
    #[arg(long, default_value_t = 100)]
    horizon: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    /// Refuse horizons whose mixture exceeds this component count
    #[arg(long, default_value_t = DEFAULT_COMPONENT_LIMIT)]
    component_limit: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct MontecarloArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 100)]
    horizon: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// RNG seed (results are reproducible; there is no wall-clock default)
    #[arg(long)]
    seed: u64,
    /// Mode-draw semantics along a path
    #[arg(long, value_enum, default_value = "independent")]
    semantics: SemanticsArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SemanticsArg {
    /// Draw each step's mode from pi(k), independently across time
    Independent,
    /// Walk the Markov chain (requires a Markov or semi-Markov jump law)
    MarkovPath,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Independent => Semantics::IndependentDraw,
            SemanticsArg::MarkovPath => Semantics::MarkovPath,
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 8)]
    horizon: usize,
    #[arg(long, default_value_t = DEFAULT_COMPONENT_LIMIT)]
    component_limit: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct PresetsArgs {
    /// Dump this preset as a JSON config instead of listing names
    #[arg(long)]
    dump: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn pi_columns(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("pi_{i}")).collect()
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let (sys, rho0) = args.system.load()?;
    let traj = analyze(&sys, &rho0, args.horizon).map_err(run_err)?;

    let mut columns = vec!["w_hat".to_string()];
    columns.extend(pi_columns(sys.mode_count()));
    let mut table = Table::new(columns);
    for step in &traj.steps {
        let mut row = vec![step.w_hat.value()];
        row.extend_from_slice(step.pi.as_slice());
        table.push(step.k, &row);
    }
    emit(&table.render(args.out.format), args.out.output.as_deref())
}

fn cmd_exact(args: &ExactArgs) -> Result<(), CliError> {
    let (sys, rho0) = args.system.load()?;
    let series =
        exact_w_series(&sys, &rho0, args.horizon, args.component_limit).map_err(run_err)?;
    let pi_seq = sys.jump().occupation_sequence(args.horizon);

    let mut columns = vec!["w".to_string()];
    columns.extend(pi_columns(sys.mode_count()));
    let mut table = Table::new(columns);
    for (k, w) in series.iter().enumerate() {
        let pi = if k == 0 {
            sys.jump().initial_distribution()
        } else {
            pi_seq[k - 1].clone()
        };
        let mut row = vec![w.value()];
        row.extend_from_slice(pi.as_slice());
        table.push(k, &row);
    }
    emit(&table.render(args.out.format), args.out.output.as_deref())
}

fn cmd_montecarlo(args: &MontecarloArgs) -> Result<(), CliError> {
    let (sys, rho0) = args.system.load()?;
    let cfg = SimulationConfig {
        samples: args.samples,
        horizon: args.horizon,
        seed: args.seed,
        semantics: args.semantics.into(),
    };
    let estimates = simulate(&sys, &rho0, &cfg).map_err(run_err)?;

    let mut table = Table::new(vec!["w_emp".into(), "std_error".into()]);
    for e in &estimates {
        table.push(e.k, &[e.mean_sq_norm.max(0.0).sqrt(), e.std_error]);
    }
    emit(&table.render(args.out.format), args.out.output.as_deref())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let (sys, rho0) = args.system.load()?;
    let feasible = feasible_exact_horizon(&sys, &rho0, args.component_limit);
    let horizon = args.horizon.min(feasible);
    if horizon < args.horizon {
        eprintln!(
            "compare: horizon capped to {horizon} (requested {}, component limit {})",
            args.horizon, args.component_limit
        );
    }
    let traj = analyze(&sys, &rho0, horizon).map_err(run_err)?;
    let series = exact_w_series(&sys, &rho0, horizon, args.component_limit).map_err(run_err)?;

    let mut max_rel = 0.0f64;
    let mut table = Table::new(vec!["w_hat".into(), "w_exact".into(), "rel_err".into()]);
    for k in 0..=horizon {
        let w_hat = traj.w_hat(k).value();
        let w = series[k].value();
        let rel = (w_hat - w).abs() / w.abs().max(1.0);
        max_rel = max_rel.max(rel);
        table.push(k, &[w_hat, w, rel]);
    }
    eprintln!("compare: max rel |w_hat - w_exact| = {max_rel:.3e} over k <= {horizon}");
    emit(&table.render(args.out.format), args.out.output.as_deref())
}

fn cmd_presets(args: &PresetsArgs) -> Result<(), CliError> {
    match &args.dump {
        None => {
            let mut listing = String::new();
            for name in PRESET_NAMES {
                listing.push_str(name);
                listing.push('\n');
            }
            emit(&listing, args.output.as_deref())
        }
        Some(name) => {
            let cfg = preset_config(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset \"{name}\" (available: {})",
                    PRESET_NAMES.join(", ")
                ))
            })?;
            emit(&cfg.to_json(), args.output.as_deref())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Presets(a) => cmd_presets(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
