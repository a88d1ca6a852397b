//! `sbm`: variational ground states, coupling sweeps and transition analysis
//! for the spin-boson model.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{AnalyzeSettings, CollapseSettings};
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "sbm", version, about = "Spin-boson ground states and criticality analysis")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Random initial states per coupling.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the discretized bath table for one coupling.
    Bath(ModelArgs),
    /// Variational ground state, observables and pair measures at one coupling.
    GroundState(ModelArgs),
    /// Ground states and summed indicators over a coupling grid.
    Sweep(SweepArgs),
    /// Classify and locate transitions in sweep tables; optionally extrapolate.
    Analyze(AnalyzeArgs),
    /// Data collapse of bath-pair discord profiles from stored states.
    Collapse(CollapseArgs),
}

#[derive(Args, Default)]
struct ModelArgs {
    /// `single` or `two`.
    #[arg(long)]
    model: Option<String>,
    /// Spectral exponent.
    #[arg(long)]
    s: Option<f64>,
    /// Tunneling amplitude.
    #[arg(long)]
    delta: Option<f64>,
    /// Bias.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Ising coupling of the two-spin model.
    #[arg(long)]
    k: Option<f64>,
    /// Logarithmic discretization factor.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    omega_c: Option<f64>,
    /// Number of bath modes.
    #[arg(long)]
    m: Option<usize>,
    /// Lowest bath frequency; sets the number of modes.
    #[arg(long)]
    omega_min: Option<f64>,
    /// Coherent states per spin configuration.
    #[arg(long)]
    n: Option<usize>,
    /// Coupling strength.
    #[arg(long)]
    alpha: Option<f64>,
    /// Reference mode of the bath pair sweep (0-based).
    #[arg(long)]
    reference_mode: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Explicit couplings, comma separated.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    alpha_start: Option<f64>,
    #[arg(long)]
    alpha_stop: Option<f64>,
    #[arg(long)]
    alpha_step: Option<f64>,
    /// Seed each point with its left neighbour's state.
    #[arg(long)]
    warm_start: bool,
    /// Add a finer grid around the provisional transition.
    #[arg(long)]
    refine: bool,
    /// Columns written peak-normalized to indicators.csv, comma separated.
    #[arg(long, value_delimiter = ',')]
    indicators: Option<Vec<String>>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Sweep CSV files.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long, default_value = "SumD_b")]
    column: String,
    /// `auto`, `peak`, `jump`, `kink` or `delta`.
    #[arg(long, default_value = "auto")]
    signature: String,
    /// Control parameter of each input (e.g. ln Λ or ω_min) for extrapolation.
    #[arg(long)]
    x: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    p_min: f64,
    #[arg(long, default_value_t = 5.0)]
    p_max: f64,
    /// Fit the exponential approach of dE_g/dα to its asymptote.
    #[arg(long)]
    tail_fit: bool,
}

#[derive(Args)]
struct CollapseArgs {
    /// Directory of stored ground states (the `states/` folder of a sweep).
    #[arg(long)]
    states: PathBuf,
    /// Exponent of the α^λ prefactor of the scaled discord.
    #[arg(long, default_value_t = 0.0)]
    lambda_exp: f64,
    #[arg(long)]
    reference_mode: Option<usize>,
}

impl ModelArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            model: self.model,
            s: self.s,
            delta: self.delta,
            epsilon: self.epsilon,
            k: self.k,
            lambda: self.lambda,
            omega_c: self.omega_c,
            m: self.m,
            omega_min: self.omega_min,
            n: self.n,
            alpha: self.alpha,
            reference_mode: self.reference_mode,
            ..Default::default()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let globals = RunConfig { seed: cli.seed, restarts: cli.restarts, out: cli.out.clone(), ..Default::default() };
    let out_or_default = |cfg_out: Option<PathBuf>| cli.out.clone().or(cfg_out).unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Bath(args) => commands::bath(&file.overlay(args.into_config()).overlay(globals).resolve()?),
        Command::GroundState(args) => commands::ground_state(&file.overlay(args.into_config()).overlay(globals).resolve()?),
        Command::Sweep(args) => {
            let mut flags = args.model.into_config();
            flags.alphas = args.alphas;
            flags.alpha_start = args.alpha_start;
            flags.alpha_stop = args.alpha_stop;
            flags.alpha_step = args.alpha_step;
            flags.warm_start = args.warm_start.then_some(true);
            flags.refine = args.refine.then_some(true);
            flags.indicators = args.indicators;
            commands::sweep(&file.overlay(flags).overlay(globals).resolve()?)
        }
        Command::Analyze(args) => commands::analyze(&AnalyzeSettings {
            inputs: args.input,
            column: args.column,
            signature: Some(args.signature),
            x: args.x,
            p_range: (args.p_min, args.p_max),
            tail_fit: args.tail_fit,
            out: out_or_default(file.out),
        }),
        Command::Collapse(args) => commands::collapse(&CollapseSettings {
            states: args.states,
            lambda_exp: args.lambda_exp,
            reference_mode: args.reference_mode.or(file.reference_mode),
            out: out_or_default(file.out),
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
