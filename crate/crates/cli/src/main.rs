use clap::{Parser, Subcommand, ValueEnum};
use landau_cli::config::Mode;
use landau_cli::{pipeline, worker_count, CliError, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

const LONG_ABOUT: &str = "\
Linear and nonlinear Landau damping of the Vlasov–Poisson system on R³
around the Poisson equilibrium M₀(v) = 1/(π²(1+|v|²)²).

Units: time is measured in inverse plasma frequencies 1/ω_e and lengths in
v̄/ω_e, so the Langmuir carrier has unit angular frequency and the Landau
roots sit at λ = ±1 + i|ξ|. Wavenumber k = 0 is excluded everywhere (the
Penrose lower bound degenerates there).

The config file holds flat `key = value` lines (`#` comments); unknown keys
are rejected. Worker threads: `workers = N` in the config, overridden by the
VPLAND_WORKERS environment variable (0 lets the runtime decide).

Exit codes: 0 ok, 1 other solver error, 2 config/usage, 3 blow-up,
4 non-convergence, 5 I/O.";

#[derive(Parser)]
#[command(name = "vpland", version, about = "Landau damping toolkit", long_about = LONG_ABOUT)]
struct Cli {
    /// Config file (defaults apply when omitted).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Direct,
    Picard,
}

#[derive(Subcommand)]
enum Cmd {
    /// Landau roots, |1+K| residuals and quadrature cross-check over the k-grid → dispersion.csv
    Dispersion,
    /// Linear solve → linear_modes.csv, linear_field.csv, linear_meta.json
    Linear,
    /// Spherically symmetric nonlinear run → rho_rt.csv, field_rt.csv, picard_log.json, run_meta.json
    Nonlinear {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Representation I/II per mode → representations.csv, decompose_meta.json
    Decompose,
    /// Fits on an earlier run's artifacts → rates.json, decomposition.csv
    Rates {
        /// Directory holding the run's CSV files (defaults to the output directory).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Cmd::Nonlinear { mode: Some(m) } = &cli.cmd {
        cfg.mode = match m {
            ModeArg::Direct => Mode::Direct,
            ModeArg::Picard => Mode::Picard,
        };
    }
    let workers = worker_count(&cfg)?;
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    }
    let dir = cfg.output_dir.clone();
    pipeline::ensure_dir(&dir)?;
    match cli.cmd {
        Cmd::Dispersion => pipeline::dispersion(&cfg, &dir),
        Cmd::Linear => pipeline::linear(&cfg, &dir),
        Cmd::Nonlinear { .. } => pipeline::nonlinear(&cfg, &dir),
        Cmd::Decompose => pipeline::decompose(&cfg, &dir),
        Cmd::Rates { input } => pipeline::rates(&cfg, input.as_deref().unwrap_or(&dir), &dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vpland: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
