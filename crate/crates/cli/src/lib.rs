//! Configuration, artifact I/O and subcommand pipelines behind `vpland`.

pub mod artifacts;
pub mod config;
pub mod pipeline;

pub use config::RunConfig;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "VPLAND_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver blow-up: {0}")]
    BlowUp(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("solver error: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::BlowUp(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Io(_) => 5,
            CliError::Solver(_) => 1,
        }
    }
}

impl From<landau_core::Error> for CliError {
    fn from(e: landau_core::Error) -> Self {
        use landau_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidInput(_) | E::OutsideDomain(_) => CliError::Config(msg),
            E::BlowUp(_) | E::Unstable(_) => CliError::BlowUp(msg),
            E::NonConvergence(_) | E::Quadrature(_) => CliError::NonConvergence(msg),
            _ => CliError::Solver(msg),
        }
    }
}

/// Worker count: the environment override wins over the config value.
pub fn worker_count(cfg: &RunConfig) -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "{WORKERS_ENV} must be a non-negative integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(cfg.workers),
    }
}
