//! Scenario-driven runner around `hu_shadow_core`: load a JSON scenario, run
//! one analysis, and write CSV/JSON artifacts plus a `summary.json`.

pub mod report;
pub mod run;
pub mod scenario;

pub use run::{execute, resolve_out_dir, Command, Outcome, Overrides};
pub use scenario::{load_scenario, parse_scenario, Scenario};

/// Everything that can stop a command.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad scenario file, override or flag.
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Analysis(#[from] hu_shadow_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for usage, configuration and I/O problems, 1 for analysis failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Analysis(_) => 1,
        }
    }

    /// Stable snake_case tag for machine consumption.
    pub fn kind(&self) -> &'static str {
        use hu_shadow_core::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Analysis(e) => match e {
                E::InvalidInput(_) => "invalid_input",
                E::OutOfHypothesis(_) => "out_of_hypothesis",
                E::HypothesisViolation { .. } => "hypothesis_violation",
                E::EpsilonTooLarge(_) => "epsilon_too_large",
                E::NotConverged { .. } => "not_converged",
                E::DegenerateQuotient { .. } => "degenerate_quotient",
                E::Overflow { .. } => "overflow",
                E::NoDivergence(_) => "no_divergence",
                E::ClassificationMismatch { .. } => "classification_mismatch",
                E::Unsupported(_) => "unsupported",
            },
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}
