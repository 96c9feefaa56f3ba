use std::fmt;

use prodcredit::banksim::BankError;
use prodcredit::credit::CreditError;
use prodcredit::hjm::HjmError;
use prodcredit::sovereign::SovereignError;
use prodcredit::stochastics::StochasticsError;
use thiserror::Error;

/// Error classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    DriftViolated,
    Infeasible,
    Numerical,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::DriftViolated => 3,
            ErrorClass::Infeasible => 4,
            ErrorClass::Numerical => 5,
            ErrorClass::Io => 6,
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorClass::Usage => "usage",
            ErrorClass::DriftViolated => "drift-condition-violated",
            ErrorClass::Infeasible => "infeasible",
            ErrorClass::Numerical => "numerical",
            ErrorClass::Io => "io",
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("drift condition violated: max |R| = {max_abs:e} at (t={t}, T={maturity}) exceeds {tolerance:e}")]
    DriftViolated {
        max_abs: f64,
        t: f64,
        maturity: f64,
        tolerance: f64,
    },
    #[error("{context}: {source}")]
    Hjm { context: String, source: HjmError },
    #[error("{context}: {source}")]
    Credit {
        context: String,
        source: CreditError,
    },
    #[error("{context}: {source}")]
    Sovereign {
        context: String,
        source: SovereignError,
    },
    #[error("{context}: {source}")]
    Stochastics {
        context: String,
        source: StochasticsError,
    },
    #[error("{context}: {source}")]
    Bank { context: String, source: BankError },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

impl CliError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CliError::Config(_) => ErrorClass::Usage,
            CliError::DriftViolated { .. } => ErrorClass::DriftViolated,
            CliError::Hjm {
                source: HjmError::Infeasible { .. },
                ..
            } => ErrorClass::Infeasible,
            CliError::Hjm { .. }
            | CliError::Credit { .. }
            | CliError::Sovereign { .. }
            | CliError::Stochastics { .. }
            | CliError::Bank { .. } => ErrorClass::Numerical,
            CliError::Io { .. } | CliError::Csv { .. } => ErrorClass::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attach a context label to a module error.
pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T>;
}

macro_rules! impl_context {
    ($err:ty, $variant:ident) => {
        impl<T> Context<T> for std::result::Result<T, $err> {
            fn context(self, what: impl Into<String>) -> Result<T> {
                self.map_err(|source| CliError::$variant {
                    context: what.into(),
                    source,
                })
            }
        }
    };
}

impl_context!(HjmError, Hjm);
impl_context!(CreditError, Credit);
impl_context!(SovereignError, Sovereign);
impl_context!(StochasticsError, Stochastics);
impl_context!(BankError, Bank);
