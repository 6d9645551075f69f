//! Crate-wide error type with the machine-readable categories the CLI maps to
//! exit codes: config (1), physics (2), numerics (2).

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Physics,
    Numerics,
}

impl ErrorCategory {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorCategory::Config => 1,
            ErrorCategory::Physics | ErrorCategory::Numerics => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Physics => "physics",
            ErrorCategory::Numerics => "numerics",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("level-scheme data: {0}")]
    Scheme(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("ODE integration failed: {0}")]
    Ode(String),

    #[error("Fock-space cutoff violated: top-level population {leak:.3e} exceeds {limit:.3e}")]
    FockCutoff { leak: f64, limit: f64 },

    #[error("physics precondition: {0}")]
    Physics(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Scheme(_) | Error::Config(_) | Error::Io(_) => ErrorCategory::Config,
            Error::QuadratureNonConvergence { .. } | Error::Ode(_) | Error::FockCutoff { .. } => {
                ErrorCategory::Numerics
            }
            Error::Physics(_) => ErrorCategory::Physics,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
