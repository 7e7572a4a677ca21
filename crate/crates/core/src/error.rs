use std::path::PathBuf;

use crate::qcore::DensityMatrix4;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid scenario, spectrum or numeric parameter.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-physical channel: |kappa| = {0} exceeds 1")]
    NonPhysicalChannel(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("degenerate conditioning: outcome probability {0:e} is zero")]
    DegenerateConditioning(f64),

    #[error("eigenvalue routine did not converge: {0}")]
    EigenNonConvergence(String),

    /// Tomography input does not follow the 16-setting protocol.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// The likelihood optimizer ran out of budget; carries the best iterate found.
    #[error("optimizer did not converge after {evaluations} evaluations (best NLL {best_nll})")]
    NonConvergence {
        evaluations: usize,
        best_nll: f64,
        best: Box<DensityMatrix4>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}
