use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}, column `{column}`: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        best_residual: f64,
    },

    #[error("underdetermined fit: {points} data points for {parameters} free parameters")]
    Underdetermined { points: usize, parameters: usize },

    #[error("singular Jacobian: numerical rank {rank} of {parameters} parameters")]
    SingularJacobian { rank: usize, parameters: usize },

    #[error("potential is not symmetric about its midpoint (max deviation {max_deviation:.3e} meV)")]
    Asymmetric { max_deviation: f64 },

    #[error("state {state} does not decay at the grid edge (|psi|^2 ratio {ratio:.3e}); widen the grid")]
    BoundaryDecay { state: usize, ratio: f64 },

    #[error("spectrum is missing a level labeled {0}; raise n_max or the number of eigenpairs")]
    MissingLabel(&'static str),

    #[error("{0}")]
    Shape(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that come from a numerical procedure failing rather
    /// than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::SingularJacobian { .. }
        )
    }
}
