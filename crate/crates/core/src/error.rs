use thiserror::Error;

use crate::solver::Status;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("invalid {entity}: {reason}")]
    Invariant { entity: String, reason: String },

    #[error("singular reduced susceptance matrix (pivot {pivot:.3e} at bus {bus})")]
    SingularSusceptance { bus: String, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("unbalanced injections: net {net:.6e} MW exceeds tolerance")]
    Unbalanced { net: f64 },

    #[error("malformed optimization problem: {0}")]
    Problem(String),

    #[error("solver returned {status:?} for {context}")]
    Solver { status: Status, context: String },

    #[error(
        "negative big-M constant {value:.6} for sample {sample}, unit {unit} (unclipped sample?)"
    )]
    NegativeBigM {
        sample: usize,
        unit: usize,
        value: f64,
    },

    #[error("exclusion budget K = {k} outside [0, {max}]")]
    KOutOfRange { k: usize, max: usize },

    #[error("problem too large for enumeration: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("column-and-constraint generation did not converge in {iterations} iterations (last theta {theta:.3e})")]
    NotConverged { iterations: usize, theta: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(entity: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invariant {
            entity: entity.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
