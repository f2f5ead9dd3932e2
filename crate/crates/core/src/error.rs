use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular kernel: source and target coincide at {0:?}")]
    SingularKernel([f64; 3]),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible factorization: {0}")]
    InfeasibleFactorization(String),

    #[error("placement infeasible in cell {cell:?}: need {needed} centers, room for {capacity}")]
    Placement {
        cell: Vec<usize>,
        needed: usize,
        capacity: usize,
    },

    #[error("scatterer size outside the small-scatterer regime: ka = {ka:.3} (limit {limit})")]
    Regime { ka: f64, limit: f64 },

    #[error("dense mode capacity exceeded: M = {m} > cap {cap}")]
    Capacity { m: usize, cap: usize },

    #[error("grid too coarse: kh = {kh:.3} exceeds {limit}")]
    Resolution { kh: f64, limit: f64 },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("singular linear system")]
    SingularSystem,

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("config: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Tag an error with the pipeline stage that raised it.
    pub fn at(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// The innermost error, below any stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
