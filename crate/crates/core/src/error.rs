use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch on {axis}: expected {expected}, got {actual}")]
    Dimension {
        axis: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("shape {shape:?} does not match data length {len}")]
    Shape { shape: Vec<usize>, len: usize },

    #[error("batch-norm running statistics are uninitialized; run a training step first")]
    UninitializedStatistics,

    #[error("non-finite gradient in parameter {param} at index {index}")]
    NonFiniteGradient { param: usize, index: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("reflection coefficient {index} has modulus {modulus}, expected 1")]
    NotUnitModulus { index: usize, modulus: f64 },

    #[error("exhaustive search needs {needed} evaluations, budget is {budget}")]
    SearchBudget { needed: f64, budget: u64 },

    #[error("example {example} has energy {energy} after power normalization, expected {target}")]
    PowerConstraint { example: usize, energy: f64, target: f64 },

    #[error("pilot reflection pattern matrix is singular")]
    SingularSchedule,

    #[error("bit count {bits} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitLength { bits: usize, bits_per_symbol: usize },

    #[error("BER curves are on different Eb/N0 grids")]
    GridMismatch,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
