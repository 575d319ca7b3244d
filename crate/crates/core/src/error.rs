use thiserror::Error;

use crate::trainer::LossKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: input is not valid UTF-8")]
    Encoding { line: usize },
    #[error("no label survives the minimum count of {min_count}")]
    EmptyVocabulary { min_count: u64 },
    #[error("instance `{0}` has no labels")]
    EmptyLabelSet(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),
    #[error("degenerate vector: {0}")]
    DegenerateVector(String),
    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("label vocabularies do not align; offending labels: {}", .0.join(", "))]
    Alignment(Vec<String>),
    #[error("probe not applicable: {0}")]
    InapplicableProbe(String),
    #[error("{arm} arm diverged at step {step}")]
    TrainingFailure { arm: LossKind, step: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by caller-supplied parameters rather than data.
    pub fn is_argument(&self) -> bool {
        matches!(self, Error::Argument(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
