use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular linear system at row {row}: {detail}")]
    SingularSystem { row: usize, detail: String },

    #[error("norm drift {drift:.3e} exceeds {limit:.1e} at t = {time}")]
    NormDrift { drift: f64, limit: f64, time: f64 },

    #[error("step rejected {halvings} times at t = {time}, last drift {drift:.3e}")]
    StepRejection { halvings: usize, time: f64, drift: f64 },

    #[error("picard iteration stopped contracting at iterate {iterate} (T = {horizon})")]
    NonContraction { iterate: usize, horizon: f64 },

    #[error("layer unresolved for epsilon = {epsilon}: {cells_per_width:.2} cells per layer width")]
    UnresolvedLayer { epsilon: f64, cells_per_width: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("csv line {line}: {detail}")]
    Csv { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a solver run rather than of its inputs.
    pub fn is_solver_abort(&self) -> bool {
        matches!(
            self,
            Error::NonContraction { .. }
                | Error::StepRejection { .. }
                | Error::NormDrift { .. }
                | Error::SingularSystem { .. }
        )
    }
}
