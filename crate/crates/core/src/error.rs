use thiserror::Error;

use crate::scan::ScanRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has no states")]
    Empty,

    #[error("row {row}: column {col} out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("row {row}: column {col} appears more than once")]
    DuplicateEntry { row: usize, col: usize },

    #[error("entry ({row}, {col}) = {value} is not a probability")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, off by more than {tolerance}")]
    RowSum { row: usize, sum: f64, tolerance: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("chain is reducible ({} strongly connected components)", components.len())]
    Reducible { components: Vec<Vec<usize>> },

    #[error("matrix is not a lazy simple random walk: {0}")]
    NotSrwForm(String),

    #[error("unknown node label {0}")]
    UnknownLabel(String),

    #[error("expected hitting time from state {start} is infinite: {reason}")]
    InfiniteHittingTime { start: usize, reason: String },

    #[error("power iteration did not converge in {iterations} iterations (last change {change:e})")]
    NoConvergence {
        iterations: usize,
        change: f64,
        last: Vec<f64>,
    },

    #[error("sample {sample} exceeded the step cap of {cap} ({hits} capped samples)")]
    StepCapExceeded { sample: u64, cap: u64, hits: u64 },

    #[error("solver residual {residual:e} exceeds {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("state reduction broke down at state {state}: no outgoing mass left")]
    Breakdown { state: usize },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("scan failed at n = {n}: {source}")]
    ScanFailed {
        n: usize,
        partial: Vec<ScanRecord>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Empty => "empty",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::DuplicateEntry { .. } => "duplicate_entry",
            Error::InvalidEntry { .. } => "invalid_entry",
            Error::RowSum { .. } => "row_sum",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Reducible { .. } => "reducible",
            Error::NotSrwForm(_) => "not_srw_form",
            Error::UnknownLabel(_) => "unknown_label",
            Error::InfiniteHittingTime { .. } => "infinite_hitting_time",
            Error::NoConvergence { .. } => "no_convergence",
            Error::StepCapExceeded { .. } => "step_cap_exceeded",
            Error::ResidualTooLarge { .. } => "residual_too_large",
            Error::Breakdown { .. } => "breakdown",
            Error::Format { .. } => "format",
            Error::ScanFailed { .. } => "scan_failed",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Errors caused by malformed input rather than by the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::IndexOutOfRange { .. }
                | Error::DuplicateEntry { .. }
                | Error::InvalidEntry { .. }
                | Error::RowSum { .. }
                | Error::Empty
        )
    }
}
