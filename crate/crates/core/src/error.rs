use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("singular operator at mode {mode:?} (multiplier {value:e})")]
    SingularMode { mode: Vec<usize>, value: f64 },

    #[error("BDF order {0} outside 1..=5")]
    InvalidOrder(usize),

    #[error("history holds {available} entries, {needed} required")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("history times must increase strictly (last {last}, pushed {pushed})")]
    NonMonotoneHistory { last: f64, pushed: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("non-finite solution at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("singular auxiliary update (denominator {0:e})")]
    SingularUpdate(f64),

    #[error("crystal patches {0} and {1} overlap")]
    OverlappingPatches(usize, usize),

    #[error("run diverged at step {step} (t = {t}): {cause}; last finite trace row: {last_row}")]
    Diverged {
        step: usize,
        t: f64,
        cause: String,
        last_row: String,
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
