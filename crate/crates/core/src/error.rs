use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),

    #[error("solver diverged at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error("xi value {value} outside bracket [{min}, {max})")]
    BracketViolation { value: f64, min: f64, max: f64 },

    #[error("unusable trajectory: {0}")]
    UnusableTrajectory(String),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),
}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
