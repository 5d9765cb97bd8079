use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("input shape error: {0}")]
    InputShape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("insufficient data: need {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("training failed at epoch {epoch}: {reason}")]
    TrainingFailure { epoch: usize, reason: String },
}

macro_rules! shape_err {
    ($($arg:tt)*) => { $crate::Error::InputShape(alloc::format!($($arg)*)) };
}

macro_rules! param_err {
    ($($arg:tt)*) => { $crate::Error::Parameter(alloc::format!($($arg)*)) };
}

pub(crate) use param_err;
pub(crate) use shape_err;
