use alloc::string::String;
use core::fmt;

use crate::model::ValidationReport;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the library.
///
/// Model violations are reported as data by [`crate::validate_model`]; they
/// only become an error when a [`crate::FiniteModel`] is constructed from
/// invalid tables.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidModel(ValidationReport),
    /// Risk parameter outside `(−∞, −1e-12]` or not finite.
    InvalidTheta(f64),
    InvalidDistribution(String),
    StateOutOfRange { state: usize, states: usize },
    ActionOutOfRange { action: usize, actions: usize },
    StageOutOfRange { stage: usize, horizon: usize },
    /// Policy or trajectory does not match the model dimensions.
    ShapeMismatch(String),
    /// An enumeration would exceed its configured cap.
    CapExceeded { what: &'static str, required: u128, cap: u64 },
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidModel(report) => write!(f, "invalid model: {report}"),
            Error::InvalidTheta(theta) => write!(
                f,
                "invalid risk parameter {theta}: must be finite and strictly negative (|theta| >= 1e-12)"
            ),
            Error::InvalidDistribution(msg) => write!(f, "invalid cost distribution: {msg}"),
            Error::StateOutOfRange { state, states } => {
                write!(f, "state index {state} out of range (|S| = {states})")
            }
            Error::ActionOutOfRange { action, actions } => {
                write!(f, "action index {action} out of range (|A| = {actions})")
            }
            Error::StageOutOfRange { stage, horizon } => {
                write!(f, "stage {stage} out of range (horizon {horizon})")
            }
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::CapExceeded { what, required, cap } => write!(
                f,
                "instance too large for exact enumeration: {what} requires {required} (cap {cap})"
            ),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
