use thiserror::Error;

use crate::families::FamilyKind;

pub type Result<T> = std::result::Result<T, AfcError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AfcError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("argument {value} outside the domain: {reason}")]
    Domain { value: f64, reason: &'static str },

    #[error("-Q(t) is undefined at t = {t} for the {family} family (f1'(t) = 0)")]
    UndefinedRatio { family: FamilyKind, t: f64 },

    #[error("moments are undefined for the {0} family")]
    MomentsUndefined(FamilyKind),

    #[error("operation not supported for the {family} family: {reason}")]
    UnsupportedFamily {
        family: FamilyKind,
        reason: &'static str,
    },

    #[error("the {0} family cannot accommodate negative correlations")]
    NegativeDependenceUnsupported(FamilyKind),

    #[error("the normal family degenerates to independence; tau must be 0 (got {0})")]
    NormalRequiresIndependence(f64),

    #[error("quadrature did not reach tolerance: estimate {estimate}, error bound {error}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
