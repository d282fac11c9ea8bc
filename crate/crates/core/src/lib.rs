//! Bivariate accelerated failure conditionals (AFC) models with a Weibull
//! marginal for `X` and a location-scale conditional family for `Y`.
//!
//! The joint survival function is
//!
//! ```text
//! P(X > x, Y > y) = exp(-(αx)^λ) · F̄₁((y − μ(x)) / β),   μ(x) = γ ± β(ατx)^λ
//! ```
//!
//! where `F̄₁` is the standardized survival function of one of the
//! [`FamilyKind`]s. The crate covers exact evaluation ([`model`]),
//! brute-force numerical oracles ([`quadrature`]), Metropolis–Hastings
//! sampling ([`sampler`]), moment and likelihood estimation
//! ([`estimation`]) and a seeded replication harness ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod families;
pub mod harness;
pub mod model;
pub mod optim;
pub mod quadrature;
pub mod rng;
pub mod sampler;

pub use error::{AfcError, Result};
pub use estimation::{FitMethod, FitResult, SampleMoments};
pub use families::{FamilyKind, WeibullParams};
pub use model::{AfcModel, DependenceSpec, Direction, Observation};
pub use quadrature::QuadratureSpec;
pub use sampler::{ChainConfig, ChainOutput};
