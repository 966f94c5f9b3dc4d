//! Constructive monomialization of rank-`m` discrete valuations of
//! `k((X_1, ..., X_n))` given through a generalized power series
//! presentation.
//!
//! Modules, bottom up:
//!
//! - [`lexgroup`]: lexicographic `Z^m`, echelon bases and their row logs.
//! - [`coeff`]: ground fields and residue-field towers `k(w_1, ..., w_d)`.
//! - [`series`]: truncated multivariate series and monomial valuations.
//! - [`hahn`]: lazily enumerated Hahn series with closed-form families.
//! - [`engine`]: the monomialization procedure and its verification.
//! - [`cli`]: the specification format and the `valmono` commands.
//!
//! The arithmetic layers are generic over the integer and coefficient types;
//! the aliases below fix the types the engine runs on.

pub mod coeff;
pub mod lexgroup;
pub mod scalar;
pub mod series;
pub mod hahn;
pub mod expr;
pub mod engine;
pub mod cli;

pub use engine::{monomialize, verify_monomial, EngineError, MonomializationResult, ValuationSpec};

/// Lexicographically ordered value in `Z^m`.
pub type Value = lexgroup::LexVec<num_bigint::BigInt>;
/// Basis of a subgroup of `Z^m` in echelon form.
pub type Basis = lexgroup::SubgroupBasis<num_bigint::BigInt>;
/// Truncated series over the ground field.
pub type Series = series::TruncSeries<coeff::GroundElem>;
/// Hahn series with residue-field coefficients.
pub type Stream = hahn::HahnStream<coeff::TowerElem>;
