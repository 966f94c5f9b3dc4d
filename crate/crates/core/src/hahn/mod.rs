//! Generalized power series `Σ a_i t^{α_i}` with exponents in `Z^m` under the
//! lexicographic order.
//!
//! A [`HahnStream`] is either a closed form ([`Segments`]: finite terms plus
//! arithmetic-progression families) or a lazily enumerated combination of
//! other streams. Enumeration is memoized and always yields strictly
//! increasing exponents with nonzero coefficients. Every query runs under a
//! [`Budget`]; running out of it is reported as [`HahnError::Inconclusive`].

mod segment;
mod stream;

use num_bigint::BigInt;
use thiserror::Error;

use crate::lexgroup::LexVec;

pub use segment::{APFamily, Segments};
pub use stream::{HahnStream, Term};

pub(crate) use segment::fmt_rule;

/// Exponent of a Hahn term.
pub type Exp = LexVec<BigInt>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HahnError {
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("no limit: {0}")]
    NoLimit(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("the zero series has no inverse")]
    NotInvertible,
}

/// Limits applied to every enumeration query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Terms any single stream may memoize.
    pub max_terms: usize,
    /// Elementary enumeration steps allowed per query.
    pub max_work: u64,
    /// Queries refuse to report terms above this exponent.
    pub lex_ceiling: Option<Exp>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_terms: 4096, max_work: 2_000_000, lex_ceiling: None }
    }
}
