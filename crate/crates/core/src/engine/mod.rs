//! Constructive monomialization of a rank-`m` valuation given through a
//! Hahn-series presentation of the variables.
//!
//! The run alternates between preparing the values (echelon reduction
//! realized as monoidal transformations), discovering each remaining
//! variable's expansion against the current value subgroup, and restarting
//! whenever a value outside that subgroup shows up.

mod report;
mod run;
mod verify;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::coeff::{GroundField, SymbolTable, TowerElem};
use crate::expr::TowerCtx;
use crate::hahn::{Budget, Exp, HahnError, HahnStream};

pub use report::{MonomializationResult, Residue, SlotKind};
pub use run::{monomialize, monomialize_with};
pub use verify::{replay_images, verify_monomial, Mismatch, VerifyReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("inconclusive at {slot}: {reason}; pseudo-convergent prefix [{}]", fmt_prefix(.prefix))]
    Inconclusive { slot: String, reason: String, prefix: Vec<Exp> },
    #[error("purity violation at {slot}: coefficient {coefficient} is neither in {field} nor a new independent residue")]
    Purity { slot: String, coefficient: String, field: String },
    #[error("dimension: {0}")]
    Dimension(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

fn fmt_prefix(p: &[Exp]) -> String {
    p.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

impl EngineError {
    /// Process exit code for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Inconclusive { .. } => 3,
            EngineError::Purity { .. } | EngineError::Dimension(_) => 4,
            EngineError::InvalidSpec(_) => 2,
            EngineError::Internal(_) => 1,
        }
    }

    pub(crate) fn from_hahn(slot: &str, e: HahnError) -> Self {
        match e {
            HahnError::Inconclusive(reason) => EngineError::Inconclusive { slot: slot.into(), reason, prefix: Vec::new() },
            HahnError::NotInvertible => EngineError::Dimension(format!("{slot}: a variable maps to zero")),
            other => EngineError::Internal(format!("{slot}: {other}")),
        }
    }
}

/// Run limits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budgets {
    /// Finite subtractions per variable before a family match is required.
    pub max_steps: usize,
    /// Terms any stream may enumerate.
    pub max_terms: usize,
    /// Total degree of sample polynomials in verification.
    pub trunc_degree: u32,
    pub lex_ceiling: Option<Exp>,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { max_steps: 64, max_terms: 4096, trunc_degree: 4, lex_ceiling: None }
    }
}

impl Budgets {
    pub fn stream_budget(&self) -> Budget {
        Budget { max_terms: self.max_terms, lex_ceiling: self.lex_ceiling.clone(), ..Budget::default() }
    }
}

/// Input presentation: `v = ν_t ∘ φ` with `φ(X_i)` given as streams.
#[derive(Clone, Debug)]
pub struct ValuationSpec {
    pub field: GroundField,
    pub rank: usize,
    pub vars: Vec<String>,
    pub symbols: Arc<SymbolTable>,
    pub images: Vec<HahnStream<TowerElem>>,
    pub budgets: Budgets,
}

impl ValuationSpec {
    pub fn ctx(&self) -> TowerCtx {
        TowerCtx::new(self.field, self.symbols.clone())
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.rank == 0 {
            return Err(EngineError::InvalidSpec("rank must be positive".into()));
        }
        if self.vars.is_empty() {
            return Err(EngineError::InvalidSpec("no variables".into()));
        }
        if self.images.len() != self.vars.len() {
            return Err(EngineError::InvalidSpec(format!("{} variables but {} images", self.vars.len(), self.images.len())));
        }
        if let Some(img) = self.images.iter().find(|s| s.rank() != self.rank) {
            return Err(EngineError::InvalidSpec(format!("image of rank {} in a rank {} specification", img.rank(), self.rank)));
        }
        if self.rank > self.vars.len() {
            return Err(EngineError::InvalidSpec(format!("rank {} exceeds the number of variables", self.rank)));
        }
        Ok(())
    }
}

/// Engine switches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    /// Take limits along closed-form families; without them every
    /// subtraction is a finite step.
    pub use_limits: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { use_limits: true }
    }
}

/// Infinite part of a coordinate change:
/// `Σ_{i=i0}^{hi} c·i^e·r^i · Y^{r0 + (i-i0)·rd}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyCorrection {
    pub c: TowerElem,
    pub e: u32,
    pub r: TowerElem,
    pub i0: u64,
    pub hi: Option<u64>,
    pub r0: Vec<BigInt>,
    pub rd: Vec<BigInt>,
}

/// Correction of a coordinate change `Y_j = Z_j + correction(Z)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Correction {
    pub finite: Vec<(TowerElem, Vec<BigInt>)>,
    pub families: Vec<FamilyCorrection>,
}

impl Correction {
    pub fn is_empty(&self) -> bool {
        self.finite.is_empty() && self.families.is_empty()
    }

    /// The correction evaluated at the given variable images.
    pub fn evaluate(&self, images: &[HahnStream<TowerElem>], one: &TowerElem, budget: &Budget) -> Result<HahnStream<TowerElem>, HahnError> {
        let rank = images.first().map_or(0, |s| s.rank());
        let mut acc = HahnStream::zero(rank);
        for (alpha, r) in &self.finite {
            acc = acc.add(&HahnStream::monomial_image(r, images, one, budget)?.scale(alpha));
        }
        for fc in &self.families {
            let base = HahnStream::monomial_image(&fc.r0, images, one, budget)?;
            let h = HahnStream::monomial_image(&fc.rd, images, one, budget)?;
            let tail = HahnStream::power_series(&h, &fc.c, fc.e, &fc.r, fc.i0, fc.hi, budget)?;
            acc = acc.add(&base.mul(&tail));
        }
        Ok(acc)
    }

    /// Text such as `Σ[i=1..inf] i*Z1^i + 2*Z1^2`, over the given names.
    pub fn describe(&self, name: &dyn Fn(usize) -> String) -> String {
        let mut parts = Vec::new();
        for fc in &self.families {
            let hi = fc.hi.map_or("inf".to_string(), |h| h.to_string());
            let mut factors = vec![crate::hahn::fmt_rule(&fc.c, fc.e, &fc.r)];
            for (s, (a0, ad)) in fc.r0.iter().zip(&fc.rd).enumerate() {
                // exponent ad*i + (a0 - i0*ad)
                let b = a0 - ad * BigInt::from(fc.i0);
                if let Some(x) = fmt_affine(ad, &b) {
                    factors.push(format!("{}^{}", name(s), x));
                }
            }
            if factors.len() > 1 && factors[0] == "1" {
                factors.remove(0);
            }
            parts.push(format!("sum[i={}..{}] {}", fc.i0, hi, factors.join("*")));
        }
        for (alpha, r) in &self.finite {
            let mono = fmt_monomial(r, name);
            let c = fmt_coeff(alpha);
            parts.push(match (c.as_str(), mono.as_str()) {
                (_, "1") => c.clone(),
                ("1", _) => mono,
                _ => format!("{c}*{mono}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

pub(crate) fn fmt_coeff(c: &TowerElem) -> String {
    let s = c.to_string();
    if s.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '^' || ch == '_') {
        s
    } else {
        format!("({s})")
    }
}

fn fmt_affine(a: &BigInt, b: &BigInt) -> Option<String> {
    if a.is_zero() {
        if b.is_zero() {
            return None;
        }
        return Some(if b.is_negative() { format!("({b})") } else { b.to_string() });
    }
    let ai = if a.is_one() { "i".to_string() } else { format!("{a}*i") };
    if b.is_zero() {
        return Some(if a.is_one() { ai } else { format!("({ai})") });
    }
    let sign = if b.is_negative() { "-" } else { "+" };
    Some(format!("({ai}{sign}{})", b.abs()))
}

/// `Z1^2*Z3^-1`, or `1` for the empty monomial.
pub(crate) fn fmt_monomial(r: &[BigInt], name: &dyn Fn(usize) -> String) -> String {
    let parts: Vec<String> = r
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(s, a)| if a.is_one() { name(s) } else { format!("{}^{}", name(s), a) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// Laurent monomial as a fraction: `X3/X1`, `X1*X2^2/X4^3`.
pub(crate) fn fmt_fraction(r: &[BigInt], name: &dyn Fn(usize) -> String) -> String {
    let num: Vec<BigInt> = r.iter().map(|a| if a.is_positive() { a.clone() } else { BigInt::zero() }).collect();
    let den: Vec<BigInt> = r.iter().map(|a| if a.is_negative() { -a } else { BigInt::zero() }).collect();
    let n = fmt_monomial(&num, name);
    if den.iter().all(Zero::is_zero) {
        return n;
    }
    let d = fmt_monomial(&den, name);
    if den.iter().filter(|a| !a.is_zero()).count() > 1 {
        format!("{n}/({d})")
    } else {
        format!("{n}/{d}")
    }
}

/// One entry of the transformation log. Variable indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum LogEntry {
    /// `X_l = Y_l·Y_i^q`
    Monoidal { l: usize, i: usize, q: BigInt },
    /// Interchange of two variables.
    SwapVars(usize, usize),
    /// `Y_j = Z_j + correction(Z)`
    CoordChange { j: usize, correction: Correction },
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogEntry::Monoidal { l, i, q } => {
                let pow = if q.is_one() { String::new() } else { format!("^{q}") };
                write!(f, "X{} -> Y{}*Y{}{}", l + 1, l + 1, i + 1, pow)
            }
            LogEntry::SwapVars(a, b) => write!(f, "X{} <-> X{}", a + 1, b + 1),
            LogEntry::CoordChange { j, correction } => {
                let name = |s: usize| format!("Z{}", s + 1);
                write!(f, "Y{} -> Z{} + {}", j + 1, j + 1, correction.describe(&name))
            }
        }
    }
}

/// What happened during a run, for reports and checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    pub frame: usize,
    pub slot: Option<usize>,
    pub kind: TraceKind,
    pub value: Option<Exp>,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    Monoidal,
    Basis,
    Finite,
    Limit,
    Residue,
    NewValue,
    FinalChange,
}

impl TraceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceKind::Monoidal => "monoidal",
            TraceKind::Basis => "basis",
            TraceKind::Finite => "finite",
            TraceKind::Limit => "limit",
            TraceKind::Residue => "residue",
            TraceKind::NewValue => "new_value",
            TraceKind::FinalChange => "final_change",
        }
    }
}

pub(crate) fn one_of(spec: &ValuationSpec) -> TowerElem {
    spec.ctx().int(1)
}
