//! Truncated multivariate power series, monomial valuations and the
//! substitutions behind monoidal transformations and coordinate changes.
//!
//! A [`TruncSeries`] records a truncation witness: it is exact for every
//! monomial of total degree at most the witness, and nothing is claimed
//! beyond it. Valuation queries refuse to answer when the witness cannot
//! certify the minimum.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lexgroup::{degree_l, LatticeError, LexVec};
use crate::scalar::{Coeff, LatticeInt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("truncation at total degree {witness} cannot certify the minimum {found}")]
    Inconclusive { witness: u32, found: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Exponent tuple of a series monomial.
pub type Exps = Vec<u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncSeries<C> {
    nvars: usize,
    terms: BTreeMap<Exps, C>,
    /// Exact for total degree `<= witness`; `None` means exact everywhere.
    witness: Option<u32>,
}

fn total_degree(e: &[u32]) -> u32 {
    e.iter().sum()
}

fn add_w(a: Option<u32>, b: u32) -> Option<u32> {
    a.map(|a| a + b)
}

fn min_w(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(a.min(b)),
    }
}

impl<C: Coeff> TruncSeries<C> {
    pub fn zero(nvars: usize) -> Self {
        TruncSeries { nvars, terms: BTreeMap::new(), witness: None }
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exps, C)>, witness: Option<u32>) -> Self {
        let mut s = TruncSeries { nvars, terms: BTreeMap::new(), witness };
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length");
            s.add_term(e, c);
        }
        s.truncate();
        s
    }

    pub fn monomial(nvars: usize, exps: Exps, c: C) -> Self {
        Self::from_terms(nvars, [(exps, c)], None)
    }

    /// `X_k` with coefficient `one`.
    pub fn var(nvars: usize, k: usize, one: C) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        Self::monomial(nvars, e, one)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn witness(&self) -> Option<u32> {
        self.witness
    }

    pub fn with_witness(mut self, witness: Option<u32>) -> Self {
        self.witness = min_w(self.witness, witness);
        self.truncate();
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Zero series known exactly.
    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.witness.is_none()
    }

    pub fn coeff(&self, e: &[u32]) -> Option<&C> {
        self.terms.get(e)
    }

    fn add_term(&mut self, e: Exps, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().plus(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn truncate(&mut self) {
        if let Some(w) = self.witness {
            self.terms.retain(|e, _| total_degree(e) <= w);
        }
    }

    /// Lowest total degree present, if any.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|e| total_degree(e)).min()
    }

    /// Lower bound on the total degree of every term, known or not.
    fn order_bound(&self) -> Option<u32> {
        match (self.order(), self.witness) {
            (Some(o), _) => Some(o),
            (None, Some(w)) => Some(w + 1),
            (None, None) => None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        out.witness = min_w(self.witness, other.witness);
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out.truncate();
        out
    }

    pub fn neg(&self) -> Self {
        TruncSeries {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.negated())).collect(),
            witness: self.witness,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = TruncSeries { nvars: self.nvars, terms: BTreeMap::new(), witness: self.witness };
        for (e, a) in &self.terms {
            out.add_term(e.clone(), a.times(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        // an exact zero factor makes the product exactly zero
        if self.is_exact_zero() || other.is_exact_zero() {
            return TruncSeries::zero(self.nvars);
        }
        let witness = match (self.order_bound(), other.order_bound()) {
            (Some(of), Some(og)) => min_w(add_w(self.witness, og), add_w(other.witness, of)),
            _ => None,
        };
        let mut out = TruncSeries { nvars: self.nvars, terms: BTreeMap::new(), witness };
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let e: Exps = a.iter().zip(b).map(|(p, q)| p + q).collect();
                if witness.is_some_and(|w| total_degree(&e) > w) {
                    continue;
                }
                out.add_term(e, x.times(y));
            }
        }
        out
    }

    pub fn pow(&self, k: u32, one: &C) -> Self {
        let mut acc = Self::monomial(self.nvars, vec![0; self.nvars], one.clone());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Monomial valuation `min_lex { degree_L(X^A) : A ∈ E(f) }`; `None`
    /// stands for the value of the zero series.
    pub fn monomial_value<I: LatticeInt>(&self, values: &[LexVec<I>]) -> Result<Option<LexVec<I>>, SeriesError> {
        if values.len() != self.nvars {
            return Err(LatticeError::DimensionMismatch { expected: self.nvars, found: values.len() }.into());
        }
        if values.iter().any(|b| !b.is_positive()) {
            return Err(SeriesError::InvalidInput("monomial values must be lexicographically positive".into()));
        }
        let mut best: Option<LexVec<I>> = None;
        for e in self.terms.keys() {
            let exps: Vec<I> = e.iter().map(|&a| I::from_u32(a).expect("fits")).collect();
            let d = degree_l(&exps, values)?;
            if best.as_ref().is_none_or(|b| d < *b) {
                best = Some(d);
            }
        }
        let Some(w) = self.witness else {
            return Ok(best);
        };
        // unseen monomials have total degree > w, hence value >= (w+1) * min B_i
        let smallest = values.iter().min().expect("nvars > 0");
        let bound = smallest.scale(&I::from_u32(w + 1).expect("fits"));
        match best {
            Some(b) if b <= bound => Ok(Some(b)),
            Some(b) => Err(SeriesError::Inconclusive { witness: w, found: b.to_string() }),
            None => Err(SeriesError::Inconclusive { witness: w, found: "none".into() }),
        }
    }

    /// `X_l ↦ Y_l * Y_i^q`, other variables renamed in place.
    pub fn monoidal_subst(&self, l: usize, i: usize, q: u32) -> Self {
        assert!(l != i && l < self.nvars && i < self.nvars);
        let mut out = TruncSeries { nvars: self.nvars, terms: BTreeMap::new(), witness: self.witness };
        for (e, c) in &self.terms {
            let mut f = e.clone();
            f[i] += q * e[l];
            out.add_term(f, c.clone());
        }
        out.truncate();
        out
    }

    /// `X_j ↦ Z_j + correction`, where the correction does not involve `Z_j`.
    pub fn coordinate_change(&self, j: usize, correction: &Self) -> Result<Self, SeriesError> {
        assert_eq!(self.nvars, correction.nvars);
        if correction.terms.keys().any(|e| e[j] > 0) {
            return Err(SeriesError::InvalidInput(format!("correction for variable {} involves itself", j + 1)));
        }
        if correction.terms.contains_key(&vec![0; self.nvars]) && (self.witness.is_some() || correction.witness.is_some()) {
            return Err(SeriesError::InvalidInput("correction with a constant term cannot be truncated".into()));
        }
        let Some(one) = self.terms.values().next().map(|c| c.one_like()) else {
            return Ok(self.clone());
        };
        let mut zj = vec![0; self.nvars];
        zj[j] = 1;
        let base = TruncSeries::monomial(self.nvars, zj, one.clone()).add(correction);
        let witness = min_w(self.witness, correction.witness);
        let mut groups: BTreeMap<u32, TruncSeries<C>> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut rest = e.clone();
            let a = rest[j];
            rest[j] = 0;
            groups.entry(a).or_insert_with(|| TruncSeries::zero(self.nvars)).add_term(rest, c.clone());
        }
        let mut out = TruncSeries { nvars: self.nvars, terms: BTreeMap::new(), witness };
        let mut power = TruncSeries::monomial(self.nvars, vec![0; self.nvars], one);
        let mut at = 0;
        for (a, g) in groups {
            while at < a {
                power = power.mul(&base).with_witness(witness);
                at += 1;
            }
            let term = g.mul(&power);
            for (e, c) in term.terms {
                out.add_term(e, c);
            }
        }
        out.truncate();
        Ok(out)
    }
}

impl<C: Coeff> fmt::Display for TruncSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let mut parts = Vec::new();
            if !c.is_one() || e.iter().all(|&a| a == 0) {
                parts.push(format!("({c})"));
            }
            for (v, &a) in e.iter().enumerate() {
                match a {
                    0 => {}
                    1 => parts.push(format!("X{}", v + 1)),
                    _ => parts.push(format!("X{}^{}", v + 1, a)),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        if let Some(w) = self.witness {
            write!(f, " + O(deg {})", w + 1)?;
        }
        Ok(())
    }
}
