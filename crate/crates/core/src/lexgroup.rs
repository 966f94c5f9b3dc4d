//! Lexicographically ordered integer lattices: value vectors, L-degrees and
//! the Euclidean echelon reduction used to prepare a valuation.
//!
//! The echelon reduction is deliberately the row-by-row Euclidean cascade
//! and not a general Hermite normal form: every row operation it emits is
//! read back as a monoidal transformation of the underlying variables, so
//! the log has to consist of `row_l += q * row_i` steps with `q <= 0` taken
//! against a lex-smaller row.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::scalar::LatticeInt;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("dimension mismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row {row} is not lexicographically positive")]
    NonPositiveRow { row: usize },
    #[error("value {0} is not in the subgroup generated by the basis")]
    NotInSubgroup(String),
}

/// Element of `Z^m` under the lexicographic order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LexVec<I = BigInt> {
    coords: Vec<I>,
}

impl<I: LatticeInt> LexVec<I> {
    pub fn new(coords: Vec<I>) -> Self {
        LexVec { coords }
    }

    pub fn zero(len: usize) -> Self {
        LexVec { coords: vec![I::zero(); len] }
    }

    pub fn from_i64s(values: &[i64]) -> Self {
        LexVec {
            coords: values.iter().map(|&v| I::from_i64(v).expect("fits")).collect(),
        }
    }

    /// Unit vector `e_k` of length `len`.
    pub fn unit(len: usize, k: usize) -> Self {
        let mut v = Self::zero(len);
        v.coords[k] = I::one();
        v
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[I] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<I> {
        self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// `self >_lex 0`.
    pub fn is_positive(&self) -> bool {
        match self.coords.iter().find(|c| !c.is_zero()) {
            Some(c) => c.is_positive(),
            None => false,
        }
    }

    /// Index of the first nonzero coordinate.
    pub fn leading_index(&self) -> Option<usize> {
        self.coords.iter().position(|c| !c.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        LexVec {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        LexVec {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        LexVec { coords: self.coords.iter().map(|a| -a.clone()).collect() }
    }

    pub fn scale(&self, k: &I) -> Self {
        LexVec { coords: self.coords.iter().map(|a| a.clone() * k.clone()).collect() }
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, other: &Self, k: &I) -> Self {
        LexVec {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.clone() + b.clone() * k.clone())
                .collect(),
        }
    }

    pub fn convert<J: LatticeInt>(&self) -> LexVec<J> {
        LexVec {
            coords: self
                .coords
                .iter()
                .map(|c| J::from_i128(c.to_i128().expect("coordinate fits in i128")).expect("fits"))
                .collect(),
        }
    }
}

impl LexVec<BigInt> {
    pub fn from_ints<T: Into<BigInt> + Copy>(values: &[T]) -> Self {
        LexVec { coords: values.iter().map(|&v| v.into()).collect() }
    }
}

impl<I: LatticeInt> fmt::Display for LexVec<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl<I: LatticeInt> Serialize for LexVec<I> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Compare two vectors in the lexicographic order.
pub fn lex_cmp<I: LatticeInt>(a: &LexVec<I>, b: &LexVec<I>) -> Result<Ordering, LatticeError> {
    if a.len() != b.len() {
        return Err(LatticeError::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    Ok(a.coords.cmp(&b.coords))
}

/// `Σ a_i B_i` for an exponent tuple `A` and values `L = {B_i}`.
pub fn degree_l<I: LatticeInt>(exponent: &[I], values: &[LexVec<I>]) -> Result<LexVec<I>, LatticeError> {
    if exponent.len() != values.len() {
        return Err(LatticeError::DimensionMismatch { expected: values.len(), found: exponent.len() });
    }
    let m = values.first().map_or(0, |v| v.len());
    let mut acc = LexVec::zero(m);
    for (a, b) in exponent.iter().zip(values) {
        if b.len() != m {
            return Err(LatticeError::DimensionMismatch { expected: m, found: b.len() });
        }
        if !a.is_zero() {
            acc = acc.add_scaled(b, a);
        }
    }
    Ok(acc)
}

/// A single row operation. Row indices are 0-based; they always refer to
/// the original row positions, never to positions after sorting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RowOp<I = BigInt> {
    /// `row[target] += factor * row[source]`.
    AddRow { target: usize, source: usize, factor: I },
    Swap(usize, usize),
}

impl<I: LatticeInt> fmt::Display for RowOp<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowOp::AddRow { target, source, factor } => {
                write!(f, "F[{},{}]({})", target + 1, source + 1, factor)
            }
            RowOp::Swap(a, b) => write!(f, "swap({},{})", a + 1, b + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RowOpLog<I = BigInt> {
    pub ops: Vec<RowOp<I>>,
}

impl<I: LatticeInt> RowOpLog<I> {
    pub fn replay(&self, rows: &[LexVec<I>]) -> Vec<LexVec<I>> {
        let mut out = rows.to_vec();
        for op in &self.ops {
            match op {
                RowOp::AddRow { target, source, factor } => {
                    out[*target] = out[*target].add_scaled(&out[*source], factor);
                }
                RowOp::Swap(a, b) => out.swap(*a, *b),
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Echelon basis of a subgroup of `Z^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupBasis<I = BigInt> {
    pub rows: Vec<LexVec<I>>,
    pub pivots: Vec<I>,
    pub pivot_cols: Vec<usize>,
}

impl<I: LatticeInt> SubgroupBasis<I> {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Unique coordinates of `value` in this basis, by back-substitution
    /// from the first pivot downward.
    pub fn solve(&self, value: &LexVec<I>) -> Result<Vec<I>, LatticeError> {
        if let Some(r) = self.rows.first() {
            if r.len() != value.len() {
                return Err(LatticeError::DimensionMismatch { expected: r.len(), found: value.len() });
            }
        }
        let mut rest = value.clone();
        let mut out = Vec::with_capacity(self.rows.len());
        for ((row, pivot), &col) in self.rows.iter().zip(&self.pivots).zip(&self.pivot_cols) {
            if rest.coords[..col].iter().any(|c| !c.is_zero()) {
                return Err(LatticeError::NotInSubgroup(value.to_string()));
            }
            let (q, r) = rest.coords[col].div_rem(pivot);
            if !r.is_zero() {
                return Err(LatticeError::NotInSubgroup(value.to_string()));
            }
            rest = rest.add_scaled(row, &-q.clone());
            out.push(q);
        }
        if !rest.is_zero() {
            return Err(LatticeError::NotInSubgroup(value.to_string()));
        }
        Ok(out)
    }

    pub fn contains(&self, value: &LexVec<I>) -> bool {
        self.solve(value).is_ok()
    }
}

/// Solve `A = Σ r_i B_i` in an echelon basis.
pub fn solve_in_basis<I: LatticeInt>(value: &LexVec<I>, basis: &SubgroupBasis<I>) -> Result<Vec<I>, LatticeError> {
    basis.solve(value)
}

/// Echelon reduction by the pivot-wise Euclidean cascade.
///
/// Each pass sorts the active rows ascending (stable), takes the smallest
/// row with a nonzero entry in the current column as pivot and reduces the
/// rows above it: `F(l,i)(-q)` when the remainder is nonzero or when the
/// reduced row stays positive, `F(l,i)(1-q)` otherwise. Once every row
/// with a nonzero entry in the column equals the pivot row, that row joins
/// the basis and the rows with a zero entry move on to the next column.
pub fn echelon_reduce<I: LatticeInt>(rows: &[LexVec<I>]) -> Result<(SubgroupBasis<I>, RowOpLog<I>), LatticeError> {
    let m = rows.first().map_or(0, |r| r.len());
    for (k, r) in rows.iter().enumerate() {
        if r.len() != m {
            return Err(LatticeError::DimensionMismatch { expected: m, found: r.len() });
        }
        if !r.is_positive() {
            return Err(LatticeError::NonPositiveRow { row: k });
        }
    }
    let mut mat: Vec<LexVec<I>> = rows.to_vec();
    let mut log = RowOpLog { ops: Vec::new() };
    let mut basis = SubgroupBasis { rows: Vec::new(), pivots: Vec::new(), pivot_cols: Vec::new() };
    let mut active: Vec<usize> = (0..rows.len()).collect();

    while !active.is_empty() {
        active.sort_by(|&a, &b| mat[a].cmp(&mat[b]));
        let col = active
            .iter()
            .filter_map(|&r| mat[r].leading_index())
            .min()
            .expect("active rows are nonzero");
        loop {
            active.sort_by(|&a, &b| mat[a].cmp(&mat[b]));
            let block: Vec<usize> = active.iter().copied().filter(|&r| !mat[r].coords[col].is_zero()).collect();
            let pivot = block[0];
            if block.iter().all(|&r| mat[r] == mat[pivot]) {
                break;
            }
            let pivot_row = mat[pivot].clone();
            let a_i = pivot_row.coords[col].clone();
            for &l in &block[1..] {
                let (q, r) = mat[l].coords[col].div_rem(&a_i);
                let factor = if !r.is_zero() {
                    -q
                } else {
                    let reduced = mat[l].add_scaled(&pivot_row, &-q.clone());
                    if reduced.is_positive() {
                        -q
                    } else {
                        I::one() - q
                    }
                };
                if factor.is_zero() {
                    continue;
                }
                mat[l] = mat[l].add_scaled(&pivot_row, &factor);
                log.ops.push(RowOp::AddRow { target: l, source: pivot, factor });
            }
        }
        let pivot = *active
            .iter()
            .find(|&&r| !mat[r].coords[col].is_zero())
            .expect("block is nonempty");
        basis.pivots.push(mat[pivot].coords[col].clone());
        basis.rows.push(mat[pivot].clone());
        basis.pivot_cols.push(col);
        active.retain(|&r| mat[r].coords[col].is_zero());
    }
    Ok((basis, log))
}
