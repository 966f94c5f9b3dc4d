//! Exact coefficient fields: the ground field `k` (the rationals or a prime
//! field) and the residue tower `k(w_1, ..., w_d)` of rational functions in
//! adjoined transcendental symbols.

mod poly;
mod tower;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

pub use poly::{Monomial, Poly};
pub use tower::{ResidueTower, SymbolTable, TowerElem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoeffError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("symbol {0} already adjoined")]
    DuplicateSymbol(String),
    #[error("unknown symbol {0}")]
    UnknownSymbol(String),
    #[error("denominator divisible by the characteristic {0}")]
    NotInvertibleModP(u64),
}

/// The ground field `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum GroundField {
    Rationals,
    Prime(u64),
}

impl GroundField {
    /// `F_p`; primality is checked by trial division.
    pub fn prime(p: u64) -> Result<Self, CoeffError> {
        if p < 2 {
            return Err(CoeffError::NotPrime(p));
        }
        let mut d = 2u64;
        while d * d <= p {
            if p % d == 0 {
                return Err(CoeffError::NotPrime(p));
            }
            d += 1;
        }
        Ok(GroundField::Prime(p))
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            GroundField::Rationals => 0,
            GroundField::Prime(p) => *p,
        }
    }

    /// Canonical representative: reduced fraction for `Q`, an integer in
    /// `[0, p)` for `F_p`.
    pub fn reduce(&self, x: &BigRational) -> Result<BigRational, CoeffError> {
        match self {
            GroundField::Rationals => Ok(x.clone()),
            GroundField::Prime(p) => {
                let p_big = BigInt::from(*p);
                let num = x.numer().mod_floor(&p_big);
                let den = x.denom().mod_floor(&p_big);
                if den.is_zero() {
                    return Err(CoeffError::NotInvertibleModP(*p));
                }
                let inv = mod_inverse(&den, &p_big);
                Ok(BigRational::from_integer((num * inv).mod_floor(&p_big)))
            }
        }
    }

    pub fn from_int(&self, n: i64) -> BigRational {
        self.reduce(&BigRational::from_integer(n.into())).expect("integers reduce")
    }

    pub fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        self.norm(a + b)
    }

    pub fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        self.norm(a - b)
    }

    pub fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        self.norm(a * b)
    }

    pub fn neg(&self, a: &BigRational) -> BigRational {
        self.norm(-a)
    }

    pub fn inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            return None;
        }
        match self {
            GroundField::Rationals => Some(a.recip()),
            GroundField::Prime(p) => {
                let p_big = BigInt::from(*p);
                Some(BigRational::from_integer(mod_inverse(&a.to_integer(), &p_big)))
            }
        }
    }

    fn norm(&self, x: BigRational) -> BigRational {
        match self {
            GroundField::Rationals => x,
            GroundField::Prime(p) => {
                // operands are already integers in [0, p)
                let p_big = BigInt::from(*p);
                BigRational::from_integer(x.to_integer().mod_floor(&p_big))
            }
        }
    }
}

impl fmt::Display for GroundField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundField::Rationals => write!(f, "rationals"),
            GroundField::Prime(p) => write!(f, "prime {p}"),
        }
    }
}

fn mod_inverse(a: &BigInt, p: &BigInt) -> BigInt {
    let e = num_integer::Integer::extended_gcd(&a.mod_floor(p), p);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(p)
}

/// Formats a ground-field scalar; rationals print as `a/b`.
pub(crate) fn fmt_scalar(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// An element of the ground field carrying its field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroundElem {
    field: GroundField,
    value: BigRational,
}

impl GroundElem {
    pub fn new(field: GroundField, value: BigRational) -> Result<Self, CoeffError> {
        Ok(GroundElem { field, value: field.reduce(&value)? })
    }

    pub fn int(field: GroundField, n: i64) -> Self {
        GroundElem { field, value: field.from_int(n) }
    }

    pub fn field(&self) -> GroundField {
        self.field
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }
}

impl fmt::Display for GroundElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_scalar(&self.value))
    }
}

impl crate::scalar::Coeff for GroundElem {
    fn zero_like(&self) -> Self {
        GroundElem { field: self.field, value: BigRational::zero() }
    }
    fn one_like(&self) -> Self {
        GroundElem { field: self.field, value: BigRational::one() }
    }
    fn from_i64_like(&self, n: i64) -> Self {
        GroundElem::int(self.field, n)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.value)
    }
    fn plus(&self, other: &Self) -> Self {
        GroundElem { field: self.field, value: self.field.add(&self.value, &other.value) }
    }
    fn times(&self, other: &Self) -> Self {
        GroundElem { field: self.field, value: self.field.mul(&self.value, &other.value) }
    }
    fn negated(&self) -> Self {
        GroundElem { field: self.field, value: self.field.neg(&self.value) }
    }
    fn inverse(&self) -> Option<Self> {
        self.field.inv(&self.value).map(|value| GroundElem { field: self.field, value })
    }
}

/// Small helper used by printers: is this scalar negative (only in `Q`)?
pub(crate) fn scalar_is_negative(x: &BigRational) -> bool {
    x.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Coeff;

    #[test]
    fn prime_check() {
        assert!(GroundField::prime(5).is_ok());
        assert!(GroundField::prime(7919).is_ok());
        assert_eq!(GroundField::prime(1), Err(CoeffError::NotPrime(1)));
        assert_eq!(GroundField::prime(91), Err(CoeffError::NotPrime(91)));
    }

    #[test]
    fn f5_inverse_of_two_is_three() {
        let f5 = GroundField::prime(5).unwrap();
        let two = GroundElem::int(f5, 2);
        assert_eq!(two.inverse().unwrap(), GroundElem::int(f5, 3));
        assert!(GroundElem::int(f5, 5).is_zero());
        assert!(GroundElem::int(f5, 10).inverse().is_none());
    }

    #[test]
    fn reduce_fraction_mod_p() {
        let f5 = GroundField::prime(5).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(f5.reduce(&half).unwrap(), BigRational::from_integer(3.into()));
        let fifth = BigRational::new(1.into(), 5.into());
        assert_eq!(f5.reduce(&fifth), Err(CoeffError::NotInvertibleModP(5)));
    }
}
