//! Scalar abstractions shared by the lattice and series layers.
//!
//! Two families of scalars show up here: integers for value-group
//! coordinates ([`LatticeInt`]) and exact field elements for series
//! coefficients ([`Coeff`]). Field elements whose characteristic or symbol
//! context is only known at runtime (prime fields, residue towers) cannot
//! produce a context-free zero, so [`Coeff`] builds constants from an
//! existing element instead of through `num_traits::Zero`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Integer type usable as a value-group coordinate.
pub trait LatticeInt:
    num_integer::Integer
    + Signed
    + Clone
    + fmt::Debug
    + fmt::Display
    + FromPrimitive
    + ToPrimitive
    + std::hash::Hash
    + Send
    + Sync
    + 'static
{
}

impl<T> LatticeInt for T where
    T: num_integer::Integer
        + Signed
        + Clone
        + fmt::Debug
        + fmt::Display
        + FromPrimitive
        + ToPrimitive
        + std::hash::Hash
        + Send
        + Sync
        + 'static
{
}

/// Exact (or floating) field element used as a series coefficient.
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn from_i64_like(&self, n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negated(&self) -> Self;
    /// Multiplicative inverse; `None` for zero.
    fn inverse(&self) -> Option<Self>;

    fn minus(&self, other: &Self) -> Self {
        self.plus(&other.negated())
    }

    fn is_one(&self) -> bool {
        self.minus(&self.one_like()).is_zero()
    }

    fn from_bigint_like(&self, n: &BigInt) -> Self {
        match n.to_i64() {
            Some(v) => self.from_i64_like(v),
            None => {
                // base 2^32 expansion
                let base = self.from_i64_like(1 << 32);
                let (sign, digits) = n.to_u32_digits();
                let mut acc = self.zero_like();
                for d in digits.iter().rev() {
                    acc = acc.times(&base).plus(&self.from_i64_like(*d as i64));
                }
                if sign == num_bigint::Sign::Minus {
                    acc.negated()
                } else {
                    acc
                }
            }
        }
    }

    fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = self.one_like();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.times(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.times(&base);
            }
        }
        acc
    }

    /// Integer power; negative exponents invert. `None` for `0^(-k)`.
    fn powi(&self, e: i64) -> Option<Self> {
        if e >= 0 {
            Some(self.pow(e as u64))
        } else {
            self.inverse().map(|x| x.pow(e.unsigned_abs()))
        }
    }
}

/// Marker for the `num` field types that get a blanket [`Coeff`] impl.
pub trait FieldScalar: Num + Clone + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static {}

impl FieldScalar for f64 {}
impl FieldScalar for f32 {}
impl FieldScalar for BigRational {}
impl FieldScalar for Ratio<i64> {}

impl<T> Coeff for T
where
    T: FieldScalar + std::ops::Neg<Output = T>,
{
    fn zero_like(&self) -> Self {
        T::zero()
    }
    fn one_like(&self) -> Self {
        T::one()
    }
    fn from_i64_like(&self, n: i64) -> Self {
        T::from_i64(n).expect("integer constant representable")
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self.clone() + other.clone()
    }
    fn times(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }
    fn negated(&self) -> Self {
        -self.clone()
    }
    fn inverse(&self) -> Option<Self> {
        if Coeff::is_zero(self) {
            None
        } else {
            Some(T::one() / self.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blanket_rational_arithmetic() {
        let a = BigRational::new(2.into(), 3.into());
        assert_eq!(a.inverse().unwrap(), BigRational::new(3.into(), 2.into()));
        assert_eq!(a.powi(-2).unwrap(), BigRational::new(9.into(), 4.into()));
        assert!(a.minus(&a).is_zero());
        assert!(BigRational::from_integer(0.into()).inverse().is_none());
    }

    #[test]
    fn big_integer_constants() {
        let x = 1.5f64;
        let n: BigInt = BigInt::from(1u64 << 40) * 3 + 7;
        let expect = (3.0 * (1u64 << 40) as f64) + 7.0;
        assert_eq!(x.from_bigint_like(&n), expect);
        assert_eq!(x.from_bigint_like(&(-n)), -expect);
    }
}
