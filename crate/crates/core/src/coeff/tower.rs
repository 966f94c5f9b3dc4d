use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{fmt_scalar, scalar_is_negative, CoeffError, GroundField, Poly};

/// Names of the tower symbols `w_1, ..., w_d`; index `k` is symbol `k`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
}

impl SymbolTable {
    pub fn new(names: Vec<String>) -> Self {
        SymbolTable { names }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, k: usize) -> String {
        self.names.get(k).cloned().unwrap_or_else(|| format!("w{}", k + 1))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Element of `k(w_1, ..., w_d)` kept in canonical form: numerator and
/// denominator coprime, denominator monic under lex order, zero as `0/1`.
#[derive(Clone, Debug)]
pub struct TowerElem {
    num: Poly,
    den: Poly,
    symbols: Arc<SymbolTable>,
}

impl PartialEq for TowerElem {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }
}

impl Eq for TowerElem {}

impl Hash for TowerElem {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.num.hash(state);
        self.den.hash(state);
    }
}

impl TowerElem {
    pub fn from_poly(num: Poly, symbols: Arc<SymbolTable>) -> Self {
        let field = num.field();
        TowerElem { num, den: Poly::one(field), symbols }
    }

    pub fn constant(field: GroundField, c: BigRational, symbols: Arc<SymbolTable>) -> Self {
        Self::from_poly(Poly::constant(field, c), symbols)
    }

    pub fn int(field: GroundField, n: i64, symbols: Arc<SymbolTable>) -> Self {
        Self::constant(field, BigRational::from_integer(n.into()), symbols)
    }

    pub fn symbol(field: GroundField, k: usize, symbols: Arc<SymbolTable>) -> Self {
        Self::from_poly(Poly::var(field, k), symbols)
    }

    /// `num / den` in canonical form.
    pub fn ratio(num: Poly, den: Poly, symbols: Arc<SymbolTable>) -> Result<Self, CoeffError> {
        if den.is_zero() {
            return Err(CoeffError::DivisionByZero);
        }
        Ok(Self::normalized(num, den, symbols))
    }

    fn normalized(num: Poly, den: Poly, symbols: Arc<SymbolTable>) -> Self {
        let field = num.field();
        if num.is_zero() {
            return TowerElem { num, den: Poly::one(field), symbols };
        }
        let (num, den) = if den.is_constant() {
            (num, den)
        } else {
            let g = Poly::gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
            }
        };
        let lc = den.leading().expect("nonzero denominator").1.clone();
        if lc.is_one() {
            return TowerElem { num, den, symbols };
        }
        let inv = field.inv(&lc).expect("nonzero");
        TowerElem { num: num.scale(&inv), den: den.scale(&inv), symbols }
    }

    pub fn field(&self) -> GroundField {
        self.num.field()
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn symbol_table(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn with_symbols(&self, symbols: Arc<SymbolTable>) -> Self {
        TowerElem { num: self.num.clone(), den: self.den.clone(), symbols }
    }

    /// Symbols appearing in the canonical form.
    pub fn symbols_used(&self) -> BTreeSet<usize> {
        let mut s = self.num.symbols();
        s.extend(self.den.symbols());
        s
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    /// Ground-field value when the element is a constant.
    pub fn constant_value(&self) -> Option<BigRational> {
        if self.is_constant() {
            let n = self.num.constant_value()?;
            let d = self.den.constant_value()?;
            Some(self.field().mul(&n, &self.field().inv(&d)?))
        } else {
            None
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            if self.den.is_one() {
                return TowerElem { num: self.num.add(&other.num), den: self.den.clone(), symbols: self.symbols.clone() };
            }
            return Self::normalized(self.num.add(&other.num), self.den.clone(), self.symbols.clone());
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        Self::normalized(num, self.den.mul(&other.den), self.symbols.clone())
    }

    pub fn neg(&self) -> Self {
        TowerElem { num: self.num.neg(), den: self.den.clone(), symbols: self.symbols.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.den.is_one() && other.den.is_one() {
            return TowerElem { num: self.num.mul(&other.num), den: self.den.clone(), symbols: self.symbols.clone() };
        }
        Self::normalized(self.num.mul(&other.num), self.den.mul(&other.den), self.symbols.clone())
    }

    pub fn inv(&self) -> Result<Self, CoeffError> {
        if self.num.is_zero() {
            return Err(CoeffError::DivisionByZero);
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone(), self.symbols.clone()))
    }

    pub fn div(&self, other: &Self) -> Result<Self, CoeffError> {
        Ok(self.mul(&other.inv()?))
    }

    /// `x ∈ k(allowed)`, decided on the symbols of the canonical form.
    pub fn is_in_subfield(&self, allowed: &BTreeSet<usize>) -> bool {
        self.symbols_used().is_subset(allowed)
    }

    /// If `self` generates `k(allowed)(w)` over `k(allowed)` for a single
    /// symbol `w` outside `allowed` (numerator and denominator of degree at
    /// most one in `w`), returns `w`.
    pub fn fresh_generator(&self, allowed: &BTreeSet<usize>) -> Option<usize> {
        let extra: Vec<usize> = self.symbols_used().difference(allowed).copied().collect();
        match extra.as_slice() {
            [w] if self.num.degree_in(*w) <= 1 && self.den.degree_in(*w) <= 1 => Some(*w),
            _ => None,
        }
    }

    fn fmt_poly(&self, p: &Poly, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if p.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in p.terms().rev().enumerate() {
            let neg = scalar_is_negative(c);
            let mag = if neg { -c.clone() } else { c.clone() };
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let mut factors = Vec::new();
            if !mag.is_one() || m.is_one() {
                factors.push(fmt_scalar(&mag));
            }
            for (s, &e) in m.exps().iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.symbols.name(s)),
                    _ => factors.push(format!("{}^{}", self.symbols.name(s), e)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Display for TowerElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return self.fmt_poly(&self.num, f);
        }
        let wrap_num = self.num.len() > 1 || self.num.constant_value().is_some_and(|c| c.is_negative());
        if wrap_num {
            write!(f, "(")?;
        }
        self.fmt_poly(&self.num, f)?;
        if wrap_num {
            write!(f, ")")?;
        }
        let single = self.den.len() == 1 && self.den.leading().is_some_and(|(m, c)| {
            c.is_one() && m.exps().iter().filter(|&&e| e > 0).count() == 1 && m.exps().iter().all(|&e| e <= 1)
        });
        if single {
            write!(f, "/")?;
            self.fmt_poly(&self.den, f)
        } else {
            write!(f, "/(")?;
            self.fmt_poly(&self.den, f)?;
            write!(f, ")")
        }
    }
}

impl crate::scalar::Coeff for TowerElem {
    fn zero_like(&self) -> Self {
        TowerElem::from_poly(Poly::zero(self.field()), self.symbols.clone())
    }
    fn one_like(&self) -> Self {
        TowerElem::from_poly(Poly::one(self.field()), self.symbols.clone())
    }
    fn from_i64_like(&self, n: i64) -> Self {
        TowerElem::int(self.field(), n, self.symbols.clone())
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }
    fn plus(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn times(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn negated(&self) -> Self {
        self.neg()
    }
    fn inverse(&self) -> Option<Self> {
        self.inv().ok()
    }
    fn minus(&self, other: &Self) -> Self {
        self.sub(other)
    }
}

/// The residue field presentation `k(w_{i_1}, ..., w_{i_r})` grown one
/// adjoined symbol at a time.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResidueTower {
    adjoined: Vec<usize>,
}

impl ResidueTower {
    pub fn new() -> Self {
        ResidueTower::default()
    }

    pub fn adjoin(&mut self, symbol: usize, table: &SymbolTable) -> Result<(), CoeffError> {
        if self.adjoined.contains(&symbol) {
            return Err(CoeffError::DuplicateSymbol(table.name(symbol)));
        }
        self.adjoined.push(symbol);
        Ok(())
    }

    pub fn adjoined(&self) -> &[usize] {
        &self.adjoined
    }

    pub fn allowed(&self) -> BTreeSet<usize> {
        self.adjoined.iter().copied().collect()
    }

    pub fn contains(&self, x: &TowerElem) -> bool {
        x.is_in_subfield(&self.allowed())
    }
}

#[cfg(test)]
fn monomial_elem(field: GroundField, exps: Vec<u32>, symbols: Arc<SymbolTable>) -> TowerElem {
    TowerElem::from_poly(Poly::from_terms(field, [(super::Monomial::new(exps), BigRational::one())]), symbols)
}
