use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::GroundField;

/// Exponent vector of a monomial in the tower symbols, trailing zeros
/// trimmed. The derived order on trimmed vectors is lex with symbol 0 most
/// significant.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn new(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    pub fn var(k: usize, e: u32) -> Self {
        let mut v = vec![0; k + 1];
        v[k] = e;
        Monomial::new(v)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn exp(&self, k: usize) -> u32 {
        self.0.get(k).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        Monomial::new((0..n).map(|k| self.exp(k) + other.exp(k)).collect())
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        if other.0.len() > self.0.len() && other.0[self.0.len()..].iter().any(|&e| e > 0) {
            return None;
        }
        let mut out = self.0.clone();
        for (k, &e) in other.0.iter().enumerate() {
            if out[k] < e {
                return None;
            }
            out[k] -= e;
        }
        Some(Monomial::new(out))
    }

    fn without(&self, k: usize) -> Monomial {
        let mut v = self.0.clone();
        if k < v.len() {
            v[k] = 0;
        }
        Monomial::new(v)
    }
}

/// Sparse multivariate polynomial over a ground field.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly {
    field: GroundField,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero(field: GroundField) -> Self {
        Poly { field, terms: BTreeMap::new() }
    }

    pub fn constant(field: GroundField, c: BigRational) -> Self {
        let c = field.reduce(&c).expect("constant reduces");
        let mut p = Poly::zero(field);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn one(field: GroundField) -> Self {
        Poly::constant(field, BigRational::one())
    }

    pub fn var(field: GroundField, k: usize) -> Self {
        let mut p = Poly::zero(field);
        p.terms.insert(Monomial::var(k, 1), BigRational::one());
        p
    }

    pub fn from_terms(field: GroundField, terms: impl IntoIterator<Item = (Monomial, BigRational)>) -> Self {
        let mut p = Poly::zero(field);
        for (m, c) in terms {
            let c = field.reduce(&c).expect("coefficient reduces");
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let field = self.field;
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = field.add(e.get(), &c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn field(&self) -> GroundField {
        self.field
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&Monomial::one()).is_some_and(|c| c.is_one())
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        if self.is_zero() {
            Some(BigRational::zero())
        } else if self.is_constant() {
            self.terms.get(&Monomial::one()).cloned()
        } else {
            None
        }
    }

    /// Leading term under lex order.
    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn symbols(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (k, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    out.insert(k);
                }
            }
        }
        out
    }

    pub fn degree_in(&self, k: usize) -> u32 {
        self.terms.keys().map(|m| m.exp(k)).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            field: self.field,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), self.field.neg(c))).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.field);
        }
        Poly {
            field: self.field,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), self.field.mul(a, c))).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &BigRational) -> Poly {
        let mut out = Poly::zero(self.field);
        for (a, x) in &self.terms {
            out.add_term(a.mul(m), self.field.mul(x, c));
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.field);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                out.add_term(a.mul(b), self.field.mul(x, y));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(self.field);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Scale to leading coefficient 1.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => self.clone(),
            Some((_, c)) => {
                let inv = self.field.inv(c).expect("nonzero leading coefficient");
                self.scale(&inv)
            }
        }
    }

    /// Exact quotient, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (dm, dc) = d.leading()?;
        let dc_inv = self.field.inv(dc)?;
        let mut rest = self.clone();
        let mut q = Poly::zero(self.field);
        while let Some((rm, rc)) = rest.leading() {
            let m = rm.div(dm)?;
            let c = self.field.mul(rc, &dc_inv);
            rest = rest.sub(&d.mul_monomial(&m, &c));
            q.add_term(m, c);
        }
        Some(q)
    }

    /// Coefficients as a polynomial in symbol `k`.
    fn coeffs_in(&self, k: usize) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.exp(k))
                .or_insert_with(|| Poly::zero(self.field))
                .add_term(m.without(k), c.clone());
        }
        out
    }

    fn lead_coeff_in(&self, k: usize) -> (u32, Poly) {
        self.coeffs_in(k).into_iter().next_back().unwrap_or((0, Poly::zero(self.field)))
    }

    /// Pseudo-remainder of `self` by `b` as polynomials in symbol `k`.
    fn prem(&self, b: &Poly, k: usize) -> Poly {
        let (db, lcb) = b.lead_coeff_in(k);
        let mut r = self.clone();
        while !r.is_zero() {
            let (dr, lcr) = r.lead_coeff_in(k);
            if dr < db {
                break;
            }
            let shift = Monomial::var(k, dr - db);
            let t = b.mul(&lcr).mul_monomial(&shift, &BigRational::one());
            r = r.mul(&lcb).sub(&t);
        }
        r
    }

    /// Content in symbol `k` (a polynomial free of `k`) and primitive part.
    fn content_pp(&self, k: usize) -> (Poly, Poly) {
        let mut content = Poly::zero(self.field);
        for c in self.coeffs_in(k).values() {
            content = Poly::gcd(&content, c);
            if content.is_one() {
                break;
            }
        }
        let pp = self.div_exact(&content).expect("content divides");
        (content, pp)
    }

    /// Monic greatest common divisor (recursive primitive remainder
    /// sequences on the largest symbol present).
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() {
            return b.monic();
        }
        if b.is_zero() {
            return a.monic();
        }
        if a.is_constant() || b.is_constant() {
            return Poly::one(a.field);
        }
        let k = a.symbols().into_iter().chain(b.symbols()).max().expect("non-constant");
        let (ca, pa) = a.content_pp(k);
        let (cb, pb) = b.content_pp(k);
        let c = Poly::gcd(&ca, &cb);
        let (mut x, mut y) = if pa.degree_in(k) >= pb.degree_in(k) { (pa, pb) } else { (pb, pa) };
        while !y.is_zero() {
            if y.degree_in(k) == 0 {
                x = Poly::one(a.field);
                break;
            }
            let r = x.prem(&y, k);
            x = y;
            y = if r.is_zero() { r } else { r.content_pp(k).1 };
        }
        let g = if x.degree_in(k) == 0 { Poly::one(a.field) } else { x.content_pp(k).1 };
        c.mul(&g).monic()
    }
}
