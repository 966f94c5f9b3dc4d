use std::cell::{Cell, RefCell};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{APFamily, Budget, Exp, HahnError, Segments};
use crate::scalar::Coeff;

pub type Term<C> = (Exp, C);

/// A generalized power series, shared and lazily enumerated.
#[derive(Clone)]
pub struct HahnStream<C> {
    node: Arc<Node<C>>,
}

struct Node<C> {
    rank: usize,
    kind: Kind<C>,
    memo: Mutex<Memo<C>>,
}

enum Kind<C> {
    Closed(Segments<C>),
    Sum(Vec<HahnStream<C>>),
    Product(HahnStream<C>, HahnStream<C>),
    /// `scale·t^shift·Σ_{k≥skip} src_k`
    Map { src: HahnStream<C>, skip: usize, scale: C, shift: Exp },
    /// `Σ_{i=i0}^{hi} c·i^e·r^i h^{i-i0}` for `h` with positive exponents
    PowerSeries { h: HahnStream<C>, rule: Rule<C> },
}

/// Coefficient rule `c·i^e·r^i` on `i0..=hi`, indexed from `i0`.
#[derive(Clone)]
struct Rule<C> {
    c: C,
    e: u32,
    r: C,
    i0: u64,
    hi: Option<u64>,
}

impl<C: Coeff> Rule<C> {
    fn in_range(&self, n: u64) -> bool {
        self.hi.is_none_or(|h| self.i0 + n <= h)
    }

    fn coeff(&self, n: u64) -> C {
        let i = self.i0 + n;
        self.c.times(&self.c.from_i64_like(i as i64).pow(self.e as u64)).times(&self.r.pow(i))
    }
}

struct Memo<C> {
    terms: Vec<Term<C>>,
    done: bool,
    poisoned: Option<HahnError>,
    cursor: Cursor<C>,
}

enum Cursor<C> {
    Closed { fin: Vec<Term<C>>, fin_pos: usize, fam_pos: Vec<u64> },
    Sum { pos: Vec<usize> },
    /// Heap of `(exponent, pending, i, j)` for the pair `a_i * b_j`. A pending
    /// entry has one factor term not yet fetched because it lay beyond the
    /// ceiling; its exponent is then only a lower bound. The missing factor is
    /// `a_i` when `j == 0` and `b_j` otherwise.
    Product { heap: BinaryHeap<Reverse<(Exp, bool, usize, usize)>>, started: bool },
    Map { pos: usize },
    /// `powers[n] = (h^n, position, coefficient of h^n)`
    PowerSeries { powers: Vec<(HahnStream<C>, usize, C)>, bound: Option<Exp>, nu_h: Option<Exp>, started: bool },
}

const BEYOND: &str = "no term up to the lex ceiling";

/// Ceiling stops are not cached: cursors only change after all child terms
/// they need are in hand, so a later call with a higher ceiling resumes.
fn is_ceiling(e: &HahnError) -> bool {
    matches!(e, HahnError::Inconclusive(m) if m.starts_with(BEYOND))
}

enum Fetched<C> {
    Term(Term<C>),
    End,
    Beyond,
}

struct Meter<'a> {
    budget: &'a Budget,
    work: Cell<u64>,
    /// Ceiling for the node being advanced; factors of a product see it
    /// shifted by the other factor's lead.
    ceiling: RefCell<Option<Exp>>,
}

impl Meter<'_> {
    fn new(budget: &Budget) -> Meter<'_> {
        Meter { budget, work: Cell::new(0), ceiling: RefCell::new(budget.lex_ceiling.clone()) }
    }

    fn shifted<R>(&self, by: Option<&Exp>, f: impl FnOnce() -> R) -> R {
        let old = self.ceiling.borrow().clone();
        let new = match (&old, by) {
            (Some(c), Some(d)) => Some(c.sub(d)),
            _ => None,
        };
        *self.ceiling.borrow_mut() = new;
        let r = f();
        *self.ceiling.borrow_mut() = old;
        r
    }

    fn tick(&self) -> Result<(), HahnError> {
        let w = self.work.get() + 1;
        self.work.set(w);
        if w > self.budget.max_work {
            return Err(HahnError::Inconclusive(format!("enumeration work budget {} exhausted", self.budget.max_work)));
        }
        Ok(())
    }

    /// Stops a node once its next candidate exceeds the ceiling.
    fn check_ceiling(&self, next: &Exp) -> Result<(), HahnError> {
        match &*self.ceiling.borrow() {
            Some(c) if next > c => Err(self.beyond()),
            _ => Ok(()),
        }
    }

    fn beyond(&self) -> HahnError {
        let c = self.ceiling.borrow().as_ref().map(|c| c.to_string()).unwrap_or_default();
        HahnError::Inconclusive(format!("{BEYOND} {c} remains"))
    }
}

fn sum_opt<C: Coeff>(acc: Option<C>, c: C) -> Option<C> {
    Some(match acc {
        Some(a) => a.plus(&c),
        None => c,
    })
}

impl<C: Coeff> HahnStream<C> {
    fn from_kind(rank: usize, kind: Kind<C>) -> Self {
        let cursor = match &kind {
            Kind::Closed(s) => Cursor::Closed {
                fin: s.terms().iter().map(|(e, c)| (e.clone(), c.clone())).collect(),
                fin_pos: 0,
                fam_pos: s.families().iter().map(|f| f.lo()).collect(),
            },
            Kind::Sum(xs) => Cursor::Sum { pos: vec![0; xs.len()] },
            Kind::Product(..) => Cursor::Product { heap: BinaryHeap::new(), started: false },
            Kind::Map { .. } => Cursor::Map { pos: 0 },
            Kind::PowerSeries { .. } => {
                Cursor::PowerSeries { powers: Vec::new(), bound: None, nu_h: None, started: false }
            }
        };
        let memo = Memo { terms: Vec::new(), done: false, poisoned: None, cursor };
        HahnStream { node: Arc::new(Node { rank, kind, memo: Mutex::new(memo) }) }
    }

    pub fn from_segments(s: Segments<C>) -> Self {
        Self::from_kind(s.rank(), Kind::Closed(s))
    }

    pub fn zero(rank: usize) -> Self {
        Self::from_segments(Segments::zero(rank))
    }

    pub fn monomial(exp: Exp, c: C) -> Self {
        let rank = exp.len();
        Self::from_segments(Segments::new(rank, vec![(exp, c)], vec![]).expect("rank matches"))
    }

    pub fn one(rank: usize, one: C) -> Self {
        Self::monomial(Exp::zero(rank), one)
    }

    pub fn family(f: APFamily<C>) -> Self {
        let rank = f.rank();
        Self::from_segments(Segments::new(rank, vec![], vec![f]).expect("rank matches"))
    }

    pub fn rank(&self) -> usize {
        self.node.rank
    }

    /// Closed form, when the stream has one.
    pub fn closed(&self) -> Option<&Segments<C>> {
        match &self.node.kind {
            Kind::Closed(s) => Some(s),
            _ => None,
        }
    }

    /// Single term `c·t^e`, when the closed form is one.
    pub fn as_monomial(&self) -> Option<(&Exp, &C)> {
        self.closed().and_then(Segments::as_monomial)
    }

    fn check_rank(&self, other: &Self) {
        assert_eq!(self.rank(), other.rank(), "streams over different value groups");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_rank(other);
        if let (Some(a), Some(b)) = (self.closed(), other.closed()) {
            return Self::from_segments(a.add(b));
        }
        if self.closed().is_some_and(Segments::is_zero) {
            return other.clone();
        }
        if other.closed().is_some_and(Segments::is_zero) {
            return self.clone();
        }
        let mut parts = Vec::new();
        for s in [self, other] {
            match &s.node.kind {
                Kind::Sum(xs) => parts.extend(xs.iter().cloned()),
                _ => parts.push(s.clone()),
            }
        }
        Self::from_kind(self.rank(), Kind::Sum(parts))
    }

    pub fn neg(&self) -> Self {
        if let Some(s) = self.closed() {
            return Self::from_segments(s.neg());
        }
        let Some(proto) = self.proto() else {
            return self.clone();
        };
        self.mul_term(&Exp::zero(self.rank()), &proto.one_like().negated())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// `k·t^shift` times the stream.
    pub fn mul_term(&self, shift: &Exp, k: &C) -> Self {
        if k.is_zero() {
            return Self::zero(self.rank());
        }
        if let Some(s) = self.closed() {
            return Self::from_segments(s.mul_term(shift, k));
        }
        if let Kind::Map { src, skip, scale, shift: sh } = &self.node.kind {
            let kind = Kind::Map { src: src.clone(), skip: *skip, scale: scale.times(k), shift: sh.add(shift) };
            return Self::from_kind(self.rank(), kind);
        }
        Self::from_kind(self.rank(), Kind::Map { src: self.clone(), skip: 0, scale: k.clone(), shift: shift.clone() })
    }

    pub fn scale(&self, k: &C) -> Self {
        self.mul_term(&Exp::zero(self.rank()), k)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_rank(other);
        if let (Some(a), Some(b)) = (self.closed(), other.closed()) {
            if let Some(p) = a.mul_finite(b) {
                return Self::from_segments(p);
            }
        }
        if let Some((e, c)) = self.as_monomial() {
            return other.mul_term(e, c);
        }
        if let Some((e, c)) = other.as_monomial() {
            return self.mul_term(e, c);
        }
        if self.closed().is_some_and(Segments::is_zero) || other.closed().is_some_and(Segments::is_zero) {
            return Self::zero(self.rank());
        }
        Self::from_kind(self.rank(), Kind::Product(self.clone(), other.clone()))
    }

    /// Some coefficient of the stream, used to build constants.
    fn proto(&self) -> Option<C> {
        match &self.node.kind {
            Kind::Closed(s) => s.terms().values().next().cloned().or_else(|| s.families().first().map(|f| f.c().clone())),
            Kind::Sum(xs) => xs.iter().find_map(|x| x.proto()),
            Kind::Product(a, _) => a.proto(),
            Kind::Map { scale, .. } => Some(scale.clone()),
            Kind::PowerSeries { rule, .. } => Some(rule.c.clone()),
        }
    }

    /// Multiplicative inverse through the certified leading term.
    pub fn inv(&self, budget: &Budget) -> Result<Self, HahnError> {
        let Some((a, lc)) = self.lead(budget)? else {
            return Err(HahnError::NotInvertible);
        };
        let lc_inv = lc.inverse().ok_or(HahnError::NotInvertible)?;
        let neg_a = a.neg();
        if self.as_monomial().is_some() {
            return Ok(Self::monomial(neg_a, lc_inv));
        }
        // 1/x = q/(x·q) with x·q finite, so no infinite cancellation is enumerated
        if let Some((q, b)) = self.closed().and_then(Segments::annihilate) {
            return Ok(Self::from_segments(q).mul(&Self::from_segments(b).inv(budget)?));
        }
        let h = Self::from_kind(
            self.rank(),
            Kind::Map { src: self.clone(), skip: 1, scale: lc_inv.negated(), shift: neg_a.clone() },
        );
        let one = lc.one_like();
        let rule = Rule { c: one.clone(), e: 0, r: one, i0: 0, hi: None };
        let g = Self::from_kind(self.rank(), Kind::PowerSeries { h, rule });
        Ok(g.mul_term(&neg_a, &lc_inv))
    }

    /// `Σ_{i=i0}^{hi} c·i^e·r^i h^{i-i0}` for a stream `h` whose leading
    /// exponent is positive. Stays closed when `h` is a single term.
    #[allow(clippy::too_many_arguments)]
    pub fn power_series(
        h: &Self,
        c: &C,
        e: u32,
        r: &C,
        i0: u64,
        hi: Option<u64>,
        budget: &Budget,
    ) -> Result<Self, HahnError> {
        if let Some(x) = h.nu_t(budget)? {
            if !x.is_positive() {
                return Err(HahnError::InvalidFamily(format!("substituted series has non-positive order {x}")));
            }
        }
        if let Some((d, k)) = h.as_monomial() {
            // c·i^e·r^i k^{i-i0} t^{(i-i0)d} = (c k^{-i0})·i^e·(r k)^i t^{...}
            let kinv = k.inverse().expect("nonzero coefficient");
            let fam = APFamily::new(Exp::zero(h.rank()), d.clone(), i0, hi, c.times(&kinv.pow(i0)), e, r.times(k))?;
            return Ok(Self::family(fam));
        }
        let rule = Rule { c: c.clone(), e, r: r.clone(), i0, hi };
        Ok(Self::from_kind(h.rank(), Kind::PowerSeries { h: h.clone(), rule }))
    }

    /// Integer power; negative exponents go through [`HahnStream::inv`].
    pub fn pow(&self, k: &BigInt, budget: &Budget) -> Result<Self, HahnError> {
        let base = if k.is_negative() { self.inv(budget)? } else { self.clone() };
        let mut n = k.abs();
        if let Some((e, c)) = base.as_monomial() {
            let exp = e.scale(&n);
            let coef = c.pow(u64::try_from(&n).map_err(|_| HahnError::Inconclusive("exponent too large".into()))?);
            return Ok(Self::monomial(exp, coef));
        }
        let one = match base.proto() {
            Some(p) => p.one_like(),
            None if n.is_zero() => return Err(HahnError::NotInvertible),
            None => return Ok(Self::zero(self.rank())),
        };
        let mut acc = Self::one(self.rank(), one);
        let mut sq = base;
        let two = BigInt::from(2);
        while !n.is_zero() {
            if (&n % &two) == BigInt::from(1) {
                acc = acc.mul(&sq);
            }
            n /= &two;
            if !n.is_zero() {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }

    /// `Π images[i]^R[i]`, inverting where `R` is negative.
    pub fn monomial_image(r: &[BigInt], images: &[HahnStream<C>], one: &C, budget: &Budget) -> Result<Self, HahnError> {
        if r.len() != images.len() {
            return Err(HahnError::DimensionMismatch { expected: images.len(), found: r.len() });
        }
        let rank = images.first().map_or(0, |s| s.rank());
        let mut acc = Self::one(rank, one.one_like());
        for (k, img) in r.iter().zip(images) {
            if !k.is_zero() {
                acc = acc.mul(&img.pow(k, budget)?);
            }
        }
        Ok(acc)
    }

    /// The `k`-th term in enumeration order, `None` past the end.
    pub fn term(&self, k: usize, budget: &Budget) -> Result<Option<Term<C>>, HahnError> {
        let meter = Meter::new(budget);
        let t = self.term_metered(k, &meter)?;
        if let (Some((e, _)), Some(ceiling)) = (&t, &budget.lex_ceiling) {
            if e > ceiling {
                return Err(HahnError::Inconclusive(format!("term {e} lies above the lex ceiling {ceiling}")));
            }
        }
        Ok(t)
    }

    fn term_metered(&self, k: usize, meter: &Meter) -> Result<Option<Term<C>>, HahnError> {
        let mut memo = self.node.memo.lock().expect("stream memo poisoned");
        if let Some(t) = memo.terms.get(k) {
            return Ok(Some(t.clone()));
        }
        if let Some(err) = &memo.poisoned {
            return Err(err.clone());
        }
        while memo.terms.len() <= k && !memo.done {
            if memo.terms.len() >= meter.budget.max_terms {
                return Err(HahnError::Inconclusive(format!("stream exceeded {} terms", meter.budget.max_terms)));
            }
            match self.advance(&mut memo.cursor, meter) {
                Ok(Some(t)) => {
                    debug_assert!(memo.terms.last().is_none_or(|(e, _)| *e < t.0));
                    memo.terms.push(t);
                }
                Ok(None) => memo.done = true,
                Err(e) => {
                    if !is_ceiling(&e) {
                        memo.poisoned = Some(e.clone());
                    }
                    return Err(e);
                }
            }
        }
        Ok(memo.terms.get(k).cloned())
    }

    fn fetch(&self, k: usize, meter: &Meter) -> Result<Fetched<C>, HahnError> {
        match self.term_metered(k, meter) {
            Ok(Some(t)) => Ok(Fetched::Term(t)),
            Ok(None) => Ok(Fetched::End),
            Err(e) if is_ceiling(&e) => Ok(Fetched::Beyond),
            Err(e) => Err(e),
        }
    }

    fn advance(&self, cursor: &mut Cursor<C>, meter: &Meter) -> Result<Option<Term<C>>, HahnError> {
        match (&self.node.kind, cursor) {
            (Kind::Closed(s), Cursor::Closed { fin, fin_pos, fam_pos }) => loop {
                meter.tick()?;
                let mut heads: Vec<(usize, u64, Exp, C)> = Vec::new();
                for (k, f) in s.families().iter().enumerate() {
                    if let Some((i, c)) = f.next_nonzero(fam_pos[k]) {
                        fam_pos[k] = i;
                        heads.push((k, i, f.exponent(i), c));
                    } else {
                        fam_pos[k] = u64::MAX;
                    }
                }
                let fin_head = fin.get(*fin_pos);
                let best = heads.iter().map(|h| &h.2).chain(fin_head.map(|t| &t.0)).min().cloned();
                let Some(best) = best else {
                    return Ok(None);
                };
                meter.check_ceiling(&best)?;
                let mut sum = None;
                if let Some((e, c)) = fin_head {
                    if *e == best {
                        sum = sum_opt(sum, c.clone());
                        *fin_pos += 1;
                    }
                }
                for (k, i, e, c) in heads {
                    if e == best {
                        sum = sum_opt(sum, c);
                        fam_pos[k] = i + 1;
                    }
                }
                if let Some(c) = sum.filter(|c| !c.is_zero()) {
                    return Ok(Some((best, c)));
                }
            },
            (Kind::Sum(xs), Cursor::Sum { pos }) => loop {
                meter.tick()?;
                let mut heads = Vec::new();
                let mut blocked = false;
                for (k, x) in xs.iter().enumerate() {
                    match x.fetch(pos[k], meter)? {
                        Fetched::Term(t) => heads.push((k, t)),
                        Fetched::End => {}
                        Fetched::Beyond => blocked = true,
                    }
                }
                let Some(best) = heads.iter().map(|h| &h.1 .0).min().cloned() else {
                    return if blocked { Err(meter.beyond()) } else { Ok(None) };
                };
                meter.check_ceiling(&best)?;
                let mut sum = None;
                for (k, (e, c)) in heads {
                    if e == best {
                        sum = sum_opt(sum, c);
                        pos[k] += 1;
                    }
                }
                if let Some(c) = sum.filter(|c| !c.is_zero()) {
                    return Ok(Some((best, c)));
                }
            },
            (Kind::Product(a, b), Cursor::Product { heap, started }) => {
                if !*started {
                    let (x, y) = meter.shifted(None, || Ok::<_, HahnError>((a.term_metered(0, meter)?, b.term_metered(0, meter)?)))?;
                    *started = true;
                    if let (Some(x), Some(y)) = (x, y) {
                        heap.push(Reverse((x.0.add(&y.0), false, 0, 0)));
                    }
                }
                let lead = |s: &HahnStream<C>| s.node.memo.lock().expect("stream memo poisoned").terms.first().map(|t| t.0.clone());
                let (nu_a, nu_b) = (lead(a), lead(b));
                let ceiling = meter.ceiling.borrow().clone();
                // lower bound for a factor term beyond its shifted ceiling
                let past = |nu: &Option<Exp>, other: &Exp| {
                    ceiling.as_ref().zip(nu.as_ref()).map(|(c, nu)| c.sub(nu).add(other)).expect("beyond needs a ceiling")
                };
                loop {
                    meter.tick()?;
                    let Some(Reverse((best, pending, i, j))) = heap.peek().cloned() else {
                        return Ok(None);
                    };
                    meter.check_ceiling(&best)?;
                    if pending {
                        let got = if j == 0 {
                            meter.shifted(nu_b.as_ref(), || a.fetch(i, meter))?
                        } else {
                            meter.shifted(nu_a.as_ref(), || b.fetch(j, meter))?
                        };
                        match got {
                            // real entries tie before pending ones, so the next term lies past the ceiling
                            Fetched::Beyond => return Err(meter.beyond()),
                            Fetched::End => {
                                heap.pop();
                            }
                            Fetched::Term((e, _)) => {
                                let other = if j == 0 { b.term_metered(0, meter)? } else { a.term_metered(i, meter)? };
                                let other = other.expect("pushed index exists").0;
                                heap.pop();
                                heap.push(Reverse((e.add(&other), false, i, j)));
                            }
                        }
                        continue;
                    }
                    // fetch everything first so that an error leaves the heap intact
                    let due: Vec<(usize, usize)> = heap
                        .iter()
                        .filter(|Reverse((e, p, _, _))| *e == best && !*p)
                        .map(|Reverse((_, _, i, j))| (*i, *j))
                        .collect();
                    let mut steps = Vec::with_capacity(due.len());
                    for &(i, j) in &due {
                        let (ea, ca) = a.term_metered(i, meter)?.expect("pushed index exists");
                        let (eb, cb) = b.term_metered(j, meter)?.expect("pushed index exists");
                        let nb = match meter.shifted(nu_a.as_ref(), || b.fetch(j + 1, meter))? {
                            Fetched::Term(t) => Some((ea.add(&t.0), false)),
                            Fetched::End => None,
                            Fetched::Beyond => Some((past(&nu_a, &ea), true)),
                        };
                        let na = match j {
                            0 => match meter.shifted(nu_b.as_ref(), || a.fetch(i + 1, meter))? {
                                Fetched::Term(t) => Some((t.0.add(&eb), false)),
                                Fetched::End => None,
                                Fetched::Beyond => Some((past(&nu_b, &eb), true)),
                            },
                            _ => None,
                        };
                        steps.push((i, j, ca.times(&cb), na, nb));
                    }
                    for _ in &due {
                        heap.pop();
                    }
                    let mut sum = None;
                    for (i, j, c, na, nb) in steps {
                        sum = sum_opt(sum, c);
                        if let Some((e, p)) = nb {
                            heap.push(Reverse((e, p, i, j + 1)));
                        }
                        if let Some((e, p)) = na {
                            heap.push(Reverse((e, p, i + 1, 0)));
                        }
                    }
                    if let Some(c) = sum.filter(|c| !c.is_zero()) {
                        return Ok(Some((best, c)));
                    }
                }
            }
            (Kind::Map { src, skip, scale, shift }, Cursor::Map { pos }) => {
                meter.tick()?;
                let t = meter.shifted(Some(shift), || src.term_metered(skip + *pos, meter))?;
                *pos += 1;
                Ok(t.map(|(e, c)| (e.add(shift), c.times(scale))))
            }
            (Kind::PowerSeries { h, rule }, Cursor::PowerSeries { powers, bound, nu_h, started }) => {
                if !*started {
                    let first = h.term_metered(0, meter)?.map(|t| t.0);
                    *started = true;
                    powers.push((Self::one(self.rank(), rule.c.one_like()), 0, rule.coeff(0)));
                    *nu_h = first;
                    *bound = nu_h.clone();
                }
                loop {
                    meter.tick()?;
                    let mut heads = Vec::new();
                    let mut blocked = false;
                    for (k, (p, pos, coef)) in powers.iter().enumerate() {
                        if coef.is_zero() {
                            continue;
                        }
                        match p.fetch(*pos, meter)? {
                            Fetched::Term((e, c)) => heads.push((k, e, c.times(coef))),
                            Fetched::End => {}
                            Fetched::Beyond => blocked = true,
                        }
                    }
                    let best = heads.iter().map(|h| &h.1).min().cloned();
                    let n = powers.len() as u64;
                    if let (Some(nu), Some(b)) = (nu_h.as_ref(), bound.as_ref()) {
                        // h^n has no term below n·ν(h)
                        if rule.in_range(n) && best.as_ref().is_none_or(|x| b <= x) {
                            meter.check_ceiling(b)?;
                            let next = powers.last().expect("power 0").0.mul(h);
                            powers.push((next, 0, rule.coeff(n)));
                            *bound = Some(b.add(nu));
                            continue;
                        }
                    }
                    let Some(best) = best else {
                        return if blocked { Err(meter.beyond()) } else { Ok(None) };
                    };
                    meter.check_ceiling(&best)?;
                    let mut sum = None;
                    for (k, e, c) in heads {
                        if e == best {
                            sum = sum_opt(sum, c);
                            powers[k].1 += 1;
                        }
                    }
                    if let Some(c) = sum.filter(|c| !c.is_zero()) {
                        return Ok(Some((best, c)));
                    }
                }
            }
            _ => unreachable!("cursor matches its node kind"),
        }
    }

    /// Leading term, `None` for the zero series.
    pub fn lead(&self, budget: &Budget) -> Result<Option<Term<C>>, HahnError> {
        self.term(0, budget)
    }

    /// `ν_t`: exponent of the leading term, `None` standing for infinity.
    pub fn nu_t(&self, budget: &Budget) -> Result<Option<Exp>, HahnError> {
        Ok(self.lead(budget)?.map(|t| t.0))
    }

    /// Up to `n` leading terms; fewer when the stream ends.
    pub fn take(&self, n: usize, budget: &Budget) -> Result<Vec<Term<C>>, HahnError> {
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            match self.term(k, budget)? {
                Some(t) => out.push(t),
                None => break,
            }
        }
        Ok(out)
    }

    /// Removes a whole family tail at once, after checking that it agrees
    /// with the stream term by term from the leading term on.
    pub fn subtract_segment_limit(&self, family: &APFamily<C>, check: usize, budget: &Budget) -> Result<Self, HahnError> {
        let Some(s) = self.closed() else {
            return Err(HahnError::NoLimit("stream has no closed form".into()));
        };
        if family.rank() != self.rank() {
            return Err(HahnError::DimensionMismatch { expected: self.rank(), found: family.rank() });
        }
        let fam = HahnStream::family(family.clone());
        let ours = self.take(check, budget)?;
        let theirs = fam.take(check, budget)?;
        if ours.len() < theirs.len() || ours.iter().zip(&theirs).any(|(a, b)| a != b) {
            let at = ours.iter().zip(&theirs).position(|(a, b)| a != b).unwrap_or(ours.len());
            return Err(HahnError::NoLimit(format!("family disagrees with the stream at term {}", at + 1)));
        }
        let fam_closed = Segments::new(self.rank(), vec![], vec![family.clone()])?;
        Ok(Self::from_segments(s.add(&fam_closed.neg())))
    }

    /// Terms already enumerated.
    pub fn memoized(&self) -> Vec<Term<C>> {
        self.node.memo.lock().expect("stream memo poisoned").terms.clone()
    }
}

impl<C: Coeff> fmt::Display for HahnStream<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = self.closed() {
            return write!(f, "{s}");
        }
        let shown: Vec<String> = self.memoized().iter().map(|(e, c)| format!("{e}: {c}")).collect();
        write!(f, "lazy[{}, ...]", shown.join(", "))
    }
}

impl<C: Coeff> fmt::Debug for HahnStream<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HahnStream({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{GroundElem, GroundField};
    use num_rational::BigRational;

    fn v(x: &[i64]) -> Exp {
        Exp::from_ints(x)
    }

    fn f5(n: i64) -> GroundElem {
        GroundElem::int(GroundField::prime(5).unwrap(), n)
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn example_y2() -> HahnStream<GroundElem> {
        let fam = APFamily::new(v(&[0, 0, 1]), v(&[0, 0, 1]), 1, None, f5(1), 1, f5(1)).unwrap();
        HahnStream::family(fam).add(&HahnStream::monomial(v(&[0, 1, 0]), f5(1)))
    }

    #[test]
    fn nu_examples() {
        let b = Budget::default();
        assert_eq!(example_y2().nu_t(&b).unwrap(), Some(v(&[0, 0, 1])));
        assert_eq!(HahnStream::<GroundElem>::zero(3).nu_t(&b).unwrap(), None);
    }

    #[test]
    fn family_skips_multiples_of_p() {
        let b = Budget::default();
        let exps: Vec<Exp> = example_y2().take(6, &b).unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(exps, vec![v(&[0, 0, 1]), v(&[0, 0, 2]), v(&[0, 0, 3]), v(&[0, 0, 4]), v(&[0, 0, 6]), v(&[0, 0, 7])]);
    }

    #[test]
    fn negating_a_scaled_lazy_stream() {
        let b = Budget::default();
        let lazy = HahnStream::from_segments(Segments::new(1, vec![(v(&[0]), q(1)), (v(&[1]), q(1))], vec![]).unwrap())
            .inv(&b)
            .unwrap()
            .scale(&q(3));
        assert!(lazy.closed().is_none());
        let first: Vec<_> = lazy.neg().take(3, &b).unwrap();
        assert_eq!(first, vec![(v(&[0]), q(-3)), (v(&[1]), q(3)), (v(&[2]), q(-3))]);
        assert!(lazy.sub(&lazy).take(3, &Budget { max_terms: 8, ..b.clone() }).is_err());
    }

    #[test]
    fn arithmetic_examples() {
        let b = Budget::default();
        let p = HahnStream::monomial(v(&[0, 0, 1]), q(1)).mul(&HahnStream::monomial(v(&[1, 0, -2]), q(1)));
        assert_eq!(p.take(5, &b).unwrap(), vec![(v(&[1, 0, -1]), q(1))]);
        let fam = APFamily::new(v(&[0, 0, 1]), v(&[0, 0, 1]), 1, None, f5(1), 1, f5(1)).unwrap();
        let d = example_y2().sub(&HahnStream::family(fam));
        assert_eq!(d.take(3, &b).unwrap(), vec![(v(&[0, 1, 0]), f5(1))]);
        let s = example_y2();
        assert!(s.add(&s.neg()).take(2, &b).unwrap().is_empty());
    }

    #[test]
    fn lazy_sum_cancels_termwise() {
        let b = Budget::default();
        // (1 + t)^2 - 1 - 2t = t^2 via a product node
        let s = HahnStream::monomial(v(&[0]), q(1)).add(&HahnStream::monomial(v(&[1]), q(1)));
        let fam = APFamily::new(v(&[1]), v(&[1]), 1, None, q(1), 0, q(1)).unwrap();
        let g = s.add(&HahnStream::family(fam));
        let sq = g.mul(&g);
        assert!(sq.closed().is_none());
        let terms = sq.take(4, &b).unwrap();
        // (1 + 2t + t^2 + t^3 + ...)^2 = 1 + 4t + 6t^2 + 6t^3 + ...
        assert_eq!(terms, vec![(v(&[0]), q(1)), (v(&[1]), q(4)), (v(&[2]), q(6)), (v(&[3]), q(6))]);
    }

    #[test]
    fn inverse_of_geometric_series() {
        let b = Budget::default();
        let fam = APFamily::new(v(&[0]), v(&[1]), 0, None, q(1), 0, q(1)).unwrap();
        let s = HahnStream::family(fam);
        let inv = s.inv(&b).unwrap();
        assert_eq!(inv.take(5, &b).unwrap(), vec![(v(&[0]), q(1)), (v(&[1]), q(-1))]);
        let prod = s.mul(&inv);
        assert_eq!(prod.take(1, &b).unwrap(), vec![(v(&[0]), q(1))]);
    }

    #[test]
    fn power_series_closed_and_lazy_agree() {
        let b = Budget::default();
        let h = HahnStream::monomial(v(&[0, 1]), q(2));
        let closed = HahnStream::power_series(&h, &q(1), 1, &q(1), 1, None, &b).unwrap();
        assert!(closed.closed().is_some());
        let got = closed.take(4, &b).unwrap();
        // i·2^{i-1} t^{(0,i-1)}
        assert_eq!(got, vec![(v(&[0, 0]), q(1)), (v(&[0, 1]), q(4)), (v(&[0, 2]), q(12)), (v(&[0, 3]), q(32))]);
        // a second term far above forces the lazy path; the prefix is unchanged
        let hl = h.add(&HahnStream::monomial(v(&[1, 0]), q(1)));
        let lazy = HahnStream::power_series(&hl, &q(1), 1, &q(1), 1, None, &b).unwrap();
        assert!(lazy.closed().is_none());
        assert_eq!(lazy.take(4, &b).unwrap(), got);
        assert!(HahnStream::power_series(&HahnStream::monomial(v(&[0, 0]), q(1)), &q(1), 0, &q(1), 0, None, &b).is_err());
    }

    #[test]
    fn monomial_image_examples() {
        let b = Budget::default();
        let one = f5(1);
        let x1 = HahnStream::monomial(v(&[0, 0, 1]), f5(1));
        let images = vec![x1.clone(), x1.clone(), x1.clone(), x1];
        let r: Vec<BigInt> = [4, 0, 0, 0].iter().map(|&k| BigInt::from(k)).collect();
        let img = HahnStream::monomial_image(&r, &images, &one, &b).unwrap();
        assert_eq!(img.take(2, &b).unwrap(), vec![(v(&[0, 0, 4]), f5(1))]);
    }

    #[test]
    fn limit_subtraction() {
        let b = Budget::default();
        let fam = APFamily::new(v(&[0, 0, 1]), v(&[0, 0, 1]), 1, None, f5(1), 1, f5(1)).unwrap();
        let rest = example_y2().subtract_segment_limit(&fam, 8, &b).unwrap();
        assert_eq!(rest.nu_t(&b).unwrap(), Some(v(&[0, 1, 0])));
        let wrong = APFamily::new(v(&[0, 0, 1]), v(&[0, 0, 1]), 1, None, f5(2), 1, f5(1)).unwrap();
        assert!(matches!(example_y2().subtract_segment_limit(&wrong, 8, &b), Err(HahnError::NoLimit(_))));
        let whole = HahnStream::family(fam.clone());
        assert!(whole.subtract_segment_limit(&fam, 8, &b).unwrap().nu_t(&b).unwrap().is_none());
    }

    #[test]
    fn budgets_are_reported() {
        let tight = Budget { max_terms: 3, ..Budget::default() };
        assert!(matches!(example_y2().term(5, &tight), Err(HahnError::Inconclusive(_))));
        let ceiling = Budget { lex_ceiling: Some(v(&[0, 0, 2])), ..Budget::default() };
        assert!(example_y2().term(1, &ceiling).is_ok());
        assert!(matches!(example_y2().term(2, &ceiling), Err(HahnError::Inconclusive(_))));
        // infinite cancellation never certifies a term
        let fam = APFamily::new(v(&[1]), v(&[1]), 1, None, q(1), 0, q(1)).unwrap();
        let lazy = HahnStream::family(fam.clone()).mul(&HahnStream::one(1, q(1)).add(&HahnStream::family(fam.clone())));
        let starved = Budget { max_work: 50, ..Budget::default() };
        let never = lazy.sub(&lazy.scale(&q(1)).mul(&HahnStream::one(1, q(1))));
        assert!(matches!(never.lead(&starved), Err(HahnError::Inconclusive(_))));
    }
}
