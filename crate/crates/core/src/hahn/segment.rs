use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{Exp, HahnError};
use crate::scalar::Coeff;

/// Arithmetic-progression family `Σ_{i=lo}^{hi} c·i^e·r^i t^{start + (i-lo)·step}`.
#[derive(Clone, Debug, PartialEq)]
pub struct APFamily<C> {
    start: Exp,
    step: Exp,
    lo: u64,
    hi: Option<u64>,
    c: C,
    e: u32,
    r: C,
}

impl<C: Coeff> APFamily<C> {
    pub fn new(start: Exp, step: Exp, lo: u64, hi: Option<u64>, c: C, e: u32, r: C) -> Result<Self, HahnError> {
        if start.len() != step.len() {
            return Err(HahnError::DimensionMismatch { expected: start.len(), found: step.len() });
        }
        if !step.is_positive() {
            return Err(HahnError::InvalidFamily(format!("step {step} is not lexicographically positive")));
        }
        if hi.is_some_and(|h| h < lo) {
            return Err(HahnError::InvalidFamily(format!("empty index range {lo}..{}", hi.unwrap())));
        }
        if c.is_zero() || r.is_zero() {
            return Err(HahnError::InvalidFamily("zero coefficient rule".into()));
        }
        Ok(APFamily { start, step, lo, hi, c, e, r })
    }

    pub fn start(&self) -> &Exp {
        &self.start
    }

    pub fn step(&self) -> &Exp {
        &self.step
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> Option<u64> {
        self.hi
    }

    pub fn c(&self) -> &C {
        &self.c
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn r(&self) -> &C {
        &self.r
    }

    pub fn rank(&self) -> usize {
        self.start.len()
    }

    pub fn is_infinite(&self) -> bool {
        self.hi.is_none()
    }

    pub fn in_range(&self, i: u64) -> bool {
        i >= self.lo && self.hi.is_none_or(|h| i <= h)
    }

    pub fn exponent(&self, i: u64) -> Exp {
        self.start.add_scaled(&self.step, &BigInt::from(i as i128 - self.lo as i128))
    }

    /// `c·i^e·r^i`, possibly zero in positive characteristic.
    pub fn coeff(&self, i: u64) -> C {
        let idx = self.c.from_i64_like(i as i64).pow(self.e as u64);
        self.c.times(&idx).times(&self.r.pow(i))
    }

    /// Index whose exponent is `x`, if any.
    pub fn index_of(&self, x: &Exp) -> Option<u64> {
        let diff = x.sub(&self.start);
        let li = self.step.leading_index()?;
        let s = &self.step.coords()[li];
        let d = &diff.coords()[li];
        if (d % s) != BigInt::zero() {
            return None;
        }
        let k = d / s;
        if k.is_negative() || self.start.add_scaled(&self.step, &k) != *x {
            return None;
        }
        let i = self.lo.checked_add(k.to_u64()?)?;
        self.in_range(i).then_some(i)
    }

    /// First index `>= i` in range with a nonzero coefficient.
    pub fn next_nonzero(&self, mut i: u64) -> Option<(u64, C)> {
        i = i.max(self.lo);
        // zero coefficients only come from i^e vanishing, never twice in a row
        for _ in 0..3 {
            if !self.in_range(i) {
                return None;
            }
            let c = self.coeff(i);
            if !c.is_zero() {
                return Some((i, c));
            }
            i += 1;
        }
        None
    }

    /// The part of the family with index `>= i0`.
    pub fn tail_from(&self, i0: u64) -> Option<Self> {
        let i0 = i0.max(self.lo);
        if !self.in_range(i0) {
            return None;
        }
        let mut t = self.clone();
        t.start = self.exponent(i0);
        t.lo = i0;
        Some(t)
    }

    /// Least upper bound question helper: the exponent difference `x - start`
    /// is positive on a coordinate before the step's leading index.
    pub fn lies_beyond(&self, x: &Exp) -> bool {
        let Some(li) = self.step.leading_index() else {
            return false;
        };
        let diff = x.sub(&self.start);
        for v in &diff.coords()[..li] {
            if v.is_positive() {
                return true;
            }
            if v.is_negative() {
                return false;
            }
        }
        false
    }

    pub fn neg(&self) -> Self {
        let mut f = self.clone();
        f.c = f.c.negated();
        f
    }

    /// `k·t^shift` times the family.
    pub fn mul_term(&self, shift: &Exp, k: &C) -> Self {
        let mut f = self.clone();
        f.start = f.start.add(shift);
        f.c = f.c.times(k);
        f
    }

    /// `(1 - r·t^step)^(e+1)` times an infinite family: finitely many terms,
    /// at indices `lo..=lo+e`.
    fn annihilated(&self) -> BTreeMap<Exp, C> {
        let m = self.e as u64 + 1;
        let neg_r = self.r.negated();
        let mut out = BTreeMap::new();
        for i in self.lo..self.lo + m {
            let mut acc = self.c.zero_like();
            let mut binom = BigInt::from(1);
            for j in 0..=(i - self.lo) {
                let w = self.c.from_bigint_like(&binom).times(&neg_r.pow(j));
                acc = acc.plus(&w.times(&self.coeff(i - j)));
                binom = binom * BigInt::from(m - j) / BigInt::from(j + 1);
            }
            if !acc.is_zero() {
                out.insert(self.exponent(i), acc);
            }
        }
        out
    }

    fn origin(&self) -> Exp {
        self.start.add_scaled(&self.step, &-BigInt::from(self.lo))
    }

    fn same_sequence(&self, other: &Self) -> bool {
        self.step == other.step && self.e == other.e && self.r == other.r && self.origin() == other.origin()
    }
}

/// Closed form of a stream: finitely many terms plus finitely many families.
#[derive(Clone, Debug, PartialEq)]
pub struct Segments<C> {
    rank: usize,
    terms: BTreeMap<Exp, C>,
    families: Vec<APFamily<C>>,
}

impl<C: Coeff> Segments<C> {
    pub fn zero(rank: usize) -> Self {
        Segments { rank, terms: BTreeMap::new(), families: Vec::new() }
    }

    pub fn new(rank: usize, terms: Vec<(Exp, C)>, families: Vec<APFamily<C>>) -> Result<Self, HahnError> {
        for (e, _) in &terms {
            if e.len() != rank {
                return Err(HahnError::DimensionMismatch { expected: rank, found: e.len() });
            }
        }
        for f in &families {
            if f.rank() != rank {
                return Err(HahnError::DimensionMismatch { expected: rank, found: f.rank() });
            }
        }
        let mut s = Segments::zero(rank);
        for (e, c) in terms {
            s.add_term(e, c);
        }
        s.families = merge_families(families);
        Ok(s)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> &BTreeMap<Exp, C> {
        &self.terms
    }

    pub fn families(&self) -> &[APFamily<C>] {
        &self.families
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.families.is_empty()
    }

    /// A single term `c·t^e`.
    pub fn as_monomial(&self) -> Option<(&Exp, &C)> {
        if self.families.is_empty() && self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    fn add_term(&mut self, e: Exp, c: C) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&e) {
            Some(old) => old.plus(&c),
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(e, sum);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = self.clone();
        for (e, c) in &other.terms {
            s.add_term(e.clone(), c.clone());
        }
        let mut fams = s.families;
        fams.extend(other.families.iter().cloned());
        s.families = merge_families(fams);
        s
    }

    pub fn neg(&self) -> Self {
        Segments {
            rank: self.rank,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.negated())).collect(),
            families: self.families.iter().map(APFamily::neg).collect(),
        }
    }

    /// `k·t^shift` times the closed form.
    pub fn mul_term(&self, shift: &Exp, k: &C) -> Self {
        if k.is_zero() {
            return Segments::zero(self.rank);
        }
        Segments {
            rank: self.rank,
            terms: self.terms.iter().map(|(e, c)| (e.add(shift), c.times(k))).collect(),
            families: self.families.iter().map(|f| f.mul_term(shift, k)).collect(),
        }
    }

    /// Splits off the infinite families: returns finite `q` and `b` with
    /// `self·q = b`, where `q` is a product of factors `(1 - r·t^d)^(e+1)`.
    /// `None` when there is no infinite family.
    pub fn annihilate(&self) -> Option<(Self, Self)> {
        let infinite: Vec<&APFamily<C>> = self.families.iter().filter(|f| f.is_infinite()).collect();
        let proto = infinite.first()?.c.clone();
        // (r, step, multiplicity), multiplicities maximal per (r, step)
        let mut factors: Vec<(C, Exp, u64)> = Vec::new();
        for f in &infinite {
            let m = f.e as u64 + 1;
            match factors.iter_mut().find(|(r, d, _)| *r == f.r && *d == f.step) {
                Some(x) => x.2 = x.2.max(m),
                None => factors.push((f.r.clone(), f.step.clone(), m)),
            }
        }
        let one = proto.one_like();
        let unit = Segments { rank: self.rank, terms: [(Exp::zero(self.rank), one.clone())].into(), families: Vec::new() };
        let power = |r: &C, d: &Exp, m: u64| {
            let lin = Segments {
                rank: self.rank,
                terms: [(Exp::zero(self.rank), one.clone()), (d.clone(), r.negated())].into(),
                families: Vec::new(),
            };
            (0..m).fold(unit.clone(), |acc, _| acc.mul_finite(&lin).expect("finite"))
        };
        let product = |skip: Option<(&C, &Exp, u64)>| {
            factors.iter().fold(unit.clone(), |acc, (r, d, m)| {
                let m = match skip {
                    Some((sr, sd, sm)) if sr == r && sd == d => m - sm,
                    _ => *m,
                };
                acc.mul_finite(&power(r, d, m)).expect("finite")
            })
        };
        let q = product(None);
        let rest = Segments {
            rank: self.rank,
            terms: self.terms.clone(),
            families: self.families.iter().filter(|f| !f.is_infinite()).cloned().collect(),
        };
        let mut b = rest.mul_finite(&q).expect("finite");
        for f in infinite {
            let part = Segments { rank: self.rank, terms: f.annihilated(), families: Vec::new() };
            let others = product(Some((&f.r, &f.step, f.e as u64 + 1)));
            b = b.add(&part.mul_finite(&others).expect("finite"));
        }
        Some((q, b))
    }

    /// Product when one side has no families; `None` otherwise.
    pub fn mul_finite(&self, other: &Self) -> Option<Self> {
        let (fin, any) = if self.families.is_empty() {
            (self, other)
        } else if other.families.is_empty() {
            (other, self)
        } else {
            return None;
        };
        let mut out = Segments::zero(self.rank);
        for (e, c) in &fin.terms {
            out = out.add(&any.mul_term(e, c));
        }
        Some(out)
    }
}

/// Merges families describing the same sequence on possibly overlapping
/// index ranges, summing their coefficient factors piecewise.
fn merge_families<C: Coeff>(fams: Vec<APFamily<C>>) -> Vec<APFamily<C>> {
    let mut groups: Vec<Vec<APFamily<C>>> = Vec::new();
    for f in fams {
        match groups.iter_mut().find(|g| g[0].same_sequence(&f)) {
            Some(g) => g.push(f),
            None => groups.push(vec![f]),
        }
    }
    let mut out = Vec::new();
    for g in groups {
        if g.len() == 1 {
            out.extend(g);
            continue;
        }
        let origin = g[0].origin();
        // exclusive upper bounds; u64::MAX stands for infinity
        let mut cuts: Vec<u64> = g.iter().flat_map(|f| [f.lo, f.hi.map_or(u64::MAX, |h| h + 1)]).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut pieces: Vec<(u64, u64, C)> = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut sum: Option<C> = None;
            for f in &g {
                let end = f.hi.map_or(u64::MAX, |h| h + 1);
                if f.lo <= a && b <= end {
                    sum = Some(match sum {
                        Some(s) => s.plus(&f.c),
                        None => f.c.clone(),
                    });
                }
            }
            let Some(sum) = sum.filter(|s| !s.is_zero()) else {
                continue;
            };
            match pieces.last_mut() {
                Some(last) if last.1 == a && last.2 == sum => last.1 = b,
                _ => pieces.push((a, b, sum)),
            }
        }
        let proto = &g[0];
        for (a, b, c) in pieces {
            out.push(APFamily {
                start: origin.add_scaled(&proto.step, &BigInt::from(a)),
                step: proto.step.clone(),
                lo: a,
                hi: (b != u64::MAX).then(|| b - 1),
                c,
                e: proto.e,
                r: proto.r.clone(),
            });
        }
    }
    out
}

fn is_ident(s: &str) -> bool {
    let mut ch = s.chars();
    matches!(ch.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && ch.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_atom(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    !body.is_empty() && body.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '^')
}

/// Prints `c·i^e·r^i` in the segment grammar.
pub(crate) fn fmt_rule<C: Coeff>(c: &C, e: u32, r: &C) -> String {
    let mut parts = Vec::new();
    if !c.is_one() {
        let s = c.to_string();
        parts.push(if is_atom(&s) { s } else { format!("({s})") });
    }
    match e {
        0 => {}
        1 => parts.push("i".into()),
        _ => parts.push(format!("i^{e}")),
    }
    if !r.is_one() {
        let s = r.to_string();
        let power = s.split_once('^').filter(|(b, k)| is_ident(b) && !k.is_empty() && k.chars().all(|c| c.is_ascii_digit()));
        parts.push(if is_ident(&s) || s.chars().all(|c| c.is_ascii_digit()) {
            format!("{s}^i")
        } else if let Some((b, k)) = power {
            format!("{b}^({k}*i)")
        } else {
            format!("({s})^i")
        });
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

impl<C: Coeff> fmt::Display for APFamily<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hi = self.hi.map_or("inf".to_string(), |h| h.to_string());
        write!(
            f,
            "family[start={}, step={}, coeff={}, i={}..{}]",
            self.start,
            self.step,
            fmt_rule(&self.c, self.e, &self.r),
            self.lo,
            hi
        )
    }
}

impl<C: Coeff> fmt::Display for Segments<C> {
    /// Segments sorted by first exponent; the finite block wins ties.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut blocks: Vec<(&Exp, u8, String)> = Vec::new();
        if let Some(first) = self.terms.keys().next() {
            let body: Vec<String> = self.terms.iter().map(|(e, c)| format!("{e}: {c}")).collect();
            blocks.push((first, 0, format!("terms[{}]", body.join(", "))));
        }
        for fam in &self.families {
            blocks.push((&fam.start, 1, fam.to_string()));
        }
        blocks.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let text: Vec<String> = blocks.into_iter().map(|b| b.2).collect();
        write!(f, "{}", text.join(" + "))
    }
}
