//! Oracles and generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use valmono::cli::SpecFile;
use valmono::coeff::{GroundElem, GroundField, SymbolTable, TowerElem};
use valmono::engine::{monomialize, verify_monomial};
use valmono::expr::TowerCtx;
use valmono::hahn::{APFamily, Budget, Exp, HahnStream, Segments};
use valmono::lexgroup::{echelon_reduce, LexVec, RowOp};
use valmono::scalar::Coeff;
use valmono::series::TruncSeries;

pub fn example_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/example_f5.spec")
}

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/example.json")
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_valmono"))
}

/// Output of one `valmono` run.
pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str]) -> Run {
    let out = std::process::Command::new(bin()).args(args).output().expect("valmono runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

/// Writes `contents` to a fresh file under the target temp directory.
pub fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join(format!("{}-{name}", std::process::id()));
    std::fs::write(&path, contents).expect("scratch file");
    path
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- lattices

/// Row-style Hermite normal form: echelon, positive pivots, entries above
/// each pivot reduced into `[0, pivot)`, zero rows dropped.
pub fn hnf(rows: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let mut a: Vec<Vec<i128>> = rows.to_vec();
    let cols = a.first().map_or(0, |r| r.len());
    let mut top = 0;
    for c in 0..cols {
        if top == a.len() {
            break;
        }
        loop {
            let nz: Vec<usize> = (top..a.len()).filter(|&r| a[r][c] != 0).collect();
            if nz.is_empty() {
                break;
            }
            let p = *nz.iter().min_by_key(|&&r| a[r][c].abs()).unwrap();
            a.swap(top, p);
            if a[top][c] < 0 {
                for x in a[top].iter_mut() {
                    *x = -*x;
                }
            }
            let mut done = true;
            for r in top + 1..a.len() {
                let q = a[r][c].div_euclid(a[top][c]);
                if q != 0 {
                    let pivot = a[top].clone();
                    for (x, y) in a[r].iter_mut().zip(&pivot) {
                        *x -= q * y;
                    }
                }
                if a[r][c] != 0 {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[top][c] == 0 {
            continue;
        }
        for r in 0..top {
            let q = a[r][c].div_euclid(a[top][c]);
            if q != 0 {
                let pivot = a[top].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot) {
                    *x -= q * y;
                }
            }
        }
        top += 1;
    }
    a.truncate(top);
    a
}

pub fn to_i128(v: &LexVec<BigInt>) -> Vec<i128> {
    v.coords().iter().map(|x| i128::try_from(x).expect("small entry")).collect()
}

pub fn random_rows(rng: &mut ChaCha8Rng) -> Vec<LexVec<BigInt>> {
    let n = rng.gen_range(1..=5);
    let m = rng.gen_range(1..=4);
    (0..n)
        .map(|_| LexVec::new((0..m).map(|_| BigInt::from(rng.gen_range(1..=20))).collect()))
        .collect()
}

/// Subgroup invariance, echelon shape and log replay for one matrix.
pub fn lattice_case(rows: &[LexVec<BigInt>]) -> Result<(), String> {
    let (basis, log) = echelon_reduce(rows).map_err(|e| format!("reduce failed: {e}"))?;
    let input: Vec<Vec<i128>> = rows.iter().map(to_i128).collect();
    let ours: Vec<Vec<i128>> = basis.rows.iter().map(to_i128).collect();
    if hnf(&input) != hnf(&ours) {
        return Err(format!("subgroup differs: {input:?} vs basis {ours:?}"));
    }
    if basis.rows.len() != hnf(&input).len() {
        return Err("basis rank differs from the oracle".into());
    }
    for (k, row) in basis.rows.iter().enumerate() {
        let col = basis.pivot_cols[k];
        if k > 0 && basis.pivot_cols[k - 1] >= col {
            return Err(format!("pivot columns not increasing: {:?}", basis.pivot_cols));
        }
        if row.leading_index() != Some(col) || row.coords()[col] != basis.pivots[k] || basis.pivots[k] <= BigInt::from(0) {
            return Err(format!("row {row} does not lead with pivot {} at {col}", basis.pivots[k]));
        }
    }
    let replayed = log.replay(rows);
    for (j, r) in replayed.iter().enumerate() {
        if !r.is_positive() {
            return Err(format!("replayed row {} is not positive: {r}", j + 1));
        }
        if !basis.rows.contains(r) {
            return Err(format!("replayed row {} = {r} is not a basis row", j + 1));
        }
    }
    for b in &basis.rows {
        if !replayed.contains(b) {
            return Err(format!("basis row {b} is not carried by any variable"));
        }
    }
    for op in &log.ops {
        match op {
            RowOp::AddRow { factor, .. } if *factor < BigInt::from(0) => {}
            other => return Err(format!("operation {other} is not a monoidal map")),
        }
    }
    for r in rows {
        let coords = basis.solve(r).map_err(|e| format!("{r} not solvable: {e}"))?;
        let mut acc = LexVec::zero(r.len());
        for (c, b) in coords.iter().zip(&basis.rows) {
            acc = acc.add_scaled(b, c);
        }
        if acc != *r {
            return Err(format!("solve({r}) does not recombine"));
        }
    }
    Ok(())
}

pub fn lattice_suite(count: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    (0..count).filter_map(|_| lattice_case(&random_rows(&mut rng)).err()).collect()
}

// ---------------------------------------------------------------- valuation axioms

pub fn random_field(rng: &mut ChaCha8Rng) -> GroundField {
    if rng.gen_bool(0.5) {
        GroundField::Prime(5)
    } else {
        GroundField::Rationals
    }
}

fn nonzero(rng: &mut ChaCha8Rng, field: GroundField) -> i64 {
    match field {
        GroundField::Prime(p) => rng.gen_range(1..p as i64),
        GroundField::Rationals => {
            let v = rng.gen_range(1..=9);
            if rng.gen_bool(0.5) {
                -v
            } else {
                v
            }
        }
    }
}

pub fn random_positive(rng: &mut ChaCha8Rng, m: usize) -> LexVec<BigInt> {
    let lead = rng.gen_range(0..m);
    let coords = (0..m)
        .map(|k| match k.cmp(&lead) {
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => rng.gen_range(1..=3),
            std::cmp::Ordering::Greater => rng.gen_range(-4..=4),
        })
        .map(BigInt::from)
        .collect();
    LexVec::new(coords)
}

pub fn random_trunc(rng: &mut ChaCha8Rng, field: GroundField, n: usize) -> TruncSeries<GroundElem> {
    let count = rng.gen_range(1..=5);
    let mut deg = 0;
    let terms: Vec<(Vec<u32>, GroundElem)> = (0..count)
        .map(|_| {
            let total = rng.gen_range(0..=4);
            deg = deg.max(total);
            let mut a = vec![0u32; n];
            for _ in 0..total {
                a[rng.gen_range(0..n)] += 1;
            }
            (a, GroundElem::int(field, nonzero(rng, field)))
        })
        .collect();
    let witness = if rng.gen_bool(0.3) { Some(deg + rng.gen_range(0..=2)) } else { None };
    TruncSeries::from_terms(n, terms, witness)
}

/// `Ok(true)` when checked, `Ok(false)` when a value could not be certified.
pub fn axioms_case(rng: &mut ChaCha8Rng) -> Result<bool, String> {
    let field = random_field(rng);
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=3);
    let values: Vec<LexVec<BigInt>> = (0..n).map(|_| random_positive(rng, m)).collect();
    let f = random_trunc(rng, field, n);
    let g = random_trunc(rng, field, n);
    let v = |s: &TruncSeries<GroundElem>| s.monomial_value(&values);
    let (Ok(vf), Ok(vg), Ok(vfg), Ok(vs)) = (v(&f), v(&g), v(&f.mul(&g)), v(&f.add(&g))) else {
        return Ok(false);
    };
    let sum = match (&vf, &vg) {
        (Some(a), Some(b)) => Some(a.add(b)),
        _ => None,
    };
    if vfg != sum {
        return Err(format!("v(fg) = {vfg:?} but v(f) + v(g) = {sum:?} for f = {f}, g = {g}, L = {values:?}"));
    }
    let min = match (&vf, &vg) {
        (Some(a), Some(b)) => Some(a.min(b).clone()),
        (Some(a), None) | (None, Some(a)) => Some(a.clone()),
        (None, None) => None,
    };
    let ge = match (&vs, &min) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(s), Some(mn)) => s >= mn,
    };
    if !ge {
        return Err(format!("ultrametric inequality fails: v(f+g) = {vs:?} < {min:?}"));
    }
    if vf != vg && vs != min {
        return Err(format!("v(f+g) = {vs:?} differs from the strict minimum {min:?}"));
    }
    Ok(true)
}

/// Returns failures and the number of certified cases.
/// Runs cases until `target` of them are certified or `cap` were tried;
/// returns the failures, the certified count and the number tried.
pub fn axioms_until(target: usize, cap: usize, seed: u64) -> (Vec<String>, usize, usize) {
    let mut rng = rng(seed);
    let mut fails = Vec::new();
    let (mut checked, mut tried) = (0, 0);
    while checked < target && tried < cap {
        tried += 1;
        match axioms_case(&mut rng) {
            Ok(true) => checked += 1,
            Ok(false) => {}
            Err(e) => fails.push(e),
        }
    }
    (fails, checked, tried)
}

pub fn axioms_suite(count: usize, seed: u64) -> (Vec<String>, usize) {
    let mut rng = rng(seed);
    let mut fails = Vec::new();
    let mut checked = 0;
    for _ in 0..count {
        match axioms_case(&mut rng) {
            Ok(true) => checked += 1,
            Ok(false) => {}
            Err(e) => fails.push(e),
        }
    }
    (fails, checked)
}

// ---------------------------------------------------------------- Hahn arithmetic

type Key = Vec<i64>;

/// A random closed stream together with an independent term listing.
pub struct RandomStream {
    pub stream: HahnStream<TowerElem>,
    /// Exact terms strictly below `cut`.
    pub terms: BTreeMap<Key, TowerElem>,
    pub cut: Option<Key>,
    /// Lower bound for the support.
    pub low: Key,
}

const ORACLE_SPAN: u64 = 40;

fn ctx(field: GroundField) -> TowerCtx {
    TowerCtx::new(field, Arc::new(SymbolTable::new(Vec::new())))
}

fn exp(k: &Key) -> Exp {
    Exp::from_ints(k)
}

fn add_key(a: &Key, b: &Key) -> Key {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn scale_key(a: &Key, k: i64) -> Key {
    a.iter().map(|x| x * k).collect()
}

fn min_opt(a: Option<Key>, b: Option<Key>) -> Option<Key> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn insert(map: &mut BTreeMap<Key, TowerElem>, k: Key, c: TowerElem) {
    let next = match map.get(&k) {
        Some(old) => old.add(&c),
        None => c,
    };
    if next.is_zero() {
        map.remove(&k);
    } else {
        map.insert(k, next);
    }
}

fn elem_pow(x: &TowerElem, k: u64, one: &TowerElem) -> TowerElem {
    (0..k).fold(one.clone(), |acc, _| acc.mul(x))
}

pub fn random_stream(rng: &mut ChaCha8Rng, field: GroundField, rank: usize) -> RandomStream {
    let cx = ctx(field);
    let one = cx.int(1);
    let rand_exp = |rng: &mut ChaCha8Rng| -> Key {
        if rank == 1 {
            vec![rng.gen_range(0..=6)]
        } else {
            vec![rng.gen_range(0..=2), rng.gen_range(-3..=6)]
        }
    };
    let rand_step = |rng: &mut ChaCha8Rng| -> Key {
        if rank == 1 {
            vec![rng.gen_range(1..=3)]
        } else if rng.gen_bool(0.6) {
            vec![0, rng.gen_range(1..=3)]
        } else {
            vec![1, rng.gen_range(-2..=2)]
        }
    };
    let mut terms = Vec::new();
    let mut oracle = BTreeMap::new();
    let mut low: Option<Key> = None;
    for _ in 0..rng.gen_range(0..=3) {
        let k = rand_exp(rng);
        let c = cx.int(nonzero(rng, field));
        low = min_opt(low, Some(k.clone()));
        insert(&mut oracle, k.clone(), c.clone());
        terms.push((exp(&k), c));
    }
    let mut fams = Vec::new();
    let mut cut: Option<Key> = None;
    let nfam = if terms.is_empty() { rng.gen_range(1..=2) } else { rng.gen_range(0..=2) };
    for _ in 0..nfam {
        let start = rand_exp(rng);
        let step = rand_step(rng);
        let lo = rng.gen_range(0..=2u64);
        let hi = if rng.gen_bool(0.6) { None } else { Some(lo + rng.gen_range(0..=8)) };
        let c = nonzero(rng, field);
        let e = rng.gen_range(0..=2u32);
        let r = nonzero(rng, field).clamp(-3, 3);
        let r = if r == 0 { 1 } else { r };
        let fam = APFamily::new(exp(&start), exp(&step), lo, hi, cx.int(c), e, cx.int(r)).expect("valid family");
        fams.push(fam);
        low = min_opt(low, Some(start.clone()));
        let last = hi.unwrap_or(u64::MAX).min(lo + ORACLE_SPAN);
        let rr = cx.int(r);
        for i in lo..=last {
            let ie = (i as i64).pow(e);
            let coeff = cx.int(c).mul(&cx.int(ie)).mul(&elem_pow(&rr, i, &one));
            if !coeff.is_zero() {
                insert(&mut oracle, add_key(&start, &scale_key(&step, (i - lo) as i64)), coeff);
            }
        }
        if hi.is_none_or(|h| h > last) {
            cut = min_opt(cut, Some(add_key(&start, &scale_key(&step, (last + 1 - lo) as i64))));
        }
    }
    let seg = Segments::new(rank, terms, fams).expect("valid segments");
    RandomStream { stream: HahnStream::from_segments(seg), terms: oracle, cut, low: low.expect("nonempty") }
}

fn below(map: &BTreeMap<Key, TowerElem>, bound: &Option<Key>) -> Vec<(Key, TowerElem)> {
    map.iter()
        .filter(|(k, _)| bound.as_ref().is_none_or(|b| *k < b))
        .map(|(k, c)| (k.clone(), c.clone()))
        .collect()
}

/// Compares the first `n` stream terms below `bound` with the oracle. The
/// bound doubles as the lex ceiling so that cancellations stay finite.
fn compare(label: &str, s: &HahnStream<TowerElem>, oracle: &BTreeMap<Key, TowerElem>, bound: &Option<Key>, n: usize) -> Result<(), String> {
    let budget = Budget { lex_ceiling: bound.as_ref().map(exp), ..Budget::default() };
    let mut got: Vec<(Key, TowerElem)> = Vec::new();
    for k in 0..n {
        match s.term(k, &budget) {
            Ok(Some((x, c))) => {
                let key: Key = x.coords().iter().map(|v| i64::try_from(v).unwrap()).collect();
                if bound.as_ref().is_some_and(|b| key >= *b) {
                    break;
                }
                got.push((key, c));
            }
            Ok(None) => break,
            Err(e) if bound.is_some() && e.to_string().contains("lex ceiling") => break,
            Err(e) => return Err(format!("{label}: {e}")),
        }
    }
    let mut want = below(oracle, bound);
    if got.len() == n {
        want.truncate(n);
    }
    if got != want {
        let show = |v: &[(Key, TowerElem)]| v.iter().map(|(k, c)| format!("{k:?}:{c}")).collect::<Vec<_>>().join(" ");
        return Err(format!("{label}: stream [{}] oracle [{}] below {bound:?}", show(&got), show(&want)));
    }
    Ok(())
}

pub fn hahn_case(rng: &mut ChaCha8Rng, n: usize) -> Result<(), String> {
    let field = random_field(rng);
    let rank = rng.gen_range(1..=2);
    let f = random_stream(rng, field, rank);
    let g = random_stream(rng, field, rank);
    let mut sum = f.terms.clone();
    for (k, c) in &g.terms {
        insert(&mut sum, k.clone(), c.clone());
    }
    let sum_cut = min_opt(f.cut.clone(), g.cut.clone());
    compare("sum", &f.stream.add(&g.stream), &sum, &sum_cut, n)?;
    let mut diff = f.terms.clone();
    for (k, c) in &g.terms {
        insert(&mut diff, k.clone(), c.neg());
    }
    compare("difference", &f.stream.sub(&g.stream), &diff, &sum_cut, n)?;
    let mut prod = BTreeMap::new();
    for (a, x) in &f.terms {
        for (b, y) in &g.terms {
            insert(&mut prod, add_key(a, b), x.mul(y));
        }
    }
    let prod_cut = min_opt(f.cut.as_ref().map(|c| add_key(c, &g.low)), g.cut.as_ref().map(|c| add_key(c, &f.low)));
    let fg = f.stream.mul(&g.stream);
    compare("product", &fg, &prod, &prod_cut, n).map_err(|e| format!("{e}\n f = {}\n g = {}", f.stream, g.stream))?;
    let mut mixed = prod.clone();
    for (k, c) in &f.terms {
        insert(&mut mixed, k.clone(), c.clone());
    }
    compare("product plus factor", &fg.add(&f.stream), &mixed, &min_opt(prod_cut, f.cut.clone()), n)
        .map_err(|e| format!("{e}\n f = {}\n g = {}", f.stream, g.stream))?;
    Ok(())
}

pub fn hahn_suite(count: usize, seed: u64, n: usize) -> Vec<String> {
    let mut rng = rng(seed);
    (0..count).filter_map(|_| hahn_case(&mut rng, n).err()).collect()
}

// ---------------------------------------------------------------- synthetic specifications

/// A specification built forward from a monomial model.
pub struct Synthetic {
    pub text: String,
    pub n: usize,
    pub m: usize,
    /// Values of the model variables `Z_1..Z_m`.
    pub basis_values: Vec<Vec<i128>>,
}

struct Fam {
    start: Key,
    step: Key,
    c: TowerElem,
    r: TowerElem,
}

struct Img {
    terms: BTreeMap<Key, TowerElem>,
    fams: Vec<Fam>,
}

impl Img {
    fn shift(&mut self, by: &Key) {
        self.terms = std::mem::take(&mut self.terms).into_iter().map(|(k, c)| (add_key(&k, by), c)).collect();
        for f in &mut self.fams {
            f.start = add_key(&f.start, by);
        }
    }

    fn render(&self) -> String {
        let tuple = |k: &Key| format!("({})", k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        let mut blocks = Vec::new();
        if !self.terms.is_empty() {
            let items: Vec<String> = self.terms.iter().map(|(k, c)| format!("{}: {}", tuple(k), c)).collect();
            blocks.push(format!("terms[{}]", items.join(", ")));
        }
        for f in &self.fams {
            blocks.push(format!(
                "family[start={}, step={}, coeff=({})*({})^i, i=1..inf]",
                tuple(&f.start),
                tuple(&f.step),
                f.c,
                f.r
            ));
        }
        blocks.join(" + ")
    }
}

/// Builds `φ` from a model `ψ`: basis variables `Z_1..Z_m` map to
/// `t^{B_k}`, the others to `u_j t^{B_j}` with `B_j` in the span of the
/// `B_k`; then polynomial and family coordinate changes on the non-basis
/// variables, then monoidal maps `X_l = Y_l Y_i^q` with `i` a basis variable.
pub fn synthetic(seed: u64) -> Synthetic {
    let mut rng = rng(seed);
    let field = random_field(&mut rng);
    let m = rng.gen_range(1..=3);
    let n = rng.gen_range(m.max(2)..=4);
    let names: Vec<String> = (m..n).map(|j| format!("u{}", j + 1)).collect();
    let table = Arc::new(SymbolTable::new(names.clone()));
    let cx = TowerCtx::new(field, table);
    let one = cx.int(1);

    let mut bvals: Vec<Key> = Vec::new();
    for k in 0..m {
        let mut b = vec![0i64; m];
        b[k] = if rng.gen_bool(0.8) { 1 } else { 2 };
        for x in b.iter_mut().skip(k + 1) {
            *x = rng.gen_range(-2..=2);
        }
        bvals.push(b);
    }
    // exponents over Z, value and residue coefficient of each model variable
    let mut zexp: Vec<Vec<i64>> = Vec::new();
    let mut zval: Vec<Key> = Vec::new();
    let mut zres: Vec<TowerElem> = Vec::new();
    for k in 0..m {
        let mut a = vec![0i64; n];
        a[k] = 1;
        zexp.push(a);
        zval.push(bvals[k].clone());
        zres.push(one.clone());
    }
    for j in m..n {
        let mut a = vec![0i64; m];
        while a.iter().all(|&x| x == 0) {
            a = (0..m).map(|_| rng.gen_range(0..=2)).collect();
        }
        let mut v = vec![0i64; m];
        for (k, c) in a.iter().enumerate() {
            v = add_key(&v, &scale_key(&bvals[k], *c));
        }
        let mut e = vec![0i64; n];
        e[j] = 1;
        zexp.push(e);
        zval.push(v);
        zres.push(cx.parse_elem(&names[j - m]).unwrap());
    }
    let monomial = |a: &[i64]| -> (Key, TowerElem) {
        let mut v = vec![0i64; m];
        let mut c = one.clone();
        for (s, &x) in a.iter().enumerate() {
            if x != 0 {
                v = add_key(&v, &scale_key(&zval[s], x));
                c = c.mul(&elem_pow(&zres[s], x as u64, &one));
            }
        }
        (v, c)
    };

    let mut imgs: Vec<Img> = (0..n)
        .map(|j| {
            let mut terms = BTreeMap::new();
            terms.insert(zval[j].clone(), zres[j].clone());
            Img { terms, fams: Vec::new() }
        })
        .collect();
    for j in m..n {
        for _ in 0..rng.gen_range(0..=2) {
            let mut a = vec![0i64; n];
            while a.iter().all(|&x| x == 0) {
                for (s, x) in a.iter_mut().enumerate().take(j) {
                    *x = if rng.gen_bool(0.5) { rng.gen_range(0..=2) } else { 0 };
                    let _ = s;
                }
            }
            let (v, c) = monomial(&a);
            insert(&mut imgs[j].terms, v, c.mul(&cx.int(nonzero(&mut rng, field))));
        }
        if m >= 2 && rng.gen_bool(0.5) {
            // Σ_{i≥1} c r^i Z_m^i Z^b: exponents start + i·B_m
            let mut b = vec![0i64; n];
            for x in b.iter_mut().take(m - 1) {
                *x = rng.gen_range(0..=1);
            }
            let (base, cb) = monomial(&b);
            let step = bvals[m - 1].clone();
            let prefix = |k: &Key| k[..m - 1].to_vec();
            let p = prefix(&base);
            let clash = imgs[j].terms.keys().any(|k| prefix(k) == p);
            if !clash {
                let c = cx.int(nonzero(&mut rng, field)).mul(&cb);
                let r = cx.int(nonzero(&mut rng, field));
                imgs[j].fams.push(Fam { start: add_key(&base, &step), step, c, r });
            }
        }
    }
    // monoidal scrambles; basis images stay single terms
    for _ in 0..rng.gen_range(0..=3) {
        let i = rng.gen_range(0..m);
        let l = rng.gen_range(0..n);
        if l == i {
            continue;
        }
        let q = rng.gen_range(1..=2);
        let (shift, c) = imgs[i].terms.iter().next().map(|(k, c)| (k.clone(), c.clone())).unwrap();
        assert!(imgs[i].terms.len() == 1 && imgs[i].fams.is_empty() && c == one);
        imgs[l].shift(&scale_key(&shift, q));
    }
    let mut text = String::new();
    text.push_str(&format!("field {}\n", field));
    text.push_str(&format!("rank {m}\n"));
    let vars: Vec<String> = (1..=n).map(|i| format!("X{i}")).collect();
    text.push_str(&format!("vars {}\n", vars.join(" ")));
    if !names.is_empty() {
        text.push_str(&format!("symbols {}\n", names.join(" ")));
    }
    for (v, img) in vars.iter().zip(&imgs) {
        text.push_str(&format!("image {v} = {}\n", img.render()));
    }
    text.push_str("budgets max_steps=64 max_terms=4096 trunc_degree=4\n");
    Synthetic { text, n, m, basis_values: bvals.iter().map(|b| b.iter().map(|&x| x as i128).collect()).collect() }
}

/// Monomializes one synthetic spec and checks it against the construction.
pub fn recompose_case(seed: u64, polys: usize) -> Result<(), String> {
    let syn = synthetic(seed);
    let file = SpecFile::parse(&syn.text).map_err(|e| format!("seed {seed}: {e}\n{}", syn.text))?;
    let spec = file.valuation();
    let res = monomialize(&spec).map_err(|e| format!("seed {seed}: {e}\n{}", syn.text))?;
    if res.residues.len() != syn.n - syn.m {
        return Err(format!("seed {seed}: {} residues, expected {}", res.residues.len(), syn.n - syn.m));
    }
    let got: Vec<Vec<i128>> = res.final_values.iter().map(to_i128).collect();
    if hnf(&got) != hnf(&syn.basis_values) {
        return Err(format!("seed {seed}: value group {:?} differs from {:?}", hnf(&got), hnf(&syn.basis_values)));
    }
    let rep = verify_monomial(&spec, &res, polys, seed).map_err(|e| format!("seed {seed}: {e}"))?;
    if !rep.passed() || rep.checked != polys {
        return Err(format!("seed {seed}: {rep:?}\n{}", syn.text));
    }
    Ok(())
}

/// Failures over the specs with seeds `first..first + specs`.
pub fn recompose_suite(first: u64, specs: usize, polys: usize) -> Vec<String> {
    (first..first + specs as u64).filter_map(|s| recompose_case(s, polys).err()).collect()
}
