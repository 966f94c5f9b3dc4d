use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::report::{assemble, SlotOutcome};
use super::{
    one_of, Correction, EngineError, FamilyCorrection, LogEntry, MonomializationResult, Options, TraceEvent, TraceKind,
    ValuationSpec,
};
use crate::coeff::{ResidueTower, TowerElem};
use crate::hahn::{Budget, Exp, HahnStream};
use crate::lexgroup::{echelon_reduce, LatticeError, RowOp, SubgroupBasis};
use crate::scalar::Coeff;

/// Restarts allowed before giving up; each one enlarges the value subgroup.
const MAX_FRAMES: usize = 64;

/// Terms compared before a family is accepted as a limit.
const LIMIT_CHECK: usize = 8;

/// Value subgroup of one frame and the variables carrying its basis.
pub(crate) struct FrameBasis {
    pub basis: SubgroupBasis<BigInt>,
    pub slots: Vec<usize>,
    pub kappa: Vec<TowerElem>,
}

impl FrameBasis {
    /// Basis coordinates spread over variable slots.
    pub fn exponents(&self, coords: &[BigInt], n: usize) -> Vec<BigInt> {
        let mut r = vec![BigInt::zero(); n];
        for (k, &s) in self.slots.iter().enumerate() {
            r[s] += &coords[k];
        }
        r
    }

    /// Leading coefficient of `φ(Y^R)`.
    pub fn kappa_pow(&self, coords: &[BigInt]) -> TowerElem {
        let mut acc = self.kappa[0].one_like();
        for (k, a) in self.kappa.iter().zip(coords) {
            let e = a.to_i64().expect("small exponent");
            acc = acc.times(&k.powi(e).expect("nonzero leading coefficient"));
        }
        acc
    }
}

enum Found {
    Residue { symbol: usize, generator: TowerElem, correction: Correction, image: HahnStream<TowerElem> },
    NewValue { image: HahnStream<TowerElem>, correction: Correction },
}

/// Runs the procedure with default options.
pub fn monomialize(spec: &ValuationSpec) -> Result<MonomializationResult, EngineError> {
    monomialize_with(spec, &Options::default())
}

pub fn monomialize_with(spec: &ValuationSpec, opts: &Options) -> Result<MonomializationResult, EngineError> {
    spec.validate()?;
    let n = spec.n();
    let budget = spec.budgets.stream_budget();
    let mut images = spec.images.clone();
    let mut log: Vec<LogEntry> = Vec::new();
    let mut trace: Vec<TraceEvent> = Vec::new();
    let mut prev: Option<SubgroupBasis<BigInt>> = None;

    for frame in 0..MAX_FRAMES {
        let values = leading_values(&images, &budget)?;
        let (basis, ops) = echelon_reduce(&values).map_err(|e| match e {
            LatticeError::NonPositiveRow { row } => {
                EngineError::InvalidSpec(format!("value of variable {} is not lexicographically positive", row + 1))
            }
            other => EngineError::Internal(other.to_string()),
        })?;
        for op in &ops.ops {
            let RowOp::AddRow { target, source, factor } = op else {
                return Err(EngineError::Internal("unexpected swap in the echelon log".into()));
            };
            let q = -factor;
            if !q.is_positive() {
                return Err(EngineError::Internal(format!("non-monoidal row operation {op}")));
            }
            let slot = format!("Y{}", target + 1);
            let div = images[*source].pow(&-&q, &budget).map_err(|e| EngineError::from_hahn(&slot, e))?;
            images[*target] = images[*target].mul(&div);
            let entry = LogEntry::Monoidal { l: *target, i: *source, q };
            trace.push(TraceEvent { frame, slot: Some(*target), kind: TraceKind::Monoidal, value: None, detail: entry.to_string() });
            log.push(entry);
        }
        let values = ops.replay(&values);
        let slots: Vec<usize> = basis
            .rows
            .iter()
            .map(|row| values.iter().position(|v| v == row).expect("basis rows are variable values"))
            .collect();
        if let Some(p) = &prev {
            check_progress(p, &basis)?;
        }
        let kappa = slots
            .iter()
            .map(|&s| lead(&images[s], s, &budget).map(|t| t.1))
            .collect::<Result<Vec<_>, _>>()?;
        let rows: Vec<String> = basis.rows.iter().map(|r| r.to_string()).collect();
        trace.push(TraceEvent {
            frame,
            slot: None,
            kind: TraceKind::Basis,
            value: None,
            detail: format!("[{}]", rows.join(", ")),
        });
        let fb = FrameBasis { basis, slots, kappa };

        let mut tower = ResidueTower::new();
        let mut outcomes: Vec<SlotOutcome> = vec![SlotOutcome::Basis; n];
        let mut restart = None;
        for j in 0..n {
            if fb.slots.contains(&j) {
                continue;
            }
            match discover(spec, opts, &budget, frame, j, &images, &fb, &mut tower, &mut trace)? {
                Found::Residue { symbol, generator, correction, image } => {
                    outcomes[j] = SlotOutcome::Residue { symbol, generator, correction, image };
                }
                Found::NewValue { image, correction } => {
                    restart = Some((j, image, correction));
                    break;
                }
            }
        }
        if let Some((j, image, correction)) = restart {
            log.push(LogEntry::CoordChange { j, correction });
            images[j] = image;
            prev = Some(fb.basis);
            continue;
        }
        if fb.basis.rank() < spec.rank {
            return Err(EngineError::Dimension(format!(
                "the values generate a subgroup of rank {} < {}",
                fb.basis.rank(),
                spec.rank
            )));
        }
        for (j, out) in outcomes.iter().enumerate() {
            if let SlotOutcome::Residue { correction, image, .. } = out {
                if !correction.is_empty() {
                    let entry = LogEntry::CoordChange { j, correction: correction.clone() };
                    trace.push(TraceEvent { frame, slot: Some(j), kind: TraceKind::FinalChange, value: None, detail: entry.to_string() });
                    log.push(entry);
                    images[j] = image.clone();
                }
            }
        }
        return assemble(spec, log, images, fb, outcomes, trace, &budget);
    }
    Err(EngineError::Inconclusive {
        slot: "run".into(),
        reason: format!("more than {MAX_FRAMES} restarts"),
        prefix: Vec::new(),
    })
}

fn lead(s: &HahnStream<TowerElem>, j: usize, budget: &Budget) -> Result<(Exp, TowerElem), EngineError> {
    let slot = format!("Y{}", j + 1);
    match s.lead(budget) {
        Ok(Some(t)) => Ok(t),
        Ok(None) => Err(EngineError::Dimension(format!("{slot} maps to zero"))),
        Err(e) => Err(EngineError::from_hahn(&slot, e)),
    }
}

fn leading_values(images: &[HahnStream<TowerElem>], budget: &Budget) -> Result<Vec<Exp>, EngineError> {
    images.iter().enumerate().map(|(j, s)| lead(s, j, budget).map(|t| t.0)).collect()
}

/// Either the rank grows, or the pivot columns stay and the pivots shrink
/// somewhere without growing anywhere.
fn check_progress(prev: &SubgroupBasis<BigInt>, now: &SubgroupBasis<BigInt>) -> Result<(), EngineError> {
    if now.rank() > prev.rank() {
        return Ok(());
    }
    let improved = now.rank() == prev.rank()
        && now.pivot_cols == prev.pivot_cols
        && now.pivots.iter().zip(&prev.pivots).all(|(q, p)| q <= p)
        && now.pivots.iter().zip(&prev.pivots).any(|(q, p)| q < p);
    if improved {
        Ok(())
    } else {
        Err(EngineError::Internal(format!(
            "restart without progress: pivots {:?} at columns {:?} after {:?} at {:?}",
            now.pivots, now.pivot_cols, prev.pivots, prev.pivot_cols
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn discover(
    spec: &ValuationSpec,
    opts: &Options,
    budget: &Budget,
    frame: usize,
    j: usize,
    images: &[HahnStream<TowerElem>],
    fb: &FrameBasis,
    tower: &mut ResidueTower,
    trace: &mut Vec<TraceEvent>,
) -> Result<Found, EngineError> {
    let n = spec.n();
    let slot = format!("Y{}", j + 1);
    let one = one_of(spec);
    let mut f = images[j].clone();
    let mut corr = Correction::default();
    let mut prefix: Vec<Exp> = Vec::new();
    let mut last: Option<Exp> = None;
    let mut steps = 0usize;
    let with_prefix = |e: EngineError, prefix: &[Exp]| match e {
        EngineError::Inconclusive { slot, reason, .. } => EngineError::Inconclusive { slot, reason, prefix: prefix.to_vec() },
        other => other,
    };
    loop {
        let (b, lc) = lead(&f, j, budget).map_err(|e| with_prefix(e, &prefix))?;
        if last.as_ref().is_some_and(|p| b <= *p) {
            return Err(EngineError::Internal(format!("{slot}: value {b} did not increase")));
        }
        last = Some(b.clone());
        let Ok(coords) = fb.basis.solve(&b) else {
            trace.push(TraceEvent { frame, slot: Some(j), kind: TraceKind::NewValue, value: Some(b.clone()), detail: String::new() });
            return Ok(Found::NewValue { image: f, correction: corr });
        };
        let c = lc.div(&fb.kappa_pow(&coords)).map_err(|e| EngineError::Internal(e.to_string()))?;
        let allowed = tower.allowed();
        if c.is_in_subfield(&allowed) {
            if opts.use_limits {
                let found = try_limit(&f, &b, &lc, images, fb, &allowed, budget, n).map_err(|e| with_prefix(e, &prefix))?;
                if let Some((rest, fc, desc)) = found {
                    let next = rest.nu_t(budget).map_err(|e| with_prefix(EngineError::from_hahn(&slot, e), &prefix))?;
                    trace.push(TraceEvent { frame, slot: Some(j), kind: TraceKind::Limit, value: next, detail: desc });
                    prefix.push(b.clone());
                    f = rest;
                    corr.families.push(fc);
                    continue;
                }
            }
            if steps == spec.budgets.max_steps {
                return Err(EngineError::Inconclusive {
                    slot,
                    reason: format!("no family limit within {} finite steps", spec.budgets.max_steps),
                    prefix,
                });
            }
            steps += 1;
            let r = fb.exponents(&coords, n);
            let g = HahnStream::monomial_image(&r, images, &one, budget)
                .map_err(|e| with_prefix(EngineError::from_hahn(&slot, e), &prefix))?
                .scale(&c);
            trace.push(TraceEvent { frame, slot: Some(j), kind: TraceKind::Finite, value: Some(b.clone()), detail: c.to_string() });
            prefix.push(b);
            f = f.sub(&g);
            corr.finite.push((c, r));
            continue;
        }
        if let Some(w) = c.fresh_generator(&allowed) {
            tower.adjoin(w, &spec.symbols).map_err(|e| EngineError::Internal(e.to_string()))?;
            trace.push(TraceEvent {
                frame,
                slot: Some(j),
                kind: TraceKind::Residue,
                value: Some(b),
                detail: format!("{} = {}", spec.symbols.name(w), c),
            });
            return Ok(Found::Residue { symbol: w, generator: c, correction: corr, image: f });
        }
        return Err(EngineError::Purity { slot, coefficient: c.to_string(), field: field_name(spec, tower) });
    }
}

fn field_name(spec: &ValuationSpec, tower: &ResidueTower) -> String {
    let names: Vec<String> = tower.adjoined().iter().map(|&s| spec.symbols.name(s)).collect();
    if names.is_empty() {
        "k".into()
    } else {
        format!("k({})", names.join(", "))
    }
}

/// A limit step along a closed-form family containing the leading term.
///
/// Accepted when the rest of the stream lies beyond every exponent of the
/// family, the family's start and step lie in the value subgroup, the basis
/// images are single terms, and the resulting coefficient rule lives in the
/// current residue field.
#[allow(clippy::too_many_arguments)]
fn try_limit(
    f: &HahnStream<TowerElem>,
    b: &Exp,
    lc: &TowerElem,
    images: &[HahnStream<TowerElem>],
    fb: &FrameBasis,
    allowed: &std::collections::BTreeSet<usize>,
    budget: &Budget,
    n: usize,
) -> Result<Option<(HahnStream<TowerElem>, FamilyCorrection, String)>, EngineError> {
    let Some(seg) = f.closed() else {
        return Ok(None);
    };
    if fb.slots.iter().any(|&s| images[s].as_monomial().is_none()) {
        return Ok(None);
    }
    let internal = |e: crate::hahn::HahnError| EngineError::Internal(e.to_string());
    for fam in seg.families() {
        if !fam.is_infinite() {
            continue;
        }
        let Some(i0) = fam.index_of(b) else {
            continue;
        };
        if fam.next_nonzero(i0).as_ref().map(|(i, c)| (*i, c)) != Some((i0, lc)) {
            continue;
        }
        let tail = fam.tail_from(i0).expect("index in range");
        let (Ok(ca), Ok(cd)) = (fb.basis.solve(tail.start()), fb.basis.solve(tail.step())) else {
            continue;
        };
        let ka = fb.kappa_pow(&ca);
        let kd = fb.kappa_pow(&cd);
        let c2 = tail.c().times(&kd.pow(i0)).div(&ka).map_err(|e| EngineError::Internal(e.to_string()))?;
        let r2 = tail.r().div(&kd).map_err(|e| EngineError::Internal(e.to_string()))?;
        if !(c2.is_in_subfield(allowed) && r2.is_in_subfield(allowed)) {
            continue;
        }
        let fc = FamilyCorrection {
            c: c2,
            e: tail.e(),
            r: r2,
            i0,
            hi: tail.hi(),
            r0: fb.exponents(&ca, n),
            rd: fb.exponents(&cd, n),
        };
        let rest = match f.subtract_segment_limit(&tail, LIMIT_CHECK, budget) {
            Ok(rest) => rest,
            Err(crate::hahn::HahnError::NoLimit(_)) => continue,
            Err(e) => return Err(EngineError::from_hahn("limit", e)),
        };
        if let Some(x) = rest.nu_t(budget).map_err(|e| EngineError::from_hahn("limit", e))? {
            if !tail.lies_beyond(&x) {
                continue;
            }
        }
        // the recorded correction must reproduce the subtracted tail exactly
        let one = lc.one_like();
        let replayed = Correction { finite: Vec::new(), families: vec![fc.clone()] }
            .evaluate(images, &one, budget)
            .map_err(internal)?;
        let want = HahnStream::family(tail.clone()).take(LIMIT_CHECK, budget).map_err(internal)?;
        if replayed.take(LIMIT_CHECK, budget).map_err(internal)? != want {
            return Err(EngineError::Internal(format!("limit correction does not reproduce {tail}")));
        }
        return Ok(Some((rest, fc, tail.to_string())));
    }
    Ok(None)
}
