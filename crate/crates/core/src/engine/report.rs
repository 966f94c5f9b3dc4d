use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use super::run::FrameBasis;
use super::{fmt_fraction, fmt_monomial, Correction, EngineError, LogEntry, TraceEvent, ValuationSpec};
use crate::coeff::{GroundField, TowerElem};
use crate::hahn::{Budget, Exp, HahnStream};
use crate::lexgroup::SubgroupBasis;

/// How a slot of the final frame is accounted for.
#[derive(Clone, Debug)]
pub(crate) enum SlotOutcome {
    Basis,
    Residue { symbol: usize, generator: TowerElem, correction: Correction, image: HahnStream<TowerElem> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    Basis,
    Residue,
}

/// A transcendental generator of the residue field.
#[derive(Clone, Debug)]
pub struct Residue {
    pub symbol: String,
    pub slot: usize,
    /// Residue of `Z_j / Z^R`; a Möbius image of the symbol.
    pub generator: TowerElem,
    pub value: Exp,
    /// Laurent exponents over the final names.
    pub exponents: Vec<BigInt>,
    pub representative: String,
}

#[derive(Clone, Debug)]
pub struct MonomializationResult {
    pub field: GroundField,
    pub rank: usize,
    pub vars: Vec<String>,
    pub log: Vec<LogEntry>,
    pub basis: SubgroupBasis<BigInt>,
    pub basis_slots: Vec<usize>,
    pub kinds: Vec<SlotKind>,
    /// `ν(Z_j)` for the final coordinates.
    pub frame_values: Vec<Exp>,
    /// Values of the monomials named by `final_names`.
    pub final_values: Vec<Exp>,
    pub final_names: Vec<String>,
    /// Row `l` gives the exponents of `final_names[l]` over `Z`.
    pub transform: Vec<Vec<BigInt>>,
    /// Whether `final_names[l]` still equals the input variable `X_l`.
    pub clean: Vec<bool>,
    /// `φ(Z_j)`.
    pub final_images: Vec<HahnStream<TowerElem>>,
    /// Monomial model of `Z_j`.
    pub model: Vec<HahnStream<TowerElem>>,
    /// `ψ(X_l)` obtained by running the log backwards on the model.
    pub psi: Vec<HahnStream<TowerElem>>,
    pub residues: Vec<Residue>,
    pub residue_field: String,
    pub trace: Vec<TraceEvent>,
}

pub(crate) fn assemble(
    spec: &ValuationSpec,
    log: Vec<LogEntry>,
    images: Vec<HahnStream<TowerElem>>,
    fb: FrameBasis,
    outcomes: Vec<SlotOutcome>,
    trace: Vec<TraceEvent>,
    budget: &Budget,
) -> Result<MonomializationResult, EngineError> {
    let n = spec.n();
    let internal = |e: crate::hahn::HahnError| EngineError::Internal(e.to_string());
    let mut frame_values = Vec::with_capacity(n);
    let mut model = Vec::with_capacity(n);
    for (j, img) in images.iter().enumerate() {
        let (b, _) = img.lead(budget).map_err(|e| EngineError::from_hahn(&format!("Z{}", j + 1), e))?.ok_or_else(|| {
            EngineError::Dimension(format!("Z{} maps to zero", j + 1))
        })?;
        model.push(match &outcomes[j] {
            SlotOutcome::Basis => HahnStream::monomial(b.clone(), spec.ctx().int(1)),
            SlotOutcome::Residue { generator, .. } => HahnStream::monomial(b.clone(), generator.clone()),
        });
        frame_values.push(b);
    }

    let mut psi = model.clone();
    let one = spec.ctx().int(1);
    for entry in log.iter().rev() {
        match entry {
            LogEntry::CoordChange { j, correction } => {
                let extra = correction.evaluate(&psi, &one, budget).map_err(internal)?;
                psi[*j] = psi[*j].add(&extra);
            }
            LogEntry::Monoidal { l, i, q } => {
                let f = psi[*i].pow(q, budget).map_err(internal)?;
                psi[*l] = psi[*l].mul(&f);
            }
            LogEntry::SwapVars(a, b) => psi.swap(*a, *b),
        }
    }

    let mut w: Vec<Vec<BigInt>> = (0..n).map(|l| unit(n, l)).collect();
    let mut clean = vec![true; n];
    for entry in log.iter().rev() {
        match entry {
            LogEntry::Monoidal { l, i, q } => {
                let add: Vec<BigInt> = w[*i].iter().map(|a| a * q).collect();
                for (x, y) in w[*l].iter_mut().zip(add) {
                    *x += y;
                }
                clean[*l] = clean[*l] && clean[*i];
            }
            LogEntry::CoordChange { j, .. } => clean[*j] = false,
            LogEntry::SwapVars(a, b) => {
                w.swap(*a, *b);
                clean.swap(*a, *b);
            }
        }
    }
    let z = |s: usize| format!("Z{}", s + 1);
    let final_names: Vec<String> =
        (0..n).map(|l| if clean[l] { spec.vars[l].clone() } else { fmt_monomial(&w[l], &z) }).collect();
    let final_values: Vec<Exp> = w
        .iter()
        .map(|row| {
            let mut acc = Exp::zero(spec.rank);
            for (a, v) in row.iter().zip(&frame_values) {
                acc = acc.add_scaled(v, a);
            }
            acc
        })
        .collect();

    let mut residues = Vec::new();
    let mut kinds = Vec::with_capacity(n);
    for (j, out) in outcomes.iter().enumerate() {
        match out {
            SlotOutcome::Basis => kinds.push(SlotKind::Basis),
            SlotOutcome::Residue { symbol, generator, .. } => {
                kinds.push(SlotKind::Residue);
                let b = frame_values[j].clone();
                let coords = fb.basis.solve(&b).map_err(|e| EngineError::Internal(e.to_string()))?;
                let mut x: Vec<BigInt> = fb.exponents(&coords, n).iter().map(|a| -a).collect();
                x[j] += 1;
                let y = solve_transposed(&w, &x)?;
                let name = |s: usize| final_names[s].clone();
                residues.push(Residue {
                    symbol: spec.symbols.name(*symbol),
                    slot: j,
                    generator: generator.clone(),
                    value: b,
                    representative: fmt_fraction(&y, &name),
                    exponents: y,
                });
            }
        }
    }
    let residue_field = if residues.is_empty() {
        "k".to_string()
    } else {
        format!("k({})", residues.iter().map(|r| r.symbol.clone()).collect::<Vec<_>>().join(", "))
    };

    Ok(MonomializationResult {
        field: spec.field,
        rank: spec.rank,
        vars: spec.vars.clone(),
        log,
        basis: fb.basis,
        basis_slots: fb.slots,
        kinds,
        frame_values,
        final_values,
        final_names,
        transform: w,
        clean,
        final_images: images,
        model,
        psi,
        residues,
        residue_field,
        trace,
    })
}

fn unit(n: usize, k: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); n];
    v[k] = BigInt::one();
    v
}

/// Solves `Wᵀ y = x` over the rationals and insists on an integral answer.
fn solve_transposed(w: &[Vec<BigInt>], x: &[BigInt]) -> Result<Vec<BigInt>, EngineError> {
    let n = x.len();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|r| {
            let mut row: Vec<BigRational> = (0..n).map(|c| BigRational::from_integer(w[c][r].clone())).collect();
            row.push(BigRational::from_integer(x[r].clone()));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| EngineError::Internal("singular variable transform".into()))?;
        a.swap(col, p);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let k = a[r][col].clone();
                let pivot = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(&pivot) {
                    *v -= &k * pv;
                }
            }
        }
    }
    a.iter()
        .map(|row| {
            let v = &row[n];
            if v.is_integer() {
                Ok(v.to_integer())
            } else {
                Err(EngineError::Internal(format!("non-integral residue exponent {v}")))
            }
        })
        .collect()
}

impl MonomializationResult {
    pub fn n(&self) -> usize {
        self.vars.len()
    }

    /// Leading terms of `ψ(X_l)`, as far as the budget allows.
    pub fn psi_terms(&self, l: usize, count: usize, budget: &Budget) -> Result<Vec<(Exp, TowerElem)>, EngineError> {
        self.psi[l].take(count, budget).map_err(|e| EngineError::from_hahn(&self.vars[l], e))
    }

    pub fn log_lines(&self) -> Vec<String> {
        self.log.iter().map(|e| e.to_string()).collect()
    }

    pub fn to_json(&self, budget: &Budget) -> Value {
        let log: Vec<Value> = self
            .log
            .iter()
            .map(|e| match e {
                LogEntry::Monoidal { l, i, q } => {
                    json!({"kind": "monoidal", "l": l + 1, "i": i + 1, "q": q.to_string(), "text": e.to_string()})
                }
                LogEntry::SwapVars(a, b) => json!({"kind": "swap", "a": a + 1, "b": b + 1, "text": e.to_string()}),
                LogEntry::CoordChange { j, .. } => json!({"kind": "coordinate_change", "j": j + 1, "text": e.to_string()}),
            })
            .collect();
        let psi: Vec<Value> = (0..self.n())
            .map(|l| {
                let terms: Vec<Value> = match self.psi_terms(l, 10, budget) {
                    Ok(ts) => ts.iter().map(|(x, c)| json!([x.to_string(), c.to_string()])).collect(),
                    Err(e) => vec![json!({"error": e.to_string()})],
                };
                json!({
                    "var": self.vars[l],
                    "closed": self.psi[l].closed().map(|s| s.to_string()),
                    "terms": terms,
                })
            })
            .collect();
        let model: Vec<Value> = self
            .model
            .iter()
            .enumerate()
            .map(|(j, s)| {
                json!({
                    "var": format!("Z{}", j + 1),
                    "kind": match self.kinds[j] { SlotKind::Basis => "basis", SlotKind::Residue => "residue" },
                    "image": s.to_string(),
                })
            })
            .collect();
        let residues: Vec<Value> = self
            .residues
            .iter()
            .map(|r| {
                json!({
                    "symbol": r.symbol,
                    "slot": r.slot + 1,
                    "generator": r.generator.to_string(),
                    "value": r.value.to_string(),
                    "exponents": r.exponents.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                    "representative": r.representative,
                })
            })
            .collect();
        let trace: Vec<Value> = self
            .trace
            .iter()
            .map(|t| {
                json!({
                    "frame": t.frame,
                    "slot": t.slot.map(|s| s + 1),
                    "kind": t.kind.as_str(),
                    "value": t.value.as_ref().map(|v| v.to_string()),
                    "detail": t.detail,
                })
            })
            .collect();
        json!({
            "field": self.field.to_string(),
            "rank": self.rank,
            "vars": self.vars,
            "log": log,
            "basis": {
                "rows": self.basis.rows.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "pivots": self.basis.pivots.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                "pivot_columns": self.basis.pivot_cols,
                "slots": self.basis_slots.iter().map(|s| s + 1).collect::<Vec<_>>(),
            },
            "frame_values": self.frame_values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "final_names": self.final_names,
            "final_values": self.final_values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "model": model,
            "psi": psi,
            "residues": residues,
            "residue_field": self.residue_field,
            "trace": trace,
        })
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "transformations:");
        if self.log.is_empty() {
            let _ = writeln!(out, "  (none)");
        }
        for line in self.log_lines() {
            let _ = writeln!(out, "  {line}");
        }
        let _ = writeln!(out, "psi:");
        for (l, s) in self.psi.iter().enumerate() {
            let _ = writeln!(out, "  {} = {}", self.vars[l], s);
        }
        let _ = writeln!(out, "residue field: {}", self.residue_field);
        for r in &self.residues {
            let _ = writeln!(out, "  {} = residue of {} (value {})", r.symbol, r.representative, r.value);
        }
        let _ = writeln!(out, "monomial values:");
        for (name, v) in self.final_names.iter().zip(&self.final_values) {
            let _ = writeln!(out, "  v({name}) = {v}");
        }
        out
    }
}
