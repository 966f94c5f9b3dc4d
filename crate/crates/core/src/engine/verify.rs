use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{one_of, EngineError, LogEntry, MonomializationResult, ValuationSpec};
use crate::coeff::{GroundElem, GroundField, TowerElem};
use crate::hahn::{Budget, Exp, HahnStream};
use crate::series::TruncSeries;

/// `φ` of the coordinates reached after running `log` forward.
pub fn replay_images(spec: &ValuationSpec, log: &[LogEntry], budget: &Budget) -> Result<Vec<HahnStream<TowerElem>>, EngineError> {
    let one = one_of(spec);
    let mut images = spec.images.clone();
    for entry in log {
        match entry {
            LogEntry::Monoidal { l, i, q } => {
                let slot = format!("Y{}", l + 1);
                let div = images[*i].pow(&-q, budget).map_err(|e| EngineError::from_hahn(&slot, e))?;
                images[*l] = images[*l].mul(&div);
            }
            LogEntry::SwapVars(a, b) => images.swap(*a, *b),
            LogEntry::CoordChange { j, correction } => {
                let slot = format!("Z{}", j + 1);
                let c = correction.evaluate(&images, &one, budget).map_err(|e| EngineError::from_hahn(&slot, e))?;
                images[*j] = images[*j].sub(&c);
            }
        }
    }
    Ok(images)
}

/// A polynomial whose value disagreed with the monomial prediction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub polynomial: String,
    pub expected: Option<Exp>,
    pub found: Option<Exp>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub checked: usize,
    /// Polynomials whose value could not be certified within the budget.
    pub skipped: usize,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.checked > 0
    }
}

/// Samples `count` polynomials in the final names and compares their
/// valuation under the replayed presentation with the monomial valuation
/// given by `final_values`.
pub fn verify_monomial(
    spec: &ValuationSpec,
    result: &MonomializationResult,
    count: usize,
    seed: u64,
) -> Result<VerifyReport, EngineError> {
    let budget = spec.budgets.stream_budget();
    let n = spec.n();
    let one = one_of(spec);
    let z = replay_images(spec, &result.log, &budget)?;
    let names: Vec<HahnStream<TowerElem>> = result
        .transform
        .iter()
        .map(|row| HahnStream::monomial_image(row, &z, &one, &budget))
        .collect::<Result<_, _>>()
        .map_err(|e| EngineError::from_hahn("verify", e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport::default();
    let degree = spec.budgets.trunc_degree;
    for _ in 0..count {
        let terms = random_polynomial(&mut rng, spec.field, n, degree);
        let ctx = spec.ctx();
        let poly = TruncSeries::from_terms(
            n,
            terms.iter().map(|(a, c)| (a.clone(), GroundElem::int(spec.field, *c))),
            None,
        );
        let expected = match poly.monomial_value(&result.final_values) {
            Ok(v) => v,
            Err(e) => return Err(EngineError::Internal(e.to_string())),
        };
        let mut image = HahnStream::zero(spec.rank);
        for (a, c) in &terms {
            let r: Vec<BigInt> = a.iter().map(|&x| BigInt::from(x)).collect();
            let m = HahnStream::monomial_image(&r, &names, &one, &budget).map_err(|e| EngineError::from_hahn("verify", e))?;
            image = image.add(&m.scale(&ctx.int(*c)));
        }
        match image.nu_t(&budget) {
            Ok(found) => {
                report.checked += 1;
                if found != expected {
                    report.mismatches.push(Mismatch { polynomial: poly.to_string(), expected, found });
                }
            }
            Err(_) => report.skipped += 1,
        }
    }
    Ok(report)
}

fn random_polynomial(rng: &mut ChaCha8Rng, field: GroundField, n: usize, degree: u32) -> Vec<(Vec<u32>, i64)> {
    let count = rng.gen_range(1..=5);
    (0..count)
        .map(|_| {
            let total = rng.gen_range(0..=degree);
            let mut a = vec![0u32; n];
            for _ in 0..total {
                a[rng.gen_range(0..n)] += 1;
            }
            let c = match field {
                GroundField::Prime(p) => rng.gen_range(1..p.min(1 << 20)) as i64,
                GroundField::Rationals => {
                    let v = rng.gen_range(1..=9i64);
                    if rng.gen_bool(0.5) {
                        -v
                    } else {
                        v
                    }
                }
            };
            (a, c)
        })
        .collect()
}
