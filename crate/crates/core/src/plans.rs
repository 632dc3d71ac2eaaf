//! Single sampling plans: the accept/reject rule, AQL-based elicitation,
//! acceptance probabilities and plan tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{ln_hypergeom_pmf, log_sum_exp};
use crate::error::{domain, Error, Result};
use crate::prior::Prior;

pub const DEFAULT_ELICIT_FACTOR: f64 = 0.5;

/// The plan table shipped with the crate (the two plans used in the docs).
pub const BUILTIN_PLAN_TABLE: &str = include_str!("../data/plans.csv");

/// A single sampling plan: inspect `n` items, accept when at most `ac` carry
/// the attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub n: u64,
    pub ac: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aql: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lot_range: Option<(u64, u64)>,
}

impl SamplingPlan {
    pub fn new(n: u64, ac: u64) -> Result<Self> {
        let plan = SamplingPlan {
            n,
            ac,
            aql: None,
            lot_range: None,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_aql(mut self, aql: f64) -> Result<Self> {
        self.aql = Some(aql);
        self.validate()?;
        Ok(self)
    }

    pub fn with_lot_range(mut self, min: u64, max: u64) -> Result<Self> {
        self.lot_range = Some((min, max));
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidPlan("sample size must be at least 1".into()));
        }
        if self.ac > self.n {
            return Err(Error::InvalidPlan(format!(
                "acceptance number {} exceeds sample size {}",
                self.ac, self.n
            )));
        }
        if let Some(aql) = self.aql {
            if !(aql > 0.0 && aql < 1.0) {
                return Err(Error::InvalidPlan(format!(
                    "AQL must lie in (0, 1), got {aql}"
                )));
            }
        }
        if let Some((min, max)) = self.lot_range {
            if min > max {
                return Err(Error::InvalidPlan(format!(
                    "lot range [{min}, {max}] is empty"
                )));
            }
        }
        Ok(())
    }

    pub fn covers(&self, lot_size: u64) -> bool {
        self.lot_range
            .is_some_and(|(min, max)| (min..=max).contains(&lot_size))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub observed: u64,
    pub plan: SamplingPlan,
}

/// Accept iff `a <= Ac`.
pub fn decide(plan: &SamplingPlan, observed: u64) -> Result<Decision> {
    if observed > plan.n {
        return Err(domain(format!(
            "observed count {observed} exceeds sample size {}",
            plan.n
        )));
    }
    let verdict = if observed <= plan.ac {
        Verdict::Accept
    } else {
        Verdict::Reject
    };
    Ok(Decision {
        verdict,
        observed,
        plan: plan.clone(),
    })
}

/// The binomial prior parameter implied by an AQL: `factor * aql`.
pub fn elicit_delta(aql: f64, factor: f64) -> Result<f64> {
    if !(aql > 0.0 && aql < 1.0) {
        return Err(domain(format!("AQL must lie in (0, 1), got {aql}")));
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(domain(format!(
            "elicitation factor must be positive, got {factor}"
        )));
    }
    let delta = factor * aql;
    if delta > 1.0 {
        return Err(domain(format!("elicited delta {delta} exceeds 1")));
    }
    Ok(delta)
}

/// `floor(N * aql)`, nudged up by half an ulp first so products such as
/// `10000 * 0.004` land on the intended integer.
pub fn quality_threshold_k(population: u64, aql: f64) -> Result<u64> {
    if !(aql > 0.0 && aql < 1.0) {
        return Err(domain(format!("AQL must lie in (0, 1), got {aql}")));
    }
    let x = population as f64 * aql;
    let ulp = f64::from_bits(x.to_bits() + 1) - x;
    Ok((x + 0.5 * ulp).floor() as u64)
}

/// `(1 - delta)^n`: prior-predictive probability that a sample of `n` is
/// clean under the binomial prior.
pub fn marginal_accept_psp(sample: u64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(domain(format!("delta must lie in [0, 1], got {delta}")));
    }
    if sample == 0 {
        return Ok(1.0);
    }
    Ok((sample as f64 * (-delta).ln_1p()).exp())
}

/// `ln P(a <= Ac | A)`. Callers validate `n <= N`, `A <= N`.
pub(crate) fn ln_accept_given_count(population: u64, count: u64, plan: &SamplingPlan) -> f64 {
    let terms: Vec<f64> = (0..=plan.ac.min(count))
        .map(|a| ln_hypergeom_pmf(population, count, plan.n, a))
        .collect();
    log_sum_exp(&terms).min(0.0)
}

fn check_plan_fits(population: u64, plan: &SamplingPlan) -> Result<()> {
    if plan.n > population {
        return Err(domain(format!(
            "plan sample size {} exceeds population {population}",
            plan.n
        )));
    }
    Ok(())
}

/// Prior-predictive acceptance probability `sum_A p(A) P(a <= Ac | A)`.
pub fn marginal_accept_general(prior: &Prior, population: u64, plan: &SamplingPlan) -> Result<f64> {
    check_plan_fits(population, plan)?;
    let log_prior = prior.log_mass(population)?;
    let terms: Vec<f64> = log_prior
        .iter()
        .enumerate()
        .map(|(count, lp)| {
            if *lp == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                lp + ln_accept_given_count(population, count as u64, plan)
            }
        })
        .collect();
    Ok(log_sum_exp(&terms).exp().clamp(0.0, 1.0))
}

/// Operating characteristic: `P(a <= Ac | A)` at each requested `A`.
pub fn oc_curve(plan: &SamplingPlan, population: u64, counts: &[u64]) -> Result<Vec<(u64, f64)>> {
    check_plan_fits(population, plan)?;
    counts
        .iter()
        .map(|&count| {
            if count > population {
                return Err(domain(format!(
                    "attribute count {count} exceeds population {population}"
                )));
            }
            Ok((count, ln_accept_given_count(population, count, plan).exp()))
        })
        .collect()
}

/// Plans indexed by lot-size range and AQL.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanTable {
    plans: Vec<SamplingPlan>,
}

const PLAN_COLUMNS: [&str; 5] = ["lot_min", "lot_max", "aql", "n", "ac"];

impl PlanTable {
    pub fn builtin() -> PlanTable {
        PlanTable::from_reader(BUILTIN_PLAN_TABLE.as_bytes()).expect("builtin plan table is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<PlanTable> {
        let file = std::fs::File::open(path)?;
        PlanTable::from_reader(file)
    }

    /// Parses `lot_min,lot_max,aql,n,ac` rows (header required).
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<PlanTable> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::PlanParse {
            line: 1,
            column: 1,
            message: e.to_string(),
        })?;
        for (i, want) in PLAN_COLUMNS.iter().enumerate() {
            if headers.get(i) != Some(want) {
                return Err(Error::PlanParse {
                    line: 1,
                    column: i + 1,
                    message: format!("expected header {want:?}, got {:?}", headers.get(i)),
                });
            }
        }

        let mut plans = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::PlanParse {
                line: e.position().map_or(0, |p| p.line()),
                column: 1,
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let field = |column: usize| -> &str { rec.get(column).unwrap_or("") };
            let int = |column: usize| -> Result<u64> {
                field(column).parse().map_err(|_| Error::PlanParse {
                    line,
                    column: column + 1,
                    message: format!(
                        "{}: expected an integer, got {:?}",
                        PLAN_COLUMNS[column],
                        field(column)
                    ),
                })
            };
            let (lot_min, lot_max) = (int(0)?, int(1)?);
            let aql: f64 = field(2).parse().map_err(|_| Error::PlanParse {
                line,
                column: 3,
                message: format!("aql: expected a decimal fraction, got {:?}", field(2)),
            })?;
            let (n, ac) = (int(3)?, int(4)?);
            let plan = SamplingPlan::new(n, ac)
                .and_then(|p| p.with_aql(aql))
                .and_then(|p| p.with_lot_range(lot_min, lot_max))
                .map_err(|e| Error::PlanParse {
                    line,
                    column: 1,
                    message: e.to_string(),
                })?;
            plans.push(plan);
        }
        let table = PlanTable { plans };
        table.check_overlaps()?;
        Ok(table)
    }

    fn check_overlaps(&self) -> Result<()> {
        for (i, a) in self.plans.iter().enumerate() {
            for b in &self.plans[i + 1..] {
                let (Some((a0, a1)), Some((b0, b1))) = (a.lot_range, b.lot_range) else {
                    continue;
                };
                if a.aql == b.aql && a0 <= b1 && b0 <= a1 {
                    return Err(Error::PlanOverlap {
                        aql: a.aql.unwrap_or(f64::NAN),
                        first_min: a0,
                        first_max: a1,
                        second_min: b0,
                        second_max: b1,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn plans(&self) -> &[SamplingPlan] {
        &self.plans
    }

    /// The plan whose lot range contains `lot_size` at exactly this AQL.
    pub fn lookup(&self, lot_size: u64, aql: f64) -> Result<&SamplingPlan> {
        self.plans
            .iter()
            .find(|p| p.aql == Some(aql) && p.covers(lot_size))
            .ok_or(Error::NoPlan { lot_size, aql })
    }
}
