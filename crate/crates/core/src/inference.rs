//! Posterior engines for the attribute count `A` given sample evidence.
//!
//! [`posterior_general`] handles any prior by direct application of Bayes'
//! rule with the hypergeometric likelihood. The closed forms cover the
//! uniform prior, the uniform prior on `{0, ..., M}` and the binomial
//! partially specified prior, whose posterior for `A - a` is
//! Binomial(N - n, delta). [`assure`] picks the cheapest applicable engine.

use serde::Serialize;

use crate::combinatorics::{
    binom_cdf, ln_1m_exp, ln_binom_pmf_pq, ln_hypergeom_pmf, log_choose, log_sum_exp,
};
use crate::error::{domain, Error, Result};
use crate::plans::{marginal_accept_general, marginal_accept_psp, SamplingPlan};
use crate::prior::{LotFrame, Prior};

/// Which engine produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    General,
    UniformClosedForm,
    CombsStephens,
    ConjugatePsp,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::General => "general",
            Engine::UniformClosedForm => "uniform-closed-form",
            Engine::CombsStephens => "combs-stephens",
            Engine::ConjugatePsp => "conjugate-psp",
        }
    }
}

/// Normalized posterior mass over `A = 0, ..., N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorTable {
    pub mass: Vec<f64>,
    pub frame: LotFrame,
    pub engine: Engine,
}

impl PosteriorTable {
    pub fn p_zero(&self) -> f64 {
        self.mass[0]
    }

    /// `Pr{A <= k}`, summing smallest terms first.
    pub fn p_at_most(&self, k: u64) -> f64 {
        let upto = (k as usize).min(self.mass.len() - 1);
        let mut terms = self.mass[..=upto].to_vec();
        terms.sort_by(f64::total_cmp);
        terms.iter().sum::<f64>().clamp(0.0, 1.0)
    }
}

/// Log joint `ln P(a | A) + ln p(A)` for each `A`.
fn log_joint(prior: &Prior, frame: &LotFrame) -> Result<Vec<f64>> {
    let log_prior = prior.log_mass(frame.population)?;
    Ok(log_prior
        .iter()
        .enumerate()
        .map(|(count, lp)| {
            let ll = ln_hypergeom_pmf(frame.population, count as u64, frame.sample, frame.observed);
            if ll == f64::NEG_INFINITY || *lp == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                ll + lp
            }
        })
        .collect())
}

/// `ln P(evidence)` under `prior`, i.e. the log normalizer of the posterior.
pub fn log_evidence(prior: &Prior, frame: &LotFrame) -> Result<f64> {
    Ok(log_sum_exp(&log_joint(prior, frame)?))
}

/// Posterior for any prior: `p(A | a) ∝ P(a | A) p(A)`.
pub fn posterior_general(prior: &Prior, frame: &LotFrame) -> Result<PosteriorTable> {
    let joint = log_joint(prior, frame)?;
    let norm = log_sum_exp(&joint);
    if norm == f64::NEG_INFINITY {
        return Err(Error::Incompatible(format!(
            "{} prior gives zero probability to observing {} in a sample of {} from {}",
            prior.kind(),
            frame.observed,
            frame.sample,
            frame.population
        )));
    }
    Ok(PosteriorTable {
        mass: joint.iter().map(|l| (l - norm).exp()).collect(),
        frame: *frame,
        engine: Engine::General,
    })
}

fn check_sample(population: u64, sample: u64) -> Result<()> {
    if sample > population {
        return Err(domain(format!(
            "sample size {sample} exceeds population {population}"
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(domain(format!("delta must lie in [0, 1], got {delta}")));
    }
    Ok(())
}

/// `Pr{A = 0 | a = 0}` under the uniform prior: `(n + 1) / (N + 1)`.
pub fn p_zero_uniform(population: u64, sample: u64) -> Result<f64> {
    check_sample(population, sample)?;
    Ok((sample + 1) as f64 / (population + 1) as f64)
}

/// `Pr{A = 0 | a = 0}` under the uniform prior on `{0, ..., M}`:
/// `C(N, n) / [C(N + 1, n + 1) - C(N - M, n + 1)]`.
pub fn p_zero_bounded_uniform(population: u64, sample: u64, bound: u64) -> Result<f64> {
    check_sample(population, sample)?;
    if bound > population {
        return Err(domain(format!(
            "bound M = {bound} exceeds population {population}"
        )));
    }
    let n1 = sample as i64 + 1;
    let big = log_choose(population + 1, n1);
    let removed = log_choose(population - bound, n1) - big;
    let ln = log_choose(population, sample as i64) - big - ln_1m_exp(removed);
    Ok(ln.exp().clamp(0.0, 1.0))
}

/// Conjugate posterior under the binomial prior: `A - a ~ Binomial(N - n, delta)`.
pub fn posterior_psp(frame: &LotFrame, delta: f64) -> Result<PosteriorTable> {
    check_delta(delta)?;
    let rest = frame.population - frame.sample;
    let q = 1.0 - delta;
    let mass = (0..=frame.population)
        .map(|count| {
            if count < frame.observed || count > frame.max_count() {
                0.0
            } else {
                ln_binom_pmf_pq(count - frame.observed, rest, delta, q).exp()
            }
        })
        .collect();
    Ok(PosteriorTable {
        mass,
        frame: *frame,
        engine: Engine::ConjugatePsp,
    })
}

/// `Pr{A = 0 | a = 0} = (1 - delta)^(N - n)` under the binomial prior.
pub fn p_zero_psp(population: u64, sample: u64, delta: f64) -> Result<f64> {
    check_sample(population, sample)?;
    check_delta(delta)?;
    let rest = population - sample;
    if rest == 0 {
        return Ok(1.0);
    }
    Ok((rest as f64 * (-delta).ln_1p()).exp())
}

/// `Pr{A <= k | a}` under the binomial prior: the Binomial(N - n, delta)
/// CDF at `k - a`. Zero when `k < a`.
pub fn p_at_most_k_psp(frame: &LotFrame, delta: f64, k: u64) -> Result<f64> {
    check_delta(delta)?;
    if k < frame.observed {
        return Ok(0.0);
    }
    let rest = frame.population - frame.sample;
    binom_cdf(rest, delta, (k - frame.observed).min(rest))
}

/// Scalar assurance summaries with the inputs that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssuranceReport {
    pub p_zero: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_at_most_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal_accept: Option<f64>,
    pub engine: Engine,
    pub frame: LotFrame,
    pub prior: Prior,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<SamplingPlan>,
}

/// `Pr{A = 0 | evidence}` and optionally `Pr{A <= k | evidence}`, using a
/// closed form whenever one applies.
pub fn assure(prior: &Prior, frame: &LotFrame, k: Option<u64>) -> Result<AssuranceReport> {
    prior.validate_for(frame.population)?;
    let (n_pop, n) = (frame.population, frame.sample);
    let closed = match (prior, frame.observed, k) {
        (Prior::Uniform, 0, None) => {
            Some((p_zero_uniform(n_pop, n)?, None, Engine::UniformClosedForm))
        }
        (Prior::BoundedUniform { m }, 0, None) => Some((
            p_zero_bounded_uniform(n_pop, n, *m)?,
            None,
            Engine::CombsStephens,
        )),
        (Prior::BinomialPsp { delta }, observed, _) => {
            let p_zero = if observed == 0 {
                p_zero_psp(n_pop, n, *delta)?
            } else {
                0.0
            };
            let at_most = k.map(|k| p_at_most_k_psp(frame, *delta, k)).transpose()?;
            Some((p_zero, at_most, Engine::ConjugatePsp))
        }
        _ => None,
    };
    let (p_zero, p_at_most_k, engine) = match closed {
        Some(v) => v,
        None => {
            let table = posterior_general(prior, frame)?;
            (
                table.p_zero(),
                k.map(|k| table.p_at_most(k)),
                Engine::General,
            )
        }
    };
    Ok(AssuranceReport {
        p_zero,
        p_at_most_k,
        k,
        marginal_accept: None,
        engine,
        frame: *frame,
        prior: prior.clone(),
        plan: None,
    })
}

/// [`assure`] plus the prior-predictive probability that `plan` accepts.
pub fn assure_with_plan(
    prior: &Prior,
    frame: &LotFrame,
    k: Option<u64>,
    plan: &SamplingPlan,
) -> Result<AssuranceReport> {
    if plan.n != frame.sample {
        return Err(domain(format!(
            "plan sample size {} differs from frame sample size {}",
            plan.n, frame.sample
        )));
    }
    let mut report = assure(prior, frame, k)?;
    report.marginal_accept = Some(match (prior, plan.ac) {
        (Prior::BinomialPsp { delta }, 0) => marginal_accept_psp(plan.n, *delta)?,
        _ => marginal_accept_general(prior, frame.population, plan)?,
    });
    report.plan = Some(plan.clone());
    Ok(report)
}
