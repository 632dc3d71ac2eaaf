//! Independent checks on the posterior engines.
//!
//! [`enumerate_conditional`] computes `P(A | accept)` exactly by summing the
//! hypergeometric likelihood over every accepting outcome.
//! [`simulate_conditional`] estimates the same distribution by generating
//! lots from the prior, inspecting them with the plan and keeping the
//! accepted ones. Each trial draws from its own ChaCha8 stream (stream index
//! = trial number), so results do not depend on how trials are split across
//! threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{log_sum_exp, total_variation};
use crate::error::{domain, Error, Result};
use crate::inference::{posterior_psp, PosteriorTable};
use crate::plans::{ln_accept_given_count, SamplingPlan};
use crate::prior::{LotFrame, Prior};

pub const DEFAULT_ENUMERATION_LIMIT: u64 = 5000;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub prior: Prior,
    pub population: u64,
    pub plan: SamplingPlan,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(domain("simulation needs at least one trial"));
        }
        if self.plan.n > self.population {
            return Err(domain(format!(
                "plan sample size {} exceeds population {}",
                self.plan.n, self.population
            )));
        }
        self.prior.validate_for(self.population)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentTally {
    pub drawn: u64,
    pub accepted: u64,
    pub counts: Vec<u64>,
}

/// Occurrences of each `A` among accepted lots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalConditional {
    pub counts: Vec<u64>,
    pub accepted: u64,
    pub total: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component_counts: Option<Vec<ComponentTally>>,
}

impl EmpiricalConditional {
    fn empty(population: u64, components: Option<usize>) -> Self {
        let len = population as usize + 1;
        EmpiricalConditional {
            counts: vec![0; len],
            accepted: 0,
            total: 0,
            component_counts: components.map(|c| {
                vec![
                    ComponentTally {
                        drawn: 0,
                        accepted: 0,
                        counts: vec![0; len],
                    };
                    c
                ]
            }),
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.accepted += other.accepted;
        self.total += other.total;
        if let (Some(mine), Some(theirs)) = (&mut self.component_counts, other.component_counts) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                m.drawn += t.drawn;
                m.accepted += t.accepted;
                for (a, b) in m.counts.iter_mut().zip(&t.counts) {
                    *a += b;
                }
            }
        }
        self
    }

    /// True when no lot was accepted; the conditional is then undefined.
    pub fn is_empty(&self) -> bool {
        self.accepted == 0
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.total as f64
    }

    /// Empirical `P(A | accept)`; all zeros when nothing was accepted.
    pub fn frequencies(&self) -> Vec<f64> {
        if self.accepted == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / self.accepted as f64)
            .collect()
    }
}

/// Inverse-CDF tables for drawing a component and then `A` from it.
struct LotSampler {
    component_cdf: Vec<f64>,
    count_cdfs: Vec<Vec<f64>>,
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    let total = acc;
    for c in &mut cdf {
        *c /= total;
    }
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

fn draw_index(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl LotSampler {
    fn new(prior: &Prior, population: u64) -> Result<Self> {
        match prior {
            Prior::Mixed { components } => {
                let count_cdfs = components
                    .iter()
                    .map(|c| {
                        Prior::binomial_psp(c.p)?
                            .mass(population)
                            .map(|m| cumulative(m.into_iter()))
                    })
                    .collect::<Result<_>>()?;
                Ok(LotSampler {
                    component_cdf: cumulative(components.iter().map(|c| c.weight)),
                    count_cdfs,
                })
            }
            _ => Ok(LotSampler {
                component_cdf: vec![1.0],
                count_cdfs: vec![cumulative(prior.mass(population)?.into_iter())],
            }),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> (usize, u64) {
        let component = if self.component_cdf.len() == 1 {
            0
        } else {
            draw_index(&self.component_cdf, rng.random())
        };
        let count = draw_index(&self.count_cdfs[component], rng.random());
        (component, count as u64)
    }
}

/// Sequential draws without replacement; stops once the verdict is known.
fn inspect<R: Rng>(rng: &mut R, population: u64, count: u64, plan: &SamplingPlan) -> bool {
    let mut marked = count;
    let mut remaining = population;
    let mut found = 0;
    for _ in 0..plan.n {
        if marked == 0 {
            break;
        }
        if rng.random::<f64>() * (remaining as f64) < marked as f64 {
            found += 1;
            marked -= 1;
            if found > plan.ac {
                return false;
            }
        }
        remaining -= 1;
    }
    true
}

/// Monte Carlo estimate of `P(A | accept)`; bit-identical for a given
/// config regardless of thread count.
pub fn simulate_conditional(config: &SimConfig) -> Result<EmpiricalConditional> {
    config.validate()?;
    let sampler = LotSampler::new(&config.prior, config.population)?;
    let mixed = matches!(config.prior, Prior::Mixed { .. });
    let ncomp = mixed.then_some(sampler.count_cdfs.len());
    let seed = ChaCha8Rng::seed_from_u64(config.seed).get_seed();
    let chunks = config.trials.div_ceil(CHUNK);

    let result = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut tally = EmpiricalConditional::empty(config.population, ncomp);
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(config.trials);
            for trial in start..end {
                let mut rng = ChaCha8Rng::from_seed(seed);
                rng.set_stream(trial);
                let (component, count) = sampler.draw(&mut rng);
                let accepted = inspect(&mut rng, config.population, count, &config.plan);
                tally.total += 1;
                if let Some(comps) = &mut tally.component_counts {
                    comps[component].drawn += 1;
                }
                if accepted {
                    tally.accepted += 1;
                    tally.counts[count as usize] += 1;
                    if let Some(comps) = &mut tally.component_counts {
                        comps[component].accepted += 1;
                        comps[component].counts[count as usize] += 1;
                    }
                }
            }
            tally
        })
        .reduce(
            || EmpiricalConditional::empty(config.population, ncomp),
            EmpiricalConditional::merge,
        );
    Ok(result)
}

/// Exact `P(A | accept) ∝ p(A) P(a <= Ac | A)` with the default size guard.
pub fn enumerate_conditional(
    prior: &Prior,
    population: u64,
    plan: &SamplingPlan,
) -> Result<Vec<f64>> {
    enumerate_conditional_with_limit(prior, population, plan, DEFAULT_ENUMERATION_LIMIT)
}

pub fn enumerate_conditional_with_limit(
    prior: &Prior,
    population: u64,
    plan: &SamplingPlan,
    limit: u64,
) -> Result<Vec<f64>> {
    if population > limit {
        return Err(Error::CostGuard { population, limit });
    }
    let joint = log_accept_joint(prior, population, plan)?;
    let norm = log_sum_exp(&joint);
    if norm == f64::NEG_INFINITY {
        return Err(Error::Incompatible(format!(
            "{} prior gives zero probability of acceptance under plan n={}, Ac={}",
            prior.kind(),
            plan.n,
            plan.ac
        )));
    }
    Ok(joint.iter().map(|l| (l - norm).exp()).collect())
}

fn log_accept_joint(prior: &Prior, population: u64, plan: &SamplingPlan) -> Result<Vec<f64>> {
    if plan.n > population {
        return Err(domain(format!(
            "plan sample size {} exceeds population {population}",
            plan.n
        )));
    }
    Ok(prior
        .log_mass(population)?
        .iter()
        .enumerate()
        .map(|(count, lp)| {
            if *lp == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                lp + ln_accept_given_count(population, count as u64, plan)
            }
        })
        .collect())
}

/// Side-by-side view of the partially specified prior's posterior and the
/// exact conditionals under the full mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureComparison {
    pub good_index: usize,
    /// Conjugate posterior from the good component alone, one table per
    /// accepting outcome `a = 0, ..., Ac`.
    pub psp_posteriors: Vec<PosteriorTable>,
    /// `P(A | accept)` under the whole mixture.
    pub mixture_conditional: Vec<f64>,
    /// `P(A | accept, good component)`.
    pub good_conditional: Vec<f64>,
    /// `P(component | accept)` for every component.
    pub component_weights: Vec<f64>,
    /// TV between the `a = 0` PSP posterior and the mixture conditional.
    pub tv_psp_vs_mixture: f64,
    /// TV between the `a = 0` PSP posterior and the good-component conditional.
    pub tv_psp_vs_good: f64,
    pub tv_good_vs_mixture: f64,
}

pub fn psp_vs_mixture_report(
    mixed: &Prior,
    good_index: usize,
    population: u64,
    plan: &SamplingPlan,
) -> Result<MixtureComparison> {
    psp_vs_mixture_report_with_limit(
        mixed,
        good_index,
        population,
        plan,
        DEFAULT_ENUMERATION_LIMIT,
    )
}

pub fn psp_vs_mixture_report_with_limit(
    mixed: &Prior,
    good_index: usize,
    population: u64,
    plan: &SamplingPlan,
    limit: u64,
) -> Result<MixtureComparison> {
    let good = mixed.restrict_to_component(good_index)?;
    let Prior::Mixed { components } = mixed else {
        return Err(Error::NotMixed);
    };
    let Prior::BinomialPsp { delta } = good else {
        unreachable!("restrict_to_component yields a binomial prior");
    };

    let psp_posteriors = (0..=plan.ac.min(plan.n))
        .map(|a| posterior_psp(&LotFrame::new(population, plan.n, a)?, delta))
        .collect::<Result<Vec<_>>>()?;
    let mixture_conditional = enumerate_conditional_with_limit(mixed, population, plan, limit)?;
    let good_conditional = enumerate_conditional_with_limit(&good, population, plan, limit)?;

    let log_accept = components
        .iter()
        .map(|c| {
            let joint = log_accept_joint(&Prior::binomial_psp(c.p)?, population, plan)?;
            Ok(c.weight.ln() + log_sum_exp(&joint))
        })
        .collect::<Result<Vec<f64>>>()?;
    let norm = log_sum_exp(&log_accept);
    let component_weights = log_accept.iter().map(|l| (l - norm).exp()).collect();

    let psp0 = &psp_posteriors[0].mass;
    Ok(MixtureComparison {
        good_index,
        tv_psp_vs_mixture: total_variation(psp0, &mixture_conditional),
        tv_psp_vs_good: total_variation(psp0, &good_conditional),
        tv_good_vs_mixture: total_variation(&good_conditional, &mixture_conditional),
        psp_posteriors,
        mixture_conditional,
        good_conditional,
        component_weights,
    })
}
