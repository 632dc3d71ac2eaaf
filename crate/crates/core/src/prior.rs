//! Prior families over the attribute count `A` in `{0, ..., N}`.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{ln_binom_pmf_pq, log_sum_exp};
use crate::error::{domain, Error, Result};

const MIX_WEIGHT_TOL: f64 = 1e-12;

/// The finite population and the sample evidence drawn from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LotFrame {
    pub population: u64,
    pub sample: u64,
    pub observed: u64,
}

impl LotFrame {
    pub fn new(population: u64, sample: u64, observed: u64) -> Result<Self> {
        if sample > population {
            return Err(domain(format!(
                "sample size {sample} exceeds population {population}"
            )));
        }
        if observed > sample {
            return Err(domain(format!(
                "observed count {observed} exceeds sample size {sample}"
            )));
        }
        Ok(LotFrame {
            population,
            sample,
            observed,
        })
    }

    /// Largest `A` compatible with the evidence: `N - n + a`.
    pub fn max_count(&self) -> u64 {
        self.population - self.sample + self.observed
    }
}

/// One binomial lot-quality state of a mixed prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixComponent {
    pub weight: f64,
    pub p: f64,
}

/// A prior on `A`. Construct through the checked constructors; the JSON form
/// is tagged by `kind` (`uniform`, `bounded_uniform`, `psp`, `mixed`,
/// `tabulated`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "PriorSpec")]
pub enum Prior {
    Uniform,
    BoundedUniform {
        m: u64,
    },
    #[serde(rename = "psp")]
    BinomialPsp {
        delta: f64,
    },
    Mixed {
        components: Vec<MixComponent>,
    },
    Tabulated {
        mass: Vec<f64>,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PriorSpec {
    Uniform,
    #[serde(alias = "bounded-uniform")]
    BoundedUniform {
        #[serde(alias = "M")]
        m: u64,
    },
    #[serde(alias = "binomial_psp", alias = "binomial")]
    Psp {
        delta: f64,
    },
    Mixed {
        components: Vec<MixComponent>,
    },
    Tabulated {
        mass: Vec<f64>,
    },
}

impl TryFrom<PriorSpec> for Prior {
    type Error = Error;

    fn try_from(spec: PriorSpec) -> Result<Self> {
        match spec {
            PriorSpec::Uniform => Ok(Prior::Uniform),
            PriorSpec::BoundedUniform { m } => Ok(Prior::BoundedUniform { m }),
            PriorSpec::Psp { delta } => Prior::binomial_psp(delta),
            PriorSpec::Mixed { components } => Prior::mixed(components),
            PriorSpec::Tabulated { mass } => Prior::tabulated(mass),
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidPrior(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

impl Prior {
    pub fn bounded_uniform(m: u64) -> Prior {
        Prior::BoundedUniform { m }
    }

    pub fn binomial_psp(delta: f64) -> Result<Prior> {
        check_unit("delta", delta)?;
        Ok(Prior::BinomialPsp { delta })
    }

    pub fn mixed(components: Vec<MixComponent>) -> Result<Prior> {
        if components.is_empty() {
            return Err(Error::InvalidPrior(
                "mixture needs at least one component".into(),
            ));
        }
        for c in &components {
            check_unit("mixture weight", c.weight)?;
            check_unit("mixture p", c.p)?;
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > MIX_WEIGHT_TOL {
            return Err(Error::InvalidPrior(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        Ok(Prior::Mixed { components })
    }

    /// Normalizes `mass` to sum 1.
    pub fn tabulated(mass: Vec<f64>) -> Result<Prior> {
        if mass.is_empty() {
            return Err(Error::InvalidPrior("tabulated prior is empty".into()));
        }
        if let Some(bad) = mass.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidPrior(format!(
                "tabulated masses must be finite and nonnegative, got {bad}"
            )));
        }
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPrior("tabulated masses sum to zero".into()));
        }
        Ok(Prior::Tabulated {
            mass: mass.into_iter().map(|v| v / total).collect(),
        })
    }

    /// Reads a one-column CSV of masses; a non-numeric first row is taken as
    /// a header.
    pub fn tabulated_from_csv<R: std::io::Read>(reader: R) -> Result<Prior> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut mass = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidPrior(format!("prior CSV: {e}")))?;
            let field = rec.get(0).unwrap_or("");
            match field.parse::<f64>() {
                Ok(v) => mass.push(v),
                Err(_) if i == 0 => continue,
                Err(_) => {
                    return Err(Error::InvalidPrior(format!(
                        "prior CSV line {}: not a number: {field:?}",
                        i + 1
                    )))
                }
            }
        }
        Prior::tabulated(mass)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Prior::Uniform => "uniform",
            Prior::BoundedUniform { .. } => "bounded_uniform",
            Prior::BinomialPsp { .. } => "psp",
            Prior::Mixed { .. } => "mixed",
            Prior::Tabulated { .. } => "tabulated",
        }
    }

    /// Checks the invariants that depend on the population size.
    pub fn validate_for(&self, population: u64) -> Result<()> {
        match self {
            Prior::Uniform => Ok(()),
            Prior::BoundedUniform { m } if *m > population => Err(Error::InvalidPrior(format!(
                "bound M = {m} exceeds population {population}"
            ))),
            Prior::BoundedUniform { .. } => Ok(()),
            Prior::BinomialPsp { delta } => check_unit("delta", *delta),
            Prior::Mixed { components } => Prior::mixed(components.clone()).map(|_| ()),
            Prior::Tabulated { mass } if mass.len() as u64 != population + 1 => {
                Err(Error::InvalidPrior(format!(
                    "tabulated prior has {} entries, population {population} needs {}",
                    mass.len(),
                    population + 1
                )))
            }
            Prior::Tabulated { .. } => Ok(()),
        }
    }

    /// Natural-log prior mass for `A = 0, ..., N`.
    ///
    /// Binomial families stay representable where their linear masses would
    /// underflow.
    pub fn log_mass(&self, population: u64) -> Result<Vec<f64>> {
        self.validate_for(population)?;
        let len = population as usize + 1;
        let v = match self {
            Prior::Uniform => vec![-((population + 1) as f64).ln(); len],
            Prior::BoundedUniform { m } => {
                let level = -((m + 1) as f64).ln();
                (0..=population)
                    .map(|a| if a <= *m { level } else { f64::NEG_INFINITY })
                    .collect()
            }
            Prior::BinomialPsp { delta } => binomial_log_mass(population, *delta),
            Prior::Mixed { components } => {
                let per: Vec<Vec<f64>> = components
                    .iter()
                    .map(|c| {
                        let lw = c.weight.ln();
                        binomial_log_mass(population, c.p)
                            .into_iter()
                            .map(|l| lw + l)
                            .collect()
                    })
                    .collect();
                (0..len)
                    .map(|a| {
                        let col: Vec<f64> = per.iter().map(|row| row[a]).collect();
                        log_sum_exp(&col)
                    })
                    .collect()
            }
            Prior::Tabulated { mass } => mass.iter().map(|v| v.ln()).collect(),
        };
        Ok(v)
    }

    /// Prior mass `p(A)` for `A = 0, ..., N`.
    pub fn mass(&self, population: u64) -> Result<Vec<f64>> {
        Ok(self
            .log_mass(population)?
            .into_iter()
            .map(f64::exp)
            .collect())
    }

    /// The partially specified prior: keep one mixture component as a
    /// standalone binomial prior.
    pub fn restrict_to_component(&self, index: usize) -> Result<Prior> {
        let Prior::Mixed { components } = self else {
            return Err(Error::NotMixed);
        };
        let c = components.get(index).ok_or(Error::ComponentIndex {
            index,
            len: components.len(),
        })?;
        Prior::binomial_psp(c.p)
    }
}

fn binomial_log_mass(population: u64, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    (0..=population)
        .map(|a| ln_binom_pmf_pq(a, population, p, q))
        .collect()
}

/// Free-function form of [`Prior::mass`].
pub fn prior_mass(prior: &Prior, population: u64) -> Result<Vec<f64>> {
    prior.mass(population)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(weight: f64, p: f64) -> MixComponent {
        MixComponent { weight, p }
    }

    #[test]
    fn uniform_mass() {
        let m = Prior::Uniform.mass(4).unwrap();
        assert_eq!(m.len(), 5);
        for v in m {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn psp_zero_delta_is_point_mass() {
        let m = Prior::binomial_psp(0.0).unwrap().mass(17).unwrap();
        assert_eq!(m[0], 1.0);
        assert!(m[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bounded_uniform_at_population_is_uniform() {
        for n in [0u64, 1, 7, 250] {
            assert_eq!(
                Prior::bounded_uniform(n).mass(n).unwrap(),
                Prior::Uniform.mass(n).unwrap()
            );
        }
        let m = Prior::bounded_uniform(3).mass(10).unwrap();
        assert!((m[3] - 0.25).abs() < 1e-15 && m[4] == 0.0);
        assert!(Prior::bounded_uniform(11).mass(10).is_err());
    }

    #[test]
    fn single_component_mixture_matches_psp() {
        let mix = Prior::mixed(vec![comp(1.0, 0.037)])
            .unwrap()
            .mass(300)
            .unwrap();
        let psp = Prior::binomial_psp(0.037).unwrap().mass(300).unwrap();
        for (a, b) in mix.iter().zip(&psp) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn mixed_validation() {
        assert!(Prior::mixed(vec![]).is_err());
        assert!(Prior::mixed(vec![comp(0.5, 0.1), comp(0.4, 0.2)]).is_err());
        assert!(Prior::mixed(vec![comp(0.5, 0.1), comp(0.5, 1.2)]).is_err());
        assert!(Prior::mixed(vec![comp(0.5, 0.1), comp(0.5, 0.2)]).is_ok());
    }

    #[test]
    fn tabulated_normalizes_and_checks_length() {
        let p = Prior::tabulated(vec![1.0, 3.0]).unwrap();
        assert_eq!(
            p,
            Prior::Tabulated {
                mass: vec![0.25, 0.75]
            }
        );
        assert!(p.mass(1).is_ok());
        assert!(p.mass(2).is_err());
        assert!(Prior::tabulated(vec![0.0, 0.0]).is_err());
        assert!(Prior::tabulated(vec![1.0, -0.1]).is_err());
        assert!(Prior::tabulated(vec![]).is_err());
    }

    #[test]
    fn tabulated_csv() {
        let p = Prior::tabulated_from_csv("mass\n1\n1\n2\n".as_bytes()).unwrap();
        assert_eq!(
            p,
            Prior::Tabulated {
                mass: vec![0.25, 0.25, 0.5]
            }
        );
        assert!(Prior::tabulated_from_csv("1\nx\n".as_bytes()).is_err());
    }

    #[test]
    fn restrict_to_component_extracts_psp() {
        let mix = Prior::mixed(vec![comp(0.95, 0.0005), comp(0.05, 0.05)]).unwrap();
        assert_eq!(
            mix.restrict_to_component(0).unwrap(),
            Prior::BinomialPsp { delta: 0.0005 }
        );
        let single = Prior::mixed(vec![comp(1.0, 0.002)]).unwrap();
        assert_eq!(
            single.restrict_to_component(0).unwrap(),
            Prior::BinomialPsp { delta: 0.002 }
        );
        let three = Prior::mixed(vec![comp(0.5, 0.01), comp(0.3, 0.1), comp(0.2, 0.3)]).unwrap();
        assert_eq!(
            three.restrict_to_component(2).unwrap(),
            Prior::BinomialPsp { delta: 0.3 }
        );
        assert!(matches!(
            three.restrict_to_component(3),
            Err(Error::ComponentIndex { index: 3, len: 3 })
        ));
        assert!(matches!(
            Prior::Uniform.restrict_to_component(0),
            Err(Error::NotMixed)
        ));
    }

    #[test]
    fn json_forms() {
        let p: Prior = serde_json::from_str(r#"{"kind":"psp","delta":0.0005}"#).unwrap();
        assert_eq!(p, Prior::BinomialPsp { delta: 0.0005 });
        let p: Prior = serde_json::from_str(
            r#"{"kind":"mixed","components":[{"weight":0.95,"p":0.0005},{"weight":0.05,"p":0.05}]}"#,
        )
        .unwrap();
        assert!(matches!(p, Prior::Mixed { ref components } if components.len() == 2));
        let p: Prior = serde_json::from_str(r#"{"kind":"uniform"}"#).unwrap();
        assert_eq!(p, Prior::Uniform);
        let p: Prior = serde_json::from_str(r#"{"kind":"bounded_uniform","m":3}"#).unwrap();
        assert_eq!(p, Prior::BoundedUniform { m: 3 });
        assert!(serde_json::from_str::<Prior>(r#"{"kind":"psp","delta":2}"#).is_err());
        assert!(serde_json::from_str::<Prior>(r#"{"kind":"beta"}"#).is_err());

        let round = serde_json::to_string(&Prior::BinomialPsp { delta: 0.25 }).unwrap();
        assert_eq!(round, r#"{"kind":"psp","delta":0.25}"#);
    }

    #[test]
    fn lot_frame_invariants() {
        assert!(LotFrame::new(10, 11, 0).is_err());
        assert!(LotFrame::new(10, 5, 6).is_err());
        assert_eq!(LotFrame::new(10, 5, 2).unwrap().max_count(), 7);
    }
}
