//! Exact Bayesian inference for the number `A` of attribute-bearing items in
//! a finite lot of size `N`, given `a` such items in a simple random sample
//! of `n` drawn without replacement.
//!
//! The crate covers the acceptance-sampling setting: a lot is accepted when
//! `a <= Ac`, and the question afterwards is how likely the lot is to be
//! clean (`A = 0`) or nearly so (`A <= k`). Priors range from the uniform
//! prior to a binomial prior on the good-lot state of a mixed binomial
//! process model, which is conjugate to the hypergeometric likelihood.
//!
//! ```
//! use finpop::inference;
//!
//! let uniform = inference::p_zero_uniform(3200, 125).unwrap();
//! let psp = inference::p_zero_psp(3200, 125, 0.0005).unwrap();
//! assert!((uniform - 0.0394).abs() < 1e-4);
//! assert!((psp - 0.215).abs() < 1e-3);
//! ```

pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod inference;
pub mod oracle;
pub mod plans;
pub mod prior;

pub use error::{Error, Result};
pub use inference::{AssuranceReport, Engine, PosteriorTable};
pub use plans::{Decision, PlanTable, SamplingPlan, Verdict};
pub use prior::{LotFrame, MixComponent, Prior};
