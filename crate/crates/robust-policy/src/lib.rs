//! Treatment-policy learning that stays robust when study participants
//! were selected with bias. Selection may depend arbitrarily on
//! covariates, but its odds may vary with unobservables by at most a
//! factor Γ; policies are chosen against the worst case consistent with
//! that bound.
//!
//! The pieces:
//!
//! - [`risk`]: quantiles, CVaR, and the worst-case mean
//!   Γ·E + (1−Γ)·CVaR_{ζ(Γ)} every identification result reduces to.
//! - [`oracle`]: closed-form max-min, max-min-gain, minimax-regret, and
//!   non-robust policies for models with known conditionals.
//! - [`values`]: observed-data and potential-outcome value functions tied
//!   together by IPW unbiasedness.
//! - [`ru`]: end-to-end RU Regression — minibatch training of a bounded
//!   score head and an auxiliary quantile head under the augmented loss.
//! - [`eval`]: target-population evaluation, the worst-case reweighting
//!   evaluator, and the box-constrained LP oracle.
//! - [`synthetic`] / [`ingest`]: seeded data models and the voting
//!   field-experiment pipeline.

pub mod error;
pub mod eval;
pub mod ingest;
pub mod oracle;
pub mod risk;
pub mod ru;
pub mod synthetic;
pub mod types;
pub mod values;

pub use error::{Error, Result};
pub use types::{ObservedSample, Policy, PotentialOutcomeSample, RobustnessConfig};
