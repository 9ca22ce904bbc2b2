//! Shared domain types: samples, the robustness configuration, and the
//! policy abstraction used by every other module.
//!
//! All types here are immutable value objects and safe to share across
//! threads. Threshold comparisons use `>=` everywhere (treat on ties).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One unit drawn from a potential-outcome distribution: covariates plus
/// both counterfactual outcomes. `u` is the latent binary driver used by
/// the synthetic generators; real data never carries it.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomeSample {
    pub x: Vec<f64>,
    pub y0: f64,
    pub y1: f64,
    pub u: Option<u8>,
}

impl PotentialOutcomeSample {
    /// Outcome under the given arm: `y1` if `z = 1`, else `y0`.
    pub fn potential_value(&self, z: u8) -> f64 {
        if z == 1 {
            self.y1
        } else {
            self.y0
        }
    }
}

/// One observed RCT record: covariates, realized outcome, treatment flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSample {
    pub x: Vec<f64>,
    pub y: f64,
    /// Treatment indicator, 0 or 1.
    pub w: u8,
}

impl ObservedSample {
    pub fn new(x: Vec<f64>, y: f64, w: u8) -> Result<Self> {
        if w > 1 {
            return Err(Error::input(format!("treatment indicator must be 0 or 1, got {w}")));
        }
        if !y.is_finite() {
            return Err(Error::input(format!("outcome must be finite, got {y}")));
        }
        Ok(Self { x, y, w })
    }
}

/// Sampling-bias strength Γ, the derived CVaR quantile ζ(Γ) = 1/(Γ+1), and
/// the design treatment probability e of the trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessConfig {
    gamma: f64,
    zeta: f64,
    e: f64,
}

impl RobustnessConfig {
    pub fn new(gamma: f64, e: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(Error::input(format!("gamma must be a finite value >= 1, got {gamma}")));
        }
        if e.is_nan() || e <= 0.0 || e >= 1.0 {
            return Err(Error::input(format!("treatment probability must lie in (0,1), got {e}")));
        }
        Ok(Self { gamma, zeta: 1.0 / (gamma + 1.0), e })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The quantile ζ(Γ) = 1/(Γ+1) at which every worst-case functional
    /// evaluates CVaR. ζ(1) = 1/2 and ζ decreases toward 0 as Γ grows.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn treatment_probability(&self) -> f64 {
        self.e
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum PolicyRule {
    /// Treat everywhere (1) or nowhere (0).
    Constant(u8),
    /// I(cate(x) >= threshold(x)).
    Threshold { cate: ScalarFn, threshold: ScalarFn },
    /// I(score(x) >= 1/2), for learned score heads with outputs in [0,1].
    Score(ScalarFn),
}

/// A deterministic binary decision rule over covariates.
///
/// Either a threshold rule over a CATE function with an x-dependent
/// threshold, or a learned rule `I(h(x) >= 1/2)`. Ties at the threshold
/// resolve to treatment.
#[derive(Clone)]
pub struct Policy {
    rule: PolicyRule,
    dim: Option<usize>,
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.rule {
            PolicyRule::Constant(z) => format!("constant({z})"),
            PolicyRule::Threshold { .. } => "threshold".to_string(),
            PolicyRule::Score(_) => "score".to_string(),
        };
        f.debug_struct("Policy").field("rule", &kind).field("dim", &self.dim).finish()
    }
}

impl Policy {
    pub fn always_treat() -> Self {
        Self { rule: PolicyRule::Constant(1), dim: None }
    }

    pub fn always_control() -> Self {
        Self { rule: PolicyRule::Constant(0), dim: None }
    }

    /// Threshold rule I(cate(x) >= threshold(x)).
    pub fn threshold_rule<C, T>(cate: C, threshold: T, dim: Option<usize>) -> Self
    where
        C: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        T: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            rule: PolicyRule::Threshold { cate: Arc::new(cate), threshold: Arc::new(threshold) },
            dim,
        }
    }

    /// Learned rule I(score(x) >= 1/2).
    pub fn from_score<S>(score: S, dim: Option<usize>) -> Self
    where
        S: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { rule: PolicyRule::Score(Arc::new(score)), dim }
    }

    /// Baseline rule I(x_1 <= 0) over the first covariate.
    pub fn first_covariate_nonpositive() -> Self {
        Self::threshold_rule(|x: &[f64]| -x[0], |_| 0.0, None)
    }

    /// Decide treatment for one unit. Errors if the covariate dimension
    /// does not match the policy's expected dimension.
    pub fn apply(&self, x: &[f64]) -> Result<u8> {
        if let Some(d) = self.dim {
            if x.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: x.len() });
            }
        }
        Ok(self.decide(x))
    }

    fn decide(&self, x: &[f64]) -> u8 {
        let treat = match &self.rule {
            PolicyRule::Constant(z) => return *z,
            PolicyRule::Threshold { cate, threshold } => cate(x) >= threshold(x),
            PolicyRule::Score(score) => score(x) >= 0.5,
        };
        u8::from(treat)
    }
}

/// Outcome a policy realizes on one potential-outcome sample.
pub fn potential_value(sample: &PotentialOutcomeSample, z: u8) -> f64 {
    sample.potential_value(z)
}
