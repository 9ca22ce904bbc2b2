//! Closed-form identification for models with known conditionals: the CATE,
//! the CVaR treatment thresholds, and the optimal max-min / max-min-gain /
//! minimax-regret / non-robust policies.
//!
//! All thresholds evaluate conditional CVaRs analytically (Gaussian and
//! two-component mixtures via `risk`), so oracle policies carry no Monte
//! Carlo noise. Decision rules treat on ties.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::risk::GaussianMixture;
use crate::synthetic::{HighDimModel, ToyModel};
use crate::types::{Policy, RobustnessConfig};

/// Conditional outcome model: arm means and upper-tail CVaRs of ±Y(w)
/// given covariates.
pub trait ConditionalModel: Send + Sync {
    fn dim(&self) -> usize;
    fn mean(&self, arm: u8, x: &[f64]) -> f64;
    /// CVaR_zeta of Y(arm) given x, or of −Y(arm) when `negate` is set.
    fn cvar(&self, arm: u8, negate: bool, zeta: f64, x: &[f64]) -> f64;
}

/// Conditional average treatment effect τ(x).
pub fn cate(model: &dyn ConditionalModel, x: &[f64]) -> f64 {
    model.mean(1, x) - model.mean(0, x)
}

/// Per-x quantities feeding the closed-form policies.
///
/// `c1p`/`c1m`/`c0p`/`c0m` are CVaR_{ζ(Γ)} of Y(1), −Y(1), Y(0), −Y(0)
/// given x. The thresholds satisfy `h_minus <= h_gamma <= h_plus`, and
/// `min(g1, g0) <= 0`.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdSet {
    pub tau: f64,
    pub c1p: f64,
    pub c1m: f64,
    pub c0p: f64,
    pub c0m: f64,
    /// Max-min threshold: (1 − Γ⁻¹)(c1p − c0p).
    pub h_gamma: f64,
    /// Gain threshold when the baseline controls: (1 − Γ⁻¹)(c1p + c0m).
    pub h_plus: f64,
    /// Gain threshold when the baseline treats: (1 − Γ⁻¹)(−c1m − c0p).
    pub h_minus: f64,
    /// Γτ + (1 − Γ)(c1p + c0m); nonnegative iff τ >= h_plus.
    pub g1: f64,
    /// −Γτ + (1 − Γ)(c0p + c1m); nonpositive iff τ >= h_minus.
    pub g0: f64,
}

pub fn thresholds(
    model: &dyn ConditionalModel,
    x: &[f64],
    config: &RobustnessConfig,
) -> ThresholdSet {
    let zeta = config.zeta();
    let gamma = config.gamma();
    let tau = cate(model, x);
    let c1p = model.cvar(1, false, zeta, x);
    let c1m = model.cvar(1, true, zeta, x);
    let c0p = model.cvar(0, false, zeta, x);
    let c0m = model.cvar(0, true, zeta, x);
    let shrink = 1.0 - 1.0 / gamma;
    ThresholdSet {
        tau,
        c1p,
        c1m,
        c0p,
        c0m,
        h_gamma: shrink * (c1p - c0p),
        h_plus: shrink * (c1p + c0m),
        h_minus: shrink * (-c1m - c0p),
        g1: gamma * tau + (1.0 - gamma) * (c1p + c0m),
        g0: -gamma * tau + (1.0 - gamma) * (c0p + c1m),
    }
}

/// π(x) = I(τ(x) >= 0); optimal in the absence of sampling bias.
pub fn nonrobust_policy(model: Arc<dyn ConditionalModel>) -> Policy {
    let dim = model.dim();
    Policy::threshold_rule(move |x: &[f64]| cate(model.as_ref(), x), |_| 0.0, Some(dim))
}

/// π(x) = I(τ(x) >= H_Γ(x)), the max-min optimal rule.
pub fn maxmin_policy(model: Arc<dyn ConditionalModel>, config: RobustnessConfig) -> Policy {
    let dim = model.dim();
    let cate_model = Arc::clone(&model);
    Policy::threshold_rule(
        move |x: &[f64]| cate(cate_model.as_ref(), x),
        move |x: &[f64]| thresholds(model.as_ref(), x, &config).h_gamma,
        Some(dim),
    )
}

/// Max-min-gain rule over a baseline: I(τ >= H⁺) where the baseline
/// controls and I(τ >= H⁻) where it treats.
pub fn gain_policy(
    model: Arc<dyn ConditionalModel>,
    config: RobustnessConfig,
    baseline: Policy,
) -> Policy {
    let dim = model.dim();
    let cate_model = Arc::clone(&model);
    Policy::threshold_rule(
        move |x: &[f64]| cate(cate_model.as_ref(), x),
        move |x: &[f64]| {
            let t = thresholds(model.as_ref(), x, &config);
            if baseline.apply(x).expect("baseline dimension") == 0 {
                t.h_plus
            } else {
                t.h_minus
            }
        },
        Some(dim),
    )
}

/// Minimax-regret rule: I(τ >= (H⁺ + H⁻)/2), equivalently I(g1 >= g0).
pub fn regret_policy(model: Arc<dyn ConditionalModel>, config: RobustnessConfig) -> Policy {
    let dim = model.dim();
    let cate_model = Arc::clone(&model);
    Policy::threshold_rule(
        move |x: &[f64]| cate(cate_model.as_ref(), x),
        move |x: &[f64]| {
            let t = thresholds(model.as_ref(), x, &config);
            0.5 * (t.h_plus + t.h_minus)
        },
        Some(dim),
    )
}

/// Analytic conditionals of the 1-D toy model. Y(1)|x is a two-component
/// Gaussian mixture through the latent Bernoulli(p).
#[derive(Debug, Clone, Copy)]
pub struct ToyConditional {
    pub p: f64,
    pub sigma: f64,
}

impl ToyConditional {
    pub fn new(model: &ToyModel) -> Self {
        Self { p: model.p, sigma: model.sigma }
    }

    fn arm_mixture(&self, arm: u8, x: f64) -> GaussianMixture {
        let base = x.sin();
        if arm == 0 {
            GaussianMixture::single(base, self.sigma).expect("valid sigma")
        } else {
            let lifted = base + 1.5;
            let jump = (5.0 * x).max(0.0);
            GaussianMixture::new(vec![
                (1.0 - self.p, lifted, self.sigma),
                (self.p, lifted - jump, self.sigma),
            ])
            .expect("valid mixture")
        }
    }
}

impl ConditionalModel for ToyConditional {
    fn dim(&self) -> usize {
        1
    }

    fn mean(&self, arm: u8, x: &[f64]) -> f64 {
        let base = x[0].sin();
        if arm == 0 {
            base
        } else {
            base + 1.5 - self.p * (5.0 * x[0]).max(0.0)
        }
    }

    fn cvar(&self, arm: u8, negate: bool, zeta: f64, x: &[f64]) -> f64 {
        let mix = self.arm_mixture(arm, x[0]);
        let mix = if negate { mix.negated() } else { mix };
        mix.cvar(zeta).expect("zeta in (0,1)")
    }
}

/// Analytic conditionals of the 10-D model.
#[derive(Debug, Clone, Copy)]
pub struct HighDimConditional {
    pub p: f64,
    pub sigma: f64,
    pub a: [f64; 10],
}

impl HighDimConditional {
    pub fn new(model: &HighDimModel) -> Self {
        Self { p: model.p, sigma: model.sigma, a: model.a }
    }

    fn base(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.a.iter()).map(|(xi, ai)| xi * ai).sum::<f64>().sin()
    }

    fn jump(&self, x: &[f64]) -> f64 {
        (2.0 * (x[0] + x[1] + x[2])).max(0.0)
    }
}

impl ConditionalModel for HighDimConditional {
    fn dim(&self) -> usize {
        10
    }

    fn mean(&self, arm: u8, x: &[f64]) -> f64 {
        let base = self.base(x);
        if arm == 0 {
            base
        } else {
            base + 1.5 - self.p * self.jump(x)
        }
    }

    fn cvar(&self, arm: u8, negate: bool, zeta: f64, x: &[f64]) -> f64 {
        let base = self.base(x);
        let mix = if arm == 0 {
            GaussianMixture::single(base, self.sigma).expect("valid sigma")
        } else {
            GaussianMixture::new(vec![
                (1.0 - self.p, base + 1.5, self.sigma),
                (self.p, base + 1.5 - self.jump(x), self.sigma),
            ])
            .expect("valid mixture")
        };
        let mix = if negate { mix.negated() } else { mix };
        mix.cvar(zeta).expect("zeta in (0,1)")
    }
}

/// Bisection root of `f` on [lo, hi] assuming a single sign change;
/// tolerance on the x interval.
pub fn find_boundary_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::input("no sign change on the bracket"));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exports decisions and thresholds over a 1-D grid as CSV rows
/// `x,decision,tau,h_gamma,h_plus,h_minus`.
pub fn write_policy_grid(
    path: &Path,
    model: &dyn ConditionalModel,
    config: &RobustnessConfig,
    policy: &Policy,
    grid: &[f64],
) -> Result<()> {
    if model.dim() != 1 {
        return Err(Error::input("policy grids are exported for 1-D models only"));
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,decision,tau,h_gamma,h_plus,h_minus")?;
    for &x in grid {
        let t = thresholds(model, &[x], config);
        let d = policy.apply(&[x])?;
        writeln!(out, "{x},{d},{},{},{},{}", t.tau, t.h_gamma, t.h_plus, t.h_minus)?;
    }
    Ok(())
}
