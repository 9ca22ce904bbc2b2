//! Observed-data value functions v and potential-outcome value functions v*
//! for the max-min, max-min-gain, and minimax-regret objectives.
//!
//! The observed-data forms are IPW-weighted so that E_{P_obs}[v] equals
//! E_P[v*] for any potential-outcome distribution consistent with the trial
//! (the design propensity e is known, never estimated).
//!
//! The regret value function has a log singularity at z = 1/2; evaluation
//! clamps |2z−1| at [`REGRET_LOG_CLAMP`]. It is exposed for evaluation
//! only and never optimized.

use crate::error::{Error, Result};
use crate::types::{ObservedSample, Policy, PotentialOutcomeSample};

/// Which robust objective a value function realizes. `Gain` carries the
/// concrete baseline policy π₀.
#[derive(Debug, Clone)]
pub enum ValueFunctionKind {
    MaxMin,
    Gain(Policy),
    Regret,
}

/// Floor on |2z−1| inside the regret logarithm.
pub const REGRET_LOG_CLAMP: f64 = 1e-12;

/// Numerically stable log(1 + e^u).
pub(crate) fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u
    } else if u < -30.0 {
        u.exp()
    } else {
        u.exp().ln_1p()
    }
}

pub(crate) fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn check_z(z: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::input(format!("score must lie in [0,1], got {z}")));
    }
    Ok(())
}

fn check_e(e: f64) -> Result<()> {
    if e.is_nan() || e <= 0.0 || e >= 1.0 {
        return Err(Error::input(format!("treatment probability must lie in (0,1), got {e}")));
    }
    Ok(())
}

/// Observed-data value v(z; x, y, w) for the given objective.
pub fn v_obs(kind: &ValueFunctionKind, z: f64, sample: &ObservedSample, e: f64) -> Result<f64> {
    check_z(z)?;
    check_e(e)?;
    Ok(v_obs_and_slope(kind, z, sample, e)?.0)
}

/// Value and its derivative in z; the training loop consumes both.
pub(crate) fn v_obs_and_slope(
    kind: &ValueFunctionKind,
    z: f64,
    sample: &ObservedSample,
    e: f64,
) -> Result<(f64, f64)> {
    let w = f64::from(sample.w);
    let y = sample.y;
    match kind {
        ValueFunctionKind::MaxMin => {
            let sign = 2.0 * w - 1.0;
            let ipw = y / (w * e + (1.0 - w) * (1.0 - e));
            let u = sign * (2.0 * z - 1.0);
            Ok((softplus(u) * ipw, 2.0 * sign * logistic(u) * ipw))
        }
        ValueFunctionKind::Gain(baseline) => {
            let contrast = y * w / e - y * (1.0 - w) / (1.0 - e);
            if baseline.apply(&sample.x)? == 0 {
                let u = 2.0 * z - 1.0;
                Ok((softplus(u) * contrast, 2.0 * logistic(u) * contrast))
            } else {
                let u = 1.0 - 2.0 * z;
                Ok((softplus(u) * (-contrast), 2.0 * logistic(u) * contrast))
            }
        }
        ValueFunctionKind::Regret => {
            let contrast = y * w / e - y * (1.0 - w) / (1.0 - e);
            let gap = (2.0 * z - 1.0).abs().max(REGRET_LOG_CLAMP);
            Ok(((2.0 * z - 1.0) * contrast + gap.ln(), f64::NAN))
        }
    }
}

/// Potential-outcome value v*(z; x, y0, y1) for the given objective.
pub fn v_star(kind: &ValueFunctionKind, z: f64, sample: &PotentialOutcomeSample) -> Result<f64> {
    check_z(z)?;
    match kind {
        ValueFunctionKind::MaxMin => {
            Ok(softplus(2.0 * z - 1.0) * sample.y1 + softplus(1.0 - 2.0 * z) * sample.y0)
        }
        ValueFunctionKind::Gain(baseline) => {
            let tau = sample.y1 - sample.y0;
            if baseline.apply(&sample.x)? == 0 {
                Ok(softplus(2.0 * z - 1.0) * tau)
            } else {
                Ok(softplus(1.0 - 2.0 * z) * (-tau))
            }
        }
        ValueFunctionKind::Regret => {
            let gap = (2.0 * z - 1.0).abs().max(REGRET_LOG_CLAMP);
            Ok((2.0 * z - 1.0) * (sample.y1 - sample.y0) + gap.ln())
        }
    }
}
