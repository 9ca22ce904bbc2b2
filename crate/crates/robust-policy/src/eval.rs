//! Policy evaluation: explicit-target values, the worst-case conditional
//! reweighting evaluator, and the brute-force box-constrained LP oracle
//! used to validate the CVaR identities.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ru::RuModel;
use crate::types::{ObservedSample, Policy, PotentialOutcomeSample};
use crate::values::{self, ValueFunctionKind};

/// Value and treated share of one policy on one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyValue {
    pub value: f64,
    pub treated_fraction: f64,
    pub n: usize,
}

/// Mean realized outcome of a policy over explicit potential-outcome
/// samples, plus the treated fraction.
pub fn target_policy_value(policy: &Policy, target: &[PotentialOutcomeSample]) -> Result<PolicyValue> {
    if target.is_empty() {
        return Err(Error::input("empty target population"));
    }
    let mut sum = 0.0;
    let mut treated = 0usize;
    for s in target {
        let z = policy.apply(&s.x)?;
        treated += usize::from(z == 1);
        sum += s.potential_value(z);
    }
    Ok(PolicyValue {
        value: sum / target.len() as f64,
        treated_fraction: treated as f64 / target.len() as f64,
        n: target.len(),
    })
}

/// Self-normalized IPW estimate of a policy's mean outcome from observed
/// RCT records with known design propensity e. Used when counterfactual
/// outcomes are unavailable (the voting test set).
pub fn ipw_policy_value(policy: &Policy, obs: &[ObservedSample], e: f64) -> Result<PolicyValue> {
    if obs.is_empty() {
        return Err(Error::input("empty dataset"));
    }
    if e.is_nan() || e <= 0.0 || e >= 1.0 {
        return Err(Error::input(format!("treatment probability must lie in (0,1), got {e}")));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut treated = 0usize;
    for s in obs {
        let z = policy.apply(&s.x)?;
        treated += usize::from(z == 1);
        if z == s.w {
            let p = if s.w == 1 { e } else { 1.0 - e };
            num += s.y / p;
            den += 1.0 / p;
        }
    }
    if den == 0.0 {
        return Err(Error::input("no observations match the policy's assignments"));
    }
    Ok(PolicyValue {
        value: num / den,
        treated_fraction: treated as f64 / obs.len() as f64,
        n: obs.len(),
    })
}

/// Supplies the ζ(Γ)-quantile of v given (x, w) — analytically for known
/// models, or from the trained auxiliary head for learned policies.
pub trait ConditionalValueQuantile {
    fn value_quantile(&self, x: &[f64], w: u8) -> f64;
}

impl<F: Fn(&[f64], u8) -> f64> ConditionalValueQuantile for F {
    fn value_quantile(&self, x: &[f64], w: u8) -> f64 {
        self(x, w)
    }
}

/// α(x, w) estimates the (1−ζ)-quantile of −v given (x, w), so −α is the
/// ζ-quantile of v.
pub struct AlphaNetQuantile<'a>(pub &'a RuModel);

impl ConditionalValueQuantile for AlphaNetQuantile<'_> {
    fn value_quantile(&self, x: &[f64], w: u8) -> f64 {
        -self.0.alpha(x, w)
    }
}

/// Raw worst-case factors: Γ⁻¹ where v sits at or above its conditional
/// ζ(Γ)-quantile, Γ below. With exact conditional masses they average 1.
pub fn worst_case_weights(
    obs: &[ObservedSample],
    h_scores: &[f64],
    kind: &ValueFunctionKind,
    gamma: f64,
    e: f64,
    quantiles: &dyn ConditionalValueQuantile,
) -> Result<Vec<f64>> {
    if obs.len() != h_scores.len() {
        return Err(Error::input("one score per observation required"));
    }
    if !gamma.is_finite() || gamma < 1.0 {
        return Err(Error::input(format!("gamma must be a finite value >= 1, got {gamma}")));
    }
    let mut weights = Vec::with_capacity(obs.len());
    for (s, &z) in obs.iter().zip(h_scores) {
        let v = values::v_obs(kind, z, s, e)?;
        let q = quantiles.value_quantile(&s.x, s.w);
        weights.push(if v >= q { 1.0 / gamma } else { gamma });
    }
    Ok(weights)
}

/// Worst-case mean of v over Γ-box reweightings of the conditional
/// outcome distributions: weight each sample by Γ⁻¹ above its conditional
/// quantile and Γ below, renormalized within each treatment arm.
pub fn worst_case_reweighted_value(
    obs: &[ObservedSample],
    h_scores: &[f64],
    kind: &ValueFunctionKind,
    gamma: f64,
    e: f64,
    quantiles: &dyn ConditionalValueQuantile,
) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::input("empty dataset"));
    }
    let weights = worst_case_weights(obs, h_scores, kind, gamma, e, quantiles)?;
    let mut arm_total = [0.0f64; 2];
    let mut arm_count = [0usize; 2];
    for (s, w) in obs.iter().zip(&weights) {
        arm_total[s.w as usize] += w;
        arm_count[s.w as usize] += 1;
    }
    let mut sum = 0.0;
    for ((s, &z), weight) in obs.iter().zip(h_scores).zip(&weights) {
        let v = values::v_obs(kind, z, s, e)?;
        let norm = arm_total[s.w as usize] / arm_count[s.w as usize] as f64;
        sum += weight / norm * v;
    }
    Ok(sum / obs.len() as f64)
}

/// Exact greedy solution of
///   min Σ θᵢ vᵢ / n   s.t.  θᵢ ∈ [Γ⁻¹, Γ],  Σ θᵢ / n = 1:
/// saturate weights at Γ from the smallest values upward subject to the
/// budget. Returns the minimum and the weights in input order.
pub fn lp_worst_case_solution(values: &[f64], gamma: f64) -> Result<(f64, Vec<f64>)> {
    if values.is_empty() {
        return Err(Error::input("empty value vector"));
    }
    if !gamma.is_finite() || gamma < 1.0 {
        return Err(Error::input(format!("gamma must be a finite value >= 1, got {gamma}")));
    }
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut weights = vec![0.0; n];
    let mut budget = n as f64;
    for (pos, &i) in idx.iter().enumerate() {
        let slots_left = (n - pos - 1) as f64;
        let theta = (budget - slots_left / gamma).min(gamma).max(1.0 / gamma);
        weights[i] = theta;
        budget -= theta;
    }
    let objective = values.iter().zip(&weights).map(|(v, t)| v * t).sum::<f64>() / n as f64;
    Ok((objective, weights))
}

/// The worst-case mean alone.
pub fn lp_worst_case_oracle(values: &[f64], gamma: f64) -> Result<f64> {
    lp_worst_case_solution(values, gamma).map(|(m, _)| m)
}

/// One evaluated (policy, Γ, target, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub policy: String,
    pub gamma: f64,
    /// Target parameter swept in the synthetic experiments; None for the
    /// voting test set.
    pub p_target: Option<f64>,
    pub seed: u64,
    pub value: f64,
    pub treated_fraction: f64,
    pub n: usize,
}

/// mean ± sd across seeds for one (policy, Γ, target) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub policy: String,
    pub gamma: f64,
    pub p_target: Option<f64>,
    pub mean_value: f64,
    pub sd_value: f64,
    pub mean_treated: f64,
    pub seeds: usize,
}

/// Groups reports by (policy, Γ, target); the spread is the standard
/// deviation across seeds (sample sd, zero for a single run).
pub fn aggregate(reports: &[EvaluationReport]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, u64, Option<u64>), Vec<&EvaluationReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((r.policy.clone(), r.gamma.to_bits(), r.p_target.map(f64::to_bits)))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let k = rs.len() as f64;
            let mean = rs.iter().map(|r| r.value).sum::<f64>() / k;
            let sd = if rs.len() > 1 {
                (rs.iter().map(|r| (r.value - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                policy: rs[0].policy.clone(),
                gamma: rs[0].gamma,
                p_target: rs[0].p_target,
                mean_value: mean,
                sd_value: sd,
                mean_treated: rs.iter().map(|r| r.treated_fraction).sum::<f64>() / k,
                seeds: rs.len(),
            }
        })
        .collect()
}

/// CSV rows `policy,gamma,p_target,seed,value,treated_fraction`.
pub fn write_reports_csv(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "policy,gamma,p_target,seed,value,treated_fraction")?;
    for r in reports {
        let p = r.p_target.map(|p| p.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{},{}", r.policy, r.gamma, p, r.seed, r.value, r.treated_fraction)?;
    }
    Ok(())
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "policy,gamma,p_target,mean_value,sd_value,mean_treated,seeds")?;
    for r in rows {
        let p = r.p_target.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.policy, r.gamma, p, r.mean_value, r.sd_value, r.mean_treated, r.seeds
        )?;
    }
    Ok(())
}

/// Aligned text table of aggregates.
pub fn format_aggregate_table(rows: &[AggregateRow]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:<28} {:>6} {:>9} {:>18} {:>9} {:>6}\n",
        "policy", "gamma", "p_target", "value (mean±sd)", "treated", "seeds"
    ));
    for r in rows {
        let p = r.p_target.map(|p| format!("{p}")).unwrap_or_else(|| "-".to_string());
        s.push_str(&format!(
            "{:<28} {:>6} {:>9} {:>10.4} ±{:>6.4} {:>9.3} {:>6}\n",
            r.policy, r.gamma, p, r.mean_value, r.sd_value, r.mean_treated, r.seeds
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{robust_mean, EmpiricalDistribution};
    use crate::synthetic::{generate_toy, rct_observe, ToyModel};
    use crate::types::Policy;

    #[test]
    fn target_values_toy() {
        let always_control = Policy::always_control();
        let always_treat = Policy::always_treat();
        let target = generate_toy(&ToyModel::new(0.2).unwrap(), 100_000, 7);
        let pv = target_policy_value(&always_control, &target).unwrap();
        assert!(pv.value.abs() < 0.01, "control value {}", pv.value);
        assert_eq!(pv.treated_fraction, 0.0);
        let pv = target_policy_value(&always_treat, &target).unwrap();
        assert!((pv.value - 0.75).abs() < 0.02, "treat value {}", pv.value);
        assert_eq!(pv.treated_fraction, 1.0);
    }

    #[test]
    fn nonrobust_value_high_shift_target() {
        use crate::oracle::{nonrobust_policy, ToyConditional};
        use std::sync::Arc;
        let policy = nonrobust_policy(Arc::new(ToyConditional { p: 0.2, sigma: 0.2 }));
        let target = generate_toy(&ToyModel::new(0.9).unwrap(), 100_000, 8);
        let pv = target_policy_value(&policy, &target).unwrap();
        assert!((pv.value - 0.278).abs() < 0.015, "value {}", pv.value);
    }

    #[test]
    fn ipw_recovers_arm_means() {
        let model = ToyModel::new(0.2).unwrap();
        let pot = generate_toy(&model, 200_000, 9);
        let obs = rct_observe(&pot, 1.0 / 6.0, 9).unwrap();
        let treat_val = ipw_policy_value(&Policy::always_treat(), &obs, 1.0 / 6.0).unwrap();
        let true_treat = pot.iter().map(|s| s.y1).sum::<f64>() / pot.len() as f64;
        assert!((treat_val.value - true_treat).abs() < 0.03, "{} vs {true_treat}", treat_val.value);
    }

    #[test]
    fn lp_oracle_examples() {
        let (m, w) = lp_worst_case_solution(&[0.0, 1.0, 2.0], 2.0).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
        assert_eq!(w, vec![2.0, 0.5, 0.5]);

        let (m, w) = lp_worst_case_solution(&[0.0, 1.0], 2.0).unwrap();
        assert!((m - 0.25).abs() < 1e-12);
        assert_eq!(w, vec![1.5, 0.5]);

        for gamma in [1.0, 3.0, 7.5] {
            let (m, _) = lp_worst_case_solution(&[4.2; 6], gamma).unwrap();
            assert!((m - 4.2).abs() < 1e-12);
        }
    }

    #[test]
    fn lp_weights_feasible_and_monotone() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(13);
        for _ in 0..100 {
            let n = rng.random_range(1..=12usize);
            let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut prev = f64::INFINITY;
            for gamma in [1.0, 1.5, 2.0, 4.0, 9.0] {
                let (m, w) = lp_worst_case_solution(&vals, gamma).unwrap();
                let total: f64 = w.iter().sum();
                assert!((total - n as f64).abs() < 1e-9, "budget violated");
                for t in &w {
                    assert!(*t >= 1.0 / gamma - 1e-12 && *t <= gamma + 1e-12, "box violated");
                }
                assert!(m <= prev + 1e-12, "not monotone in gamma");
                prev = m;
            }
        }
    }

    #[test]
    fn lp_matches_robust_mean_at_integral_mass() {
        // n=3, Gamma=2 puts (1−ζ)·n = 2 exactly.
        let vals = [0.0, 1.0, 2.0];
        let d = EmpiricalDistribution::new(vals.to_vec()).unwrap();
        let lp = lp_worst_case_oracle(&vals, 2.0).unwrap();
        assert!((lp - robust_mean(&d, 2.0).unwrap()).abs() < 1e-12);
        // n=2, Gamma=2: non-integral mass, the conventions differ.
        let d2 = EmpiricalDistribution::new(vec![0.0, 1.0]).unwrap();
        let lp2 = lp_worst_case_oracle(&[0.0, 1.0], 2.0).unwrap();
        assert!((lp2 - 0.25).abs() < 1e-12);
        assert!((robust_mean(&d2, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reweighted_value_gamma_one_is_plain_mean() {
        let model = ToyModel::new(0.2).unwrap();
        let pot = generate_toy(&model, 2000, 3);
        let obs = rct_observe(&pot, 0.5, 3).unwrap();
        let scores = vec![0.7; obs.len()];
        let kind = ValueFunctionKind::MaxMin;
        let wc = worst_case_reweighted_value(&obs, &scores, &kind, 1.0, 0.5, &|_: &[f64], _: u8| 0.0)
            .unwrap();
        let plain: f64 = obs
            .iter()
            .zip(&scores)
            .map(|(s, &z)| values::v_obs(&kind, z, s, 0.5).unwrap())
            .sum::<f64>()
            / obs.len() as f64;
        assert!((wc - plain).abs() < 1e-12);
    }

    #[test]
    fn reweighted_value_matches_robust_mean_when_independent() {
        // Make v depend on nothing but noise: x and w carry no signal.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(21);
        let n = 40_000;
        let obs: Vec<ObservedSample> = (0..n)
            .map(|_| ObservedSample {
                x: vec![rng.random_range(-1.0..1.0)],
                y: rng.random_range(0.0..1.0f64).powi(2) * 3.0,
                w: u8::from(rng.random::<f64>() < 0.5),
            })
            .collect();
        // z = 1/2 makes v = 2·ln2·y in both arms, independent of (x, w).
        let z = 0.5;
        let scores = vec![z; n];
        let gamma = 2.0;
        let zeta = crate::risk::zeta_of_gamma(gamma).unwrap();
        let kind = ValueFunctionKind::MaxMin;
        let pooled: Vec<f64> =
            obs.iter().map(|s| values::v_obs(&kind, z, s, 0.5).unwrap()).collect();
        let q = EmpiricalDistribution::new(pooled).unwrap().quantile(zeta).unwrap();
        let provider = move |_: &[f64], _: u8| q;
        let wc =
            worst_case_reweighted_value(&obs, &scores, &kind, gamma, 0.5, &provider).unwrap();
        let all: Vec<f64> = obs
            .iter()
            .map(|s| values::v_obs(&kind, z, s, 0.5).unwrap())
            .collect();
        let rm = robust_mean(&EmpiricalDistribution::new(all).unwrap(), gamma).unwrap();
        assert!((wc - rm).abs() < 0.05, "wc={wc} rm={rm}");
    }

    #[test]
    fn raw_weights_balance_with_exact_masses() {
        // Three equal-probability values per arm with q at the middle atom:
        // mass above = 2/3 = Γ/(Γ+1) for Γ=2, so E[θ] = 1 exactly.
        let obs: Vec<ObservedSample> = (0..6)
            .map(|i| ObservedSample { x: vec![0.0], y: (i % 3) as f64, w: (i / 3) as u8 })
            .collect();
        let scores = vec![1.0; obs.len()];
        let kind = ValueFunctionKind::MaxMin;
        // v = softplus(±1)*ipw*y is increasing in y within each arm; the
        // middle atom's v is the 1/3-quantile.
        let provider = |x: &[f64], w: u8| {
            let s = ObservedSample { x: x.to_vec(), y: 1.0, w };
            values::v_obs(&ValueFunctionKind::MaxMin, 1.0, &s, 0.5).unwrap()
        };
        let weights = worst_case_weights(&obs, &scores, &kind, 2.0, 0.5, &provider).unwrap();
        let mean_w: f64 = weights.iter().sum::<f64>() / weights.len() as f64;
        assert!((mean_w - 1.0).abs() < 1e-12, "mean weight {mean_w}");
    }

    #[test]
    fn aggregate_groups_and_spreads() {
        let reports = vec![
            EvaluationReport { policy: "maxmin".into(), gamma: 2.0, p_target: Some(0.1), seed: 0, value: 1.0, treated_fraction: 0.5, n: 10 },
            EvaluationReport { policy: "maxmin".into(), gamma: 2.0, p_target: Some(0.1), seed: 1, value: 3.0, treated_fraction: 0.7, n: 10 },
            EvaluationReport { policy: "maxmin".into(), gamma: 2.0, p_target: Some(0.5), seed: 0, value: 9.0, treated_fraction: 0.2, n: 10 },
        ];
        let rows = aggregate(&reports);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].seeds, 2);
        assert!((rows[0].mean_value - 2.0).abs() < 1e-12);
        assert!((rows[0].sd_value - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((rows[0].mean_treated - 0.6).abs() < 1e-12);
        assert_eq!(rows[1].seeds, 1);
        assert_eq!(rows[1].sd_value, 0.0);
    }
}
