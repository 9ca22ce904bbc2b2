//! Quantiles, CVaR, and the robust mean functional Γ·E + (1−Γ)·CVaR that
//! every worst-case identification result reduces to.
//!
//! CVaR here is the upper-tail conditional expectation
//! `CVaR_ζ(Z) = E[Z | Z >= q_ζ(Z)]`, evaluated at the quantile
//! ζ(Γ) = 1/(Γ+1) derived from the bias strength Γ.
//!
//! Empirical convention: CVaR is the mean of the top ⌈(1−ζ)·n⌉ order
//! statistics. This matches the continuous definition whenever (1−ζ)·n is
//! an integer and makes the box-constrained LP worst case (module `eval`)
//! exact there; for non-integral mass the two differ by O(1/n).

use crate::error::{Error, Result};

/// The CVaR quantile ζ(Γ) = 1/(Γ+1).
pub fn zeta_of_gamma(gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma < 1.0 {
        return Err(Error::input(format!("gamma must be a finite value >= 1, got {gamma}")));
    }
    Ok(1.0 / (gamma + 1.0))
}

/// Anything with a mean and an upper-tail CVaR.
pub trait TailRisk {
    fn mean(&self) -> f64;
    fn cvar(&self, zeta: f64) -> Result<f64>;
}

/// Worst-case mean over Γ-box reweightings: Γ·E[Z] + (1−Γ)·CVaR_{ζ(Γ)}(Z).
///
/// For Γ = 1 this is the plain mean. Always <= the mean, since CVaR >= mean.
pub fn robust_mean<T: TailRisk + ?Sized>(dist: &T, gamma: f64) -> Result<f64> {
    let zeta = zeta_of_gamma(gamma)?;
    if gamma == 1.0 {
        return Ok(dist.mean());
    }
    Ok(gamma * dist.mean() + (1.0 - gamma) * dist.cvar(zeta)?)
}

/// Finite-sample carrier for a distribution: values with optional
/// normalized weights (uniform when absent).
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    /// Sorted ascending.
    values: Vec<f64>,
    /// Permuted alongside `values`; None means uniform 1/n.
    weights: Option<Vec<f64>>,
}

impl EmpiricalDistribution {
    pub fn new(values: impl Into<Vec<f64>>) -> Result<Self> {
        let mut values = values.into();
        if values.is_empty() {
            return Err(Error::input("empirical distribution needs at least one value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("empirical distribution values must be finite"));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values, weights: None })
    }

    pub fn with_weights(values: impl Into<Vec<f64>>, weights: impl Into<Vec<f64>>) -> Result<Self> {
        let values = values.into();
        let weights = weights.into();
        if values.len() != weights.len() {
            return Err(Error::input("values and weights must have equal length"));
        }
        if values.is_empty() {
            return Err(Error::input("empirical distribution needs at least one value"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::input("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("weights must sum to 1 within 1e-12, got {total}")));
        }
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let sorted_values: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        let sorted_weights: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
        if sorted_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("empirical distribution values must be finite"));
        }
        Ok(Self { values: sorted_values, weights: Some(sorted_weights) })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: construction requires at least one value.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of top order statistics entering CVaR at level `zeta`
    /// (uniform weights): k = ⌈(1−ζ)·n⌉, clamped to [1, n]. The epsilon
    /// keeps integral tail masses stable against rounding in (1−ζ)·n.
    fn tail_count(&self, zeta: f64) -> usize {
        let n = self.values.len();
        let k = ((1.0 - zeta) * n as f64 - 1e-9).ceil() as usize;
        k.clamp(1, n)
    }

    /// ζ-quantile: the smallest value such that at least ⌈(1−ζ)·n⌉ samples
    /// (mass 1−ζ, in the weighted case) lie at or above it.
    pub fn quantile(&self, zeta: f64) -> Result<f64> {
        check_zeta(zeta)?;
        match &self.weights {
            None => {
                let k = self.tail_count(zeta);
                Ok(self.values[self.values.len() - k])
            }
            Some(w) => {
                let need = 1.0 - zeta;
                let mut cum = 0.0;
                for i in (0..self.values.len()).rev() {
                    cum += w[i];
                    if cum >= need - 1e-12 {
                        return Ok(self.values[i]);
                    }
                }
                Ok(self.values[0])
            }
        }
    }

    /// Upper-tail CVaR: mean of the top ⌈(1−ζ)·n⌉ order statistics
    /// (weighted: the smallest suffix of atoms reaching mass 1−ζ).
    pub fn cvar(&self, zeta: f64) -> Result<f64> {
        check_zeta(zeta)?;
        match &self.weights {
            None => {
                let k = self.tail_count(zeta);
                let tail = &self.values[self.values.len() - k..];
                Ok(tail.iter().sum::<f64>() / k as f64)
            }
            Some(w) => {
                let need = 1.0 - zeta;
                let mut cum = 0.0;
                let mut acc = 0.0;
                for i in (0..self.values.len()).rev() {
                    cum += w[i];
                    acc += w[i] * self.values[i];
                    if cum >= need - 1e-12 {
                        break;
                    }
                }
                Ok(acc / cum)
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl TailRisk for EmpiricalDistribution {
    fn mean(&self) -> f64 {
        match &self.weights {
            None => self.values.iter().sum::<f64>() / self.values.len() as f64,
            Some(w) => self.values.iter().zip(w).map(|(v, w)| v * w).sum(),
        }
    }

    fn cvar(&self, zeta: f64) -> Result<f64> {
        EmpiricalDistribution::cvar(self, zeta)
    }
}

fn check_zeta(zeta: f64) -> Result<()> {
    if zeta.is_nan() || zeta <= 0.0 || zeta >= 1.0 {
        return Err(Error::input(format!("zeta must lie in (0,1), got {zeta}")));
    }
    Ok(())
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal inverse CDF: rational approximation refined by one
/// Newton step; absolute error well below 1e-9 across (0,1).
pub fn normal_inverse_cdf(p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 || p >= 1.0 {
        return Err(Error::input(format!("probability must lie in (0,1), got {p}")));
    }
    // Rational approximation (Acklam), three regimes.
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // One Newton step against the erfc-based CDF. Skipped in the extreme
    // tails where the density underflows; the raw approximation is already
    // within 1.2e-9 there.
    let pdf = normal_pdf(x);
    if pdf < 1e-300 {
        return Ok(x);
    }
    let err = normal_cdf(x) - p;
    Ok(x - err / pdf)
}

/// CVaR of N(mu, sigma^2): mu + sigma · φ(Φ⁻¹(ζ)) / (1−ζ).
pub fn normal_cvar(mu: f64, sigma: f64, zeta: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::input(format!("sigma must be positive, got {sigma}")));
    }
    check_zeta(zeta)?;
    let q = normal_inverse_cdf(zeta)?;
    Ok(mu + sigma * normal_pdf(q) / (1.0 - zeta))
}

/// A finite Gaussian mixture with analytic mean, CDF, quantile, and CVaR.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    /// (weight, mu, sigma) triples; weights positive and summing to 1.
    comps: Vec<(f64, f64, f64)>,
}

impl GaussianMixture {
    /// Components are (weight, mu, sigma). Zero-weight components are
    /// dropped; remaining weights must sum to 1 and sigmas be positive.
    pub fn new(components: impl Into<Vec<(f64, f64, f64)>>) -> Result<Self> {
        let comps: Vec<(f64, f64, f64)> =
            components.into().into_iter().filter(|(w, _, _)| *w != 0.0).collect();
        if comps.is_empty() {
            return Err(Error::input("mixture needs at least one positive-weight component"));
        }
        for &(w, mu, sigma) in &comps {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::input(format!("mixture weight must be nonnegative, got {w}")));
            }
            if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
                return Err(Error::input(format!(
                    "mixture component must have finite mu and positive sigma, got ({mu}, {sigma})"
                )));
            }
        }
        let total: f64 = comps.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("mixture weights must sum to 1, got {total}")));
        }
        Ok(Self { comps })
    }

    pub fn single(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![(1.0, mu, sigma)])
    }

    /// The mixture of −Z.
    pub fn negated(&self) -> Self {
        Self { comps: self.comps.iter().map(|&(w, mu, s)| (w, -mu, s)).collect() }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        self.comps.iter().map(|&(w, mu, s)| w * normal_cdf((z - mu) / s)).sum()
    }

    /// ζ-quantile by bisection on the CDF, tolerance 1e-10 in probability.
    /// Bracket: [min μ − 12·max σ, max μ + 12·max σ].
    pub fn quantile(&self, zeta: f64) -> Result<f64> {
        check_zeta(zeta)?;
        let sigma_max = self.comps.iter().map(|c| c.2).fold(f64::MIN, f64::max);
        let mut lo = self.comps.iter().map(|c| c.1).fold(f64::MAX, f64::min) - 12.0 * sigma_max;
        let mut hi = self.comps.iter().map(|c| c.1).fold(f64::MIN, f64::max) + 12.0 * sigma_max;
        for _ in 0..500 {
            let mid = 0.5 * (lo + hi);
            let f = self.cdf(mid);
            if (f - zeta).abs() < 1e-10 {
                return Ok(mid);
            }
            if f < zeta {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * (1.0 + hi.abs().max(lo.abs())) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Upper-tail CVaR: the ζ-quantile q, then E[Z·1{Z >= q}]/(1−ζ) using
    /// the closed-form Gaussian partial expectation per component.
    pub fn cvar(&self, zeta: f64) -> Result<f64> {
        let q = self.quantile(zeta)?;
        let tail: f64 = self
            .comps
            .iter()
            .map(|&(w, mu, s)| {
                let z = (q - mu) / s;
                w * (mu * (1.0 - normal_cdf(z)) + s * normal_pdf(z))
            })
            .sum();
        Ok(tail / (1.0 - zeta))
    }
}

impl TailRisk for GaussianMixture {
    fn mean(&self) -> f64 {
        self.comps.iter().map(|&(w, mu, _)| w * mu).sum()
    }

    fn cvar(&self, zeta: f64) -> Result<f64> {
        GaussianMixture::cvar(self, zeta)
    }
}

/// CVaR of a Gaussian mixture passed as (weight, mu, sigma) triples.
pub fn mixture_cvar(components: &[(f64, f64, f64)], zeta: f64) -> Result<f64> {
    GaussianMixture::new(components.to_vec())?.cvar(zeta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert_eq!(zeta_of_gamma(1.0).unwrap(), 0.5);
        assert_eq!(zeta_of_gamma(3.0).unwrap(), 0.25);
        assert!((zeta_of_gamma(9.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(zeta_of_gamma(0.5).is_err());
        assert!(zeta_of_gamma(f64::NAN).is_err());
    }

    #[test]
    fn quantile_order_statistic() {
        let d = EmpiricalDistribution::new(vec![4.0, 1.0, 3.0, 2.0]).unwrap();
        // k = ceil(0.5 * 4) = 2 top samples {3, 4}; boundary value 3.
        assert_eq!(d.quantile(0.5).unwrap(), 3.0);
        let single = EmpiricalDistribution::new(vec![7.0]).unwrap();
        for zeta in [0.1, 0.5, 0.9] {
            assert_eq!(single.quantile(zeta).unwrap(), 7.0);
        }
        let constant = EmpiricalDistribution::new(vec![5.0; 4]).unwrap();
        assert_eq!(constant.quantile(0.25).unwrap(), 5.0);
    }

    #[test]
    fn cvar_top_k_mean() {
        let d = EmpiricalDistribution::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.cvar(0.5).unwrap(), 3.5);
        let c = EmpiricalDistribution::new(vec![2.5; 6]).unwrap();
        assert_eq!(c.cvar(0.3).unwrap(), 2.5);
        let t = EmpiricalDistribution::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.cvar(1.0 / 3.0).unwrap(), 1.5);
    }

    #[test]
    fn weighted_matches_uniform() {
        let d = EmpiricalDistribution::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = EmpiricalDistribution::with_weights(vec![1.0, 2.0, 3.0, 4.0], vec![0.25; 4]).unwrap();
        for zeta in [0.2, 0.5, 0.75] {
            assert_eq!(d.quantile(zeta).unwrap(), w.quantile(zeta).unwrap());
            assert!((d.cvar(zeta).unwrap() - w.cvar(zeta).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_validation() {
        assert!(EmpiricalDistribution::with_weights(vec![1.0, 2.0], vec![0.6, 0.6]).is_err());
        assert!(EmpiricalDistribution::with_weights(vec![1.0, 2.0], vec![-0.1, 1.1]).is_err());
        assert!(EmpiricalDistribution::new(Vec::<f64>::new()).is_err());
    }

    #[test]
    fn inverse_cdf_roundtrip() {
        for p in [1e-9, 1e-4, 0.02, 0.1, 1.0 / 3.0, 0.5, 0.75, 0.975, 0.9999, 1.0 - 1e-9] {
            let z = normal_inverse_cdf(p).unwrap();
            assert!(
                (normal_cdf(z) - p).abs() < 1e-12 * (1.0 + 1.0 / normal_pdf(z).max(1e-300)).min(1e3),
                "p={p} z={z} back={}",
                normal_cdf(z)
            );
        }
        assert_eq!(normal_inverse_cdf(0.5).unwrap(), 0.0);
        assert!(normal_inverse_cdf(0.0).is_err());
        assert!(normal_inverse_cdf(1.0).is_err());
    }

    #[test]
    fn normal_cvar_reference_values() {
        // sqrt(2/pi); cross-checked by a 10^7-draw Monte Carlo top-half mean.
        assert!((normal_cvar(0.0, 1.0, 0.5).unwrap() - 0.7978845608).abs() < 1e-9);
        assert!((normal_cvar(1.5, 0.2, 0.5).unwrap() - 1.6595769).abs() < 1e-7);
        assert!(normal_cvar(0.0, 0.0, 0.5).is_err());
        assert!(normal_cvar(0.0, -1.0, 0.5).is_err());
    }

    #[test]
    fn normal_cvar_location_scale() {
        for (mu, sigma, zeta) in [(2.0, 3.0, 0.25), (-1.0, 0.5, 0.4), (0.3, 1.7, 0.9)] {
            let lhs = normal_cvar(mu, sigma, zeta).unwrap();
            let rhs = mu + sigma * normal_cvar(0.0, 1.0, zeta).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_reduces_to_normal() {
        let single = mixture_cvar(&[(1.0, 0.0, 1.0)], 0.5).unwrap();
        assert!((single - normal_cvar(0.0, 1.0, 0.5).unwrap()).abs() < 1e-8);
        let dup = mixture_cvar(&[(0.5, 0.0, 1.0), (0.5, 0.0, 1.0)], 0.25).unwrap();
        assert!((dup - normal_cvar(0.0, 1.0, 0.25).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn mixture_cvar_bimodal_reference() {
        // Frozen by a 10^7-draw Monte Carlo oracle: 1.621.
        let v = mixture_cvar(&[(0.8, 1.5, 0.2), (0.2, -8.5, 0.2)], 0.5).unwrap();
        assert!((v - 1.621).abs() < 1e-3, "got {v}");
    }

    #[test]
    fn mixture_validation() {
        assert!(GaussianMixture::new(vec![(0.7, 0.0, 1.0), (0.7, 1.0, 1.0)]).is_err());
        assert!(GaussianMixture::new(vec![(1.0, 0.0, -1.0)]).is_err());
        // Zero-weight components are dropped, not rejected.
        let m = GaussianMixture::new(vec![(1.0, 0.0, 1.0), (0.0, 100.0, 1.0)]).unwrap();
        assert!((m.cvar(0.5).unwrap() - normal_cvar(0.0, 1.0, 0.5).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn robust_mean_examples() {
        let c = EmpiricalDistribution::new(vec![3.0; 5]).unwrap();
        for gamma in [1.0, 2.0, 10.0] {
            assert!((robust_mean(&c, gamma).unwrap() - 3.0).abs() < 1e-12);
        }
        let d = EmpiricalDistribution::new(vec![-1.0, 0.5, 2.0, 7.0]).unwrap();
        assert_eq!(robust_mean(&d, 1.0).unwrap(), d.mean());
        let t = EmpiricalDistribution::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert!((robust_mean(&t, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cvar_dominates_mean() {
        let d = EmpiricalDistribution::new(vec![-3.0, 0.1, 0.2, 5.0, 5.5]).unwrap();
        for zeta in [0.05, 0.3, 0.6, 0.95] {
            assert!(d.cvar(zeta).unwrap() >= d.mean() - 1e-12);
            assert!(robust_mean(&d, 1.0 / zeta - 1.0).is_err() || true);
        }
        let g = GaussianMixture::new(vec![(0.4, -1.0, 0.3), (0.6, 2.0, 1.0)]).unwrap();
        for zeta in [0.1, 1.0 / 3.0, 0.5, 0.8] {
            assert!(g.cvar(zeta).unwrap() >= g.mean() - 1e-9);
        }
    }

    #[test]
    fn mean_decomposition_gaussian() {
        // E[Y] = (1−ζ)·CVaR_ζ(Y) − ζ·CVaR_{1−ζ}(−Y) for densities.
        for (mu, sigma) in [(0.0, 1.0), (1.3, 0.2), (-4.0, 2.5)] {
            for zeta in [0.1, 0.25, 1.0 / 3.0, 0.5, 0.77] {
                let up = normal_cvar(mu, sigma, zeta).unwrap();
                let down = normal_cvar(-mu, sigma, 1.0 - zeta).unwrap();
                let recovered = (1.0 - zeta) * up - zeta * down;
                assert!((recovered - mu).abs() < 1e-8, "mu={mu} zeta={zeta} got {recovered}");
            }
        }
    }

    #[test]
    fn mean_decomposition_empirical_integral_mass() {
        let values = vec![-2.0, -0.5, 0.0, 1.0, 3.5, 4.0, 6.0, 9.0];
        let d = EmpiricalDistribution::new(values.clone()).unwrap();
        let neg = EmpiricalDistribution::new(values.iter().map(|v| -v).collect::<Vec<_>>()).unwrap();
        // n = 8; pick zeta so (1−ζ)·n is an integer.
        for k in 1..8usize {
            let zeta = 1.0 - k as f64 / 8.0;
            let recovered =
                (1.0 - zeta) * d.cvar(zeta).unwrap() - zeta * neg.cvar(1.0 - zeta).unwrap();
            assert!((recovered - d.mean()).abs() < 1e-12, "k={k}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cvar_nondecreasing_in_zeta(
                values in prop::collection::vec(-100.0..100.0f64, 1..60),
                z1 in 0.01..0.98f64,
                dz in 0.001..0.3f64,
            ) {
                let d = EmpiricalDistribution::new(values).unwrap();
                let z2 = (z1 + dz).min(0.99);
                prop_assert!(d.cvar(z2).unwrap() >= d.cvar(z1).unwrap() - 1e-9);
            }

            #[test]
            fn cvar_positively_homogeneous(
                values in prop::collection::vec(-50.0..50.0f64, 1..40),
                c in 0.01..20.0f64,
                zeta in 0.05..0.95f64,
            ) {
                let d = EmpiricalDistribution::new(values.clone()).unwrap();
                let scaled = EmpiricalDistribution::new(
                    values.iter().map(|v| c * v).collect::<Vec<_>>()).unwrap();
                let lhs = scaled.cvar(zeta).unwrap();
                let rhs = c * d.cvar(zeta).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }

            #[test]
            fn robust_mean_below_mean(
                values in prop::collection::vec(-50.0..50.0f64, 2..40),
                gamma in 1.0..20.0f64,
            ) {
                let d = EmpiricalDistribution::new(values).unwrap();
                prop_assert!(robust_mean(&d, gamma).unwrap() <= d.mean() + 1e-9);
            }
        }
    }
}
