//! Shared helpers for the integration suites: randomized conditional
//! models over 1-D covariates with Gaussian-mixture arms.

use rand::Rng;

use robust_policy::oracle::ConditionalModel;
use robust_policy::risk::GaussianMixture;

/// Per-arm mixture whose component means vary smoothly in x.
pub struct RandomArm {
    /// (weight, a, b, c, d): mean_j(x) = a + b·sin(c·x + d).
    comps: Vec<(f64, f64, f64, f64, f64)>,
    sigma: f64,
}

impl RandomArm {
    fn mixture(&self, x: f64) -> GaussianMixture {
        let comps: Vec<(f64, f64, f64)> = self
            .comps
            .iter()
            .map(|&(w, a, b, c, d)| (w, a + b * (c * x + d).sin(), self.sigma))
            .collect();
        GaussianMixture::new(comps).expect("valid random mixture")
    }
}

pub struct RandomConditional {
    arms: [RandomArm; 2],
}

impl ConditionalModel for RandomConditional {
    fn dim(&self) -> usize {
        1
    }

    fn mean(&self, arm: u8, x: &[f64]) -> f64 {
        self.arms[arm as usize]
            .comps
            .iter()
            .map(|&(w, a, b, c, d)| w * (a + b * (c * x[0] + d).sin()))
            .sum()
    }

    fn cvar(&self, arm: u8, negate: bool, zeta: f64, x: &[f64]) -> f64 {
        let mix = self.arms[arm as usize].mixture(x[0]);
        let mix = if negate { mix.negated() } else { mix };
        mix.cvar(zeta).expect("zeta in (0,1)")
    }
}

pub fn random_conditional(rng: &mut impl Rng) -> RandomConditional {
    let mut arm = || {
        let k = rng.random_range(1..=3usize);
        let mut weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        // Renormalize exactly so the mixture validator accepts the sum.
        let correction: f64 = 1.0 - weights.iter().sum::<f64>();
        weights[0] += correction;
        let comps = weights
            .into_iter()
            .map(|w| {
                (
                    w,
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(0.3..2.0),
                    rng.random_range(-3.0..3.0),
                )
            })
            .collect();
        RandomArm { comps, sigma: rng.random_range(0.1..1.5) }
    };
    RandomConditional { arms: [arm(), arm()] }
}
