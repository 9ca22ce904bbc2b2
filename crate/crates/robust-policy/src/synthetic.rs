//! Seeded generators for the 1-D and 10-D potential-outcome models and the
//! RCT observation mechanism.
//!
//! Reproducibility: every draw comes from a counter-based ChaCha12 stream
//! keyed as `(seed, stream)`, so identical inputs give bitwise-identical
//! datasets on every platform. Stream assignment:
//!
//! | stream | purpose                        |
//! |--------|--------------------------------|
//! | 0      | toy potential outcomes         |
//! | 1      | high-dimensional outcomes      |
//! | 2      | RCT treatment assignment       |
//! | 3      | network weight initialization  |
//! | 4      | epoch shuffling                |
//! | 5      | voting study/target selection  |
//!
//! Per-unit draw order for the generators: covariates, then the latent u,
//! then the control noise, then the treatment noise.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::{ObservedSample, PotentialOutcomeSample};

pub const STREAM_TOY: u64 = 0;
pub const STREAM_HIGHDIM: u64 = 1;
pub const STREAM_OBSERVE: u64 = 2;
pub const STREAM_INIT: u64 = 3;
pub const STREAM_SHUFFLE: u64 = 4;
pub const STREAM_SPLIT: u64 = 5;

/// A ChaCha12 generator on the given (seed, stream) pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// 1-D model: X ~ U[−3,3], U ~ Bernoulli(p), Y(0)|X ~ N(sin X, σ²),
/// Y(1)|X ~ N(sin X + 1.5 − U·(5X)₊, σ²).
#[derive(Debug, Clone, Copy)]
pub struct ToyModel {
    pub p: f64,
    pub sigma: f64,
}

impl ToyModel {
    pub fn new(p: f64) -> Result<Self> {
        Self::with_sigma(p, 0.2)
    }

    pub fn with_sigma(p: f64, sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::input(format!("p must lie in [0,1], got {p}")));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::input(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { p, sigma })
    }
}

/// The fixed projection vector of the 10-D model.
pub const HIGHDIM_PROJECTION: [f64; 10] = [
    0.50067509,
    -0.67108696,
    -2.22006362,
    -0.37834265,
    1.05841302,
    -0.4509034,
    1.15857361,
    0.62236239,
    -0.77458079,
    -0.74790281,
];

/// 10-D model: X ~ U[−3,3]¹⁰, Y(0)|X ~ N(sin(aᵀX), σ²),
/// Y(1)|X ~ N(sin(aᵀX) + 1.5 − U·(2(X₁+X₂+X₃))₊, σ²).
#[derive(Debug, Clone, Copy)]
pub struct HighDimModel {
    pub p: f64,
    pub sigma: f64,
    pub a: [f64; 10],
}

impl HighDimModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::input(format!("p must lie in [0,1], got {p}")));
        }
        Ok(Self { p, sigma: 0.2, a: HIGHDIM_PROJECTION })
    }
}

pub fn generate_toy(model: &ToyModel, n: usize, seed: u64) -> Vec<PotentialOutcomeSample> {
    let mut rng = stream_rng(seed, STREAM_TOY);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-3.0..3.0);
            let u = u8::from(rng.random::<f64>() < model.p);
            let e0: f64 = rng.sample(StandardNormal);
            let e1: f64 = rng.sample(StandardNormal);
            let base = x.sin();
            let jump = if u == 1 { (5.0 * x).max(0.0) } else { 0.0 };
            PotentialOutcomeSample {
                x: vec![x],
                y0: base + model.sigma * e0,
                y1: base + 1.5 - jump + model.sigma * e1,
                u: Some(u),
            }
        })
        .collect()
}

pub fn generate_highdim(model: &HighDimModel, n: usize, seed: u64) -> Vec<PotentialOutcomeSample> {
    let mut rng = stream_rng(seed, STREAM_HIGHDIM);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
            let u = u8::from(rng.random::<f64>() < model.p);
            let e0: f64 = rng.sample(StandardNormal);
            let e1: f64 = rng.sample(StandardNormal);
            let base = x.iter().zip(model.a.iter()).map(|(xi, ai)| xi * ai).sum::<f64>().sin();
            let jump =
                if u == 1 { (2.0 * (x[0] + x[1] + x[2])).max(0.0) } else { 0.0 };
            PotentialOutcomeSample {
                x,
                y0: base + model.sigma * e0,
                y1: base + 1.5 - jump + model.sigma * e1,
                u: Some(u),
            }
        })
        .collect()
}

/// Bernoulli(e) treatment per unit; the observed outcome is the potential
/// outcome under the assigned arm.
pub fn rct_observe(
    samples: &[PotentialOutcomeSample],
    e: f64,
    seed: u64,
) -> Result<Vec<ObservedSample>> {
    if e.is_nan() || e <= 0.0 || e >= 1.0 {
        return Err(Error::input(format!("treatment probability must lie in (0,1), got {e}")));
    }
    let mut rng = stream_rng(seed, STREAM_OBSERVE);
    Ok(samples
        .iter()
        .map(|s| {
            let w = u8::from(rng.random::<f64>() < e);
            ObservedSample { x: s.x.clone(), y: s.potential_value(w), w }
        })
        .collect())
}

/// Writes samples as CSV with header `x_0..x_{d-1},y0,y1,u`.
pub fn write_samples_csv(path: &Path, samples: &[PotentialOutcomeSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::input("nothing to write"));
    }
    let d = samples[0].x.len();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for j in 0..d {
        write!(out, "x_{j},")?;
    }
    writeln!(out, "y0,y1,u")?;
    for s in samples {
        for v in &s.x {
            write!(out, "{v},")?;
        }
        match s.u {
            Some(u) => writeln!(out, "{},{},{}", s.y0, s.y1, u)?,
            None => writeln!(out, "{},{},", s.y0, s.y1)?,
        }
    }
    Ok(())
}

/// Writes observed records as CSV with header `x_0..x_{d-1},y,w`.
pub fn write_observed_csv(path: &Path, samples: &[ObservedSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::input("nothing to write"));
    }
    let d = samples[0].x.len();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for j in 0..d {
        write!(out, "x_{j},")?;
    }
    writeln!(out, "y,w")?;
    for s in samples {
        for v in &s.x {
            write!(out, "{v},")?;
        }
        writeln!(out, "{},{}", s.y, s.w)?;
    }
    Ok(())
}
