//! End-to-end RU Regression: joint minibatch training of a bounded score
//! head h(x) ∈ [0,1] and an auxiliary head α(x, w) under the augmented
//! loss
//!
//! ```text
//! L(z, a) = −Γ⁻¹·v + (1−Γ⁻¹)·a + (Γ−Γ⁻¹)·(−v − a)₊ ,   v = v(z; x, y, w)
//! ```
//!
//! whose minimizer over (h, α) realizes the worst case over Γ-box
//! reweightings of the observed-data distribution. The learned policy is
//! I(h(x) >= 1/2). At the optimum α(x, w) sits at the (1−ζ(Γ))-quantile
//! of −v given (x, w).
//!
//! Training is single-threaded and deterministic per (config, seed):
//! initialization draws on stream 3, epoch shuffles on stream 4. The
//! hinge uses subgradient 0 at its kink. Minimax regret is excluded by
//! construction (its value function is nonconcave with a log singularity).

mod mlp;

pub use mlp::{Adam, BatchCache, Mlp, NetGrads};

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::synthetic::{stream_rng, STREAM_INIT, STREAM_SHUFFLE};
use crate::types::{ObservedSample, Policy};
use crate::values::{self, ValueFunctionKind};

const HIDDEN: [usize; 3] = [64, 64, 64];
const CHECKPOINT_MAGIC: &[u8; 8] = b"RUPM0001";

/// Baselines that can be named in configs and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineSpec {
    AlwaysControl,
    AlwaysTreat,
    /// I(x_1 <= 0).
    FirstCovariateNonpositive,
}

impl BaselineSpec {
    pub fn to_policy(self) -> Policy {
        match self {
            BaselineSpec::AlwaysControl => Policy::always_control(),
            BaselineSpec::AlwaysTreat => Policy::always_treat(),
            BaselineSpec::FirstCovariateNonpositive => Policy::first_covariate_nonpositive(),
        }
    }

    fn tag(self) -> u32 {
        match self {
            BaselineSpec::AlwaysControl => 1,
            BaselineSpec::AlwaysTreat => 2,
            BaselineSpec::FirstCovariateNonpositive => 3,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            1 => Ok(BaselineSpec::AlwaysControl),
            2 => Ok(BaselineSpec::AlwaysTreat),
            3 => Ok(BaselineSpec::FirstCovariateNonpositive),
            _ => Err(Error::Data(format!("unknown baseline tag {tag}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaselineSpec::AlwaysControl => "always_control",
            BaselineSpec::AlwaysTreat => "always_treat",
            BaselineSpec::FirstCovariateNonpositive => "x1_rule",
        }
    }
}

/// Trainable objectives. Regret is not representable here: its RU problem
/// is nonconvex and is out of scope for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    MaxMin,
    Gain(BaselineSpec),
}

impl Objective {
    pub fn value_kind(&self) -> ValueFunctionKind {
        match self {
            Objective::MaxMin => ValueFunctionKind::MaxMin,
            Objective::Gain(b) => ValueFunctionKind::Gain(b.to_policy()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Objective::MaxMin => "maxmin".to_string(),
            Objective::Gain(b) => format!("gain_{}", b.name()),
        }
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub objective: Objective,
    pub gamma: f64,
    /// Design treatment probability for the IPW terms.
    pub e: f64,
    pub epochs_max: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(objective: Objective, gamma: f64, e: f64, seed: u64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(Error::input(format!("gamma must be a finite value >= 1, got {gamma}")));
        }
        if e.is_nan() || e <= 0.0 || e >= 1.0 {
            return Err(Error::input(format!("treatment probability must lie in (0,1), got {e}")));
        }
        Ok(Self {
            objective,
            gamma,
            e,
            epochs_max: 50,
            batch_size: 4000,
            learning_rate: 1e-2,
            seed,
        })
    }
}

/// The augmented loss at one sample, given the score z and auxiliary a.
pub fn ru_loss(
    z: f64,
    a: f64,
    sample: &ObservedSample,
    kind: &ValueFunctionKind,
    gamma: f64,
    e: f64,
) -> Result<f64> {
    let v = values::v_obs(kind, z, sample, e)?;
    Ok(ru_loss_from_value(v, a, gamma))
}

/// The augmented loss as a function of an already-evaluated value v.
pub fn ru_loss_from_value(v: f64, a: f64, gamma: f64) -> f64 {
    let inv = 1.0 / gamma;
    -inv * v + (1.0 - inv) * a + (gamma - inv) * (-v - a).max(0.0)
}

/// Jointly trained score and auxiliary networks.
#[derive(Debug, Clone)]
pub struct RuModel {
    pub h_net: Mlp,
    pub alpha_net: Mlp,
    pub objective: Objective,
    pub gamma: f64,
    pub e: f64,
    pub seed: u64,
}

impl RuModel {
    /// Fresh model with the fixed 3x64 ReLU architecture; h gets a sigmoid
    /// head, α takes (x, w) with a linear head.
    pub fn new(input_dim: usize, config: &TrainConfig) -> Self {
        Self::with_hidden(input_dim, config, &HIDDEN)
    }

    /// Same heads over custom hidden layers (tests use smaller stacks).
    pub fn with_hidden(input_dim: usize, config: &TrainConfig, hidden: &[usize]) -> Self {
        let mut rng = stream_rng(config.seed, STREAM_INIT);
        let mut h_dims = vec![input_dim];
        h_dims.extend_from_slice(hidden);
        h_dims.push(1);
        let mut a_dims = vec![input_dim + 1];
        a_dims.extend_from_slice(hidden);
        a_dims.push(1);
        let h_net = Mlp::new(&h_dims, true, &mut rng);
        let alpha_net = Mlp::new(&a_dims, false, &mut rng);
        RuModel {
            h_net,
            alpha_net,
            objective: config.objective,
            gamma: config.gamma,
            e: config.e,
            seed: config.seed,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.h_net.input_dim()
    }

    pub fn param_count(&self) -> usize {
        self.h_net.param_count() + self.alpha_net.param_count()
    }

    /// Score h(x) in [0,1].
    pub fn score(&self, x: &[f64]) -> f64 {
        self.h_net.forward_one(x)
    }

    /// Auxiliary head α(x, w); approximates the (1−ζ(Γ))-quantile of −v
    /// given (x, w) after convergence.
    pub fn alpha(&self, x: &[f64], w: u8) -> f64 {
        let mut input = x.to_vec();
        input.push(f64::from(w));
        self.alpha_net.forward_one(&input)
    }
}

/// The learned decision rule I(h(x) >= 1/2).
pub fn policy_from_model(model: &RuModel) -> Policy {
    let net = model.h_net.clone();
    let dim = net.input_dim();
    Policy::from_score(move |x: &[f64]| net.forward_one(x), Some(dim))
}

fn flatten_inputs(data: &[ObservedSample], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut h_inputs = Vec::with_capacity(data.len() * dim);
    let mut a_inputs = Vec::with_capacity(data.len() * (dim + 1));
    for s in data {
        h_inputs.extend_from_slice(&s.x);
        a_inputs.extend_from_slice(&s.x);
        a_inputs.push(f64::from(s.w));
    }
    (h_inputs, a_inputs)
}

/// Mean loss and parameter gradients on one batch. Exposed for the
/// finite-difference gradient checks.
pub fn batch_loss_and_grads(
    model: &RuModel,
    batch: &[ObservedSample],
) -> Result<(f64, NetGrads, NetGrads)> {
    let dim = model.input_dim();
    let kind = model.objective.value_kind();
    let n = batch.len();
    if n == 0 {
        return Err(Error::input("empty batch"));
    }
    let (h_in, a_in) = flatten_inputs(batch, dim);
    let h_cache = model.h_net.forward_batch(&h_in, n);
    let a_cache = model.alpha_net.forward_batch(&a_in, n);
    let z = h_cache.outputs();
    let a = a_cache.outputs();

    let inv = 1.0 / model.gamma;
    let hinge_coeff = model.gamma - inv;
    let mut loss_sum = 0.0;
    let mut dz = vec![0.0; n];
    let mut da = vec![0.0; n];
    for i in 0..n {
        let (v, dv_dz) = values::v_obs_and_slope(&kind, z[i], &batch[i], model.e)?;
        let active = -v - a[i] > 0.0;
        loss_sum += ru_loss_from_value(v, a[i], model.gamma);
        let dl_dv = -inv - if active { hinge_coeff } else { 0.0 };
        dz[i] = dl_dv * dv_dz;
        da[i] = (1.0 - inv) - if active { hinge_coeff } else { 0.0 };
    }
    let h_grads = model.h_net.backward(&h_cache, &dz);
    let a_grads = model.alpha_net.backward(&a_cache, &da);
    Ok((loss_sum / n as f64, h_grads, a_grads))
}

/// Mean RU loss of a model over a dataset.
pub fn mean_loss(model: &RuModel, data: &[ObservedSample]) -> Result<f64> {
    let dim = model.input_dim();
    let kind = model.objective.value_kind();
    if data.is_empty() {
        return Err(Error::input("empty dataset"));
    }
    let (h_in, a_in) = flatten_inputs(data, dim);
    let z = model.h_net.forward_batch(&h_in, data.len());
    let a = model.alpha_net.forward_batch(&a_in, data.len());
    let mut sum = 0.0;
    for ((sample, &z_i), &a_i) in data.iter().zip(z.outputs()).zip(a.outputs()) {
        let v = values::v_obs(&kind, z_i, sample, model.e)?;
        sum += ru_loss_from_value(v, a_i, model.gamma);
    }
    Ok(sum / data.len() as f64)
}

/// Minibatch training with per-epoch validation; returns the parameter
/// snapshot with the lowest validation loss. Deterministic given the
/// config seed. Aborts with a diagnostic if the loss turns non-finite.
pub fn train(
    data_train: &[ObservedSample],
    data_val: &[ObservedSample],
    config: &TrainConfig,
) -> Result<RuModel> {
    train_with_hidden(data_train, data_val, config, &HIDDEN)
}

/// Training entry point with a custom hidden stack (tests shrink it).
pub fn train_with_hidden(
    data_train: &[ObservedSample],
    data_val: &[ObservedSample],
    config: &TrainConfig,
    hidden: &[usize],
) -> Result<RuModel> {
    if data_train.is_empty() || data_val.is_empty() {
        return Err(Error::input("train and validation sets must be nonempty"));
    }
    let dim = data_train[0].x.len();
    if data_train.iter().chain(data_val).any(|s| s.x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: data_train.iter().chain(data_val).find(|s| s.x.len() != dim).unwrap().x.len(),
        });
    }
    if config.batch_size == 0 {
        return Err(Error::input("batch size must be positive"));
    }

    let mut model = RuModel::with_hidden(dim, config, hidden);
    let mut h_opt = Adam::new(config.learning_rate, model.h_net.param_count());
    let mut a_opt = Adam::new(config.learning_rate, model.alpha_net.param_count());
    let mut shuffle_rng = stream_rng(config.seed, STREAM_SHUFFLE);

    let mut order: Vec<usize> = (0..data_train.len()).collect();
    let mut best_val = f64::INFINITY;
    let mut best_params: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut batch_buf: Vec<ObservedSample> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs_max {
        shuffle(&mut order, &mut shuffle_rng);
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            batch_buf.clear();
            batch_buf.extend(chunk.iter().map(|&i| data_train[i].clone()));
            let (loss, h_grads, a_grads) = batch_loss_and_grads(&model, &batch_buf)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: batch_idx, loss });
            }
            let scale = 1.0 / batch_buf.len() as f64;
            h_opt.step(&mut model.h_net, &h_grads, scale);
            a_opt.step(&mut model.alpha_net, &a_grads, scale);
        }
        let val = mean_loss(&model, data_val)?;
        if !val.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: usize::MAX, loss: val });
        }
        if val < best_val {
            best_val = val;
            best_params = Some((model.h_net.flat_params(), model.alpha_net.flat_params()));
        }
    }
    if let Some((h, a)) = best_params {
        model.h_net.load_flat_params(&h);
        model.alpha_net.load_flat_params(&a);
    }
    Ok(model)
}

fn shuffle(order: &mut [usize], rng: &mut impl rand::Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

/// Serializes a model checkpoint: magic, objective/baseline tags, Γ, e,
/// seed, then for each net the layer dims followed by row-major weights
/// and biases as little-endian f64.
pub fn write_checkpoint(path: &Path, model: &RuModel) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(CHECKPOINT_MAGIC)?;
    let (obj_tag, base_tag) = match model.objective {
        Objective::MaxMin => (0u32, 0u32),
        Objective::Gain(b) => (1u32, b.tag()),
    };
    out.write_all(&obj_tag.to_le_bytes())?;
    out.write_all(&base_tag.to_le_bytes())?;
    out.write_all(&model.gamma.to_le_bytes())?;
    out.write_all(&model.e.to_le_bytes())?;
    out.write_all(&model.seed.to_le_bytes())?;
    for (net, sigmoid) in [(&model.h_net, 1u32), (&model.alpha_net, 0u32)] {
        out.write_all(&sigmoid.to_le_bytes())?;
        out.write_all(&(net.dims().len() as u32).to_le_bytes())?;
        for d in net.dims() {
            out.write_all(&(*d as u32).to_le_bytes())?;
        }
        for p in net.flat_params() {
            out.write_all(&p.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<RuModel> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Data("not a model checkpoint".to_string()));
    }
    let obj_tag = read_u32(&mut file)?;
    let base_tag = read_u32(&mut file)?;
    let gamma = read_f64(&mut file)?;
    let e = read_f64(&mut file)?;
    let seed = read_u64(&mut file)?;
    let objective = match obj_tag {
        0 => Objective::MaxMin,
        1 => Objective::Gain(BaselineSpec::from_tag(base_tag)?),
        _ => return Err(Error::Data(format!("unknown objective tag {obj_tag}"))),
    };

    let mut nets = Vec::new();
    for _ in 0..2 {
        let sigmoid = read_u32(&mut file)? == 1;
        let n_dims = read_u32(&mut file)? as usize;
        let mut dims = Vec::with_capacity(n_dims);
        for _ in 0..n_dims {
            dims.push(read_u32(&mut file)? as usize);
        }
        let mut rng = stream_rng(0, STREAM_INIT);
        let mut net = Mlp::new(&dims, sigmoid, &mut rng);
        let mut flat = vec![0.0; net.param_count()];
        for p in flat.iter_mut() {
            *p = read_f64(&mut file)?;
        }
        net.load_flat_params(&flat);
        nets.push(net);
    }
    let alpha_net = nets.pop().unwrap();
    let h_net = nets.pop().unwrap();
    Ok(RuModel { h_net, alpha_net, objective, gamma, e, seed })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
