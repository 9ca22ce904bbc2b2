//! Minimal dense network with ReLU hidden layers, an optional sigmoid
//! output, hand-rolled backprop, and Adam.
//!
//! Layers store row-major weight matrices (out x in) in f64. ReLU uses
//! subgradient 0 at the kink.

use rand::Rng;

/// Fully connected network with scalar output.
#[derive(Debug, Clone)]
pub struct Mlp {
    dims: Vec<usize>,
    /// weights[l] has shape dims[l+1] x dims[l], row-major.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    sigmoid_output: bool,
}

/// Per-layer gradients with the same shapes as the network.
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations retained by a batched forward pass for backprop.
pub struct BatchCache {
    batch: usize,
    /// activations[0] is the input batch; activations[l+1] the output of
    /// layer l after its nonlinearity. All flattened batch-major.
    activations: Vec<Vec<f64>>,
}

impl BatchCache {
    pub fn outputs(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

impl Mlp {
    /// Uniform fan-in initialization: U[−1/√fan_in, 1/√fan_in] for weights
    /// and biases of each layer.
    pub fn new(dims: &[usize], sigmoid_output: bool, rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        assert_eq!(*dims.last().unwrap(), 1, "scalar output only");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let bound = 1.0 / (dims[l] as f64).sqrt();
            weights.push((0..dims[l + 1] * dims[l]).map(|_| rng.random_range(-bound..bound)).collect());
            biases.push((0..dims[l + 1]).map(|_| rng.random_range(-bound..bound)).collect());
        }
        Self { dims: dims.to_vec(), weights, biases, sigmoid_output }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Forward a flattened batch (batch x input_dim), keeping activations.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> BatchCache {
        debug_assert_eq!(inputs.len(), batch * self.dims[0]);
        let layers = self.dims.len() - 1;
        let mut activations = Vec::with_capacity(layers + 1);
        activations.push(inputs.to_vec());
        for l in 0..layers {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let prev = &activations[l];
            let mut out = vec![0.0; batch * n_out];
            for b in 0..batch {
                let row_in = &prev[b * n_in..(b + 1) * n_in];
                let row_out = &mut out[b * n_out..(b + 1) * n_out];
                for (j, o) in row_out.iter_mut().enumerate() {
                    let w_row = &self.weights[l][j * n_in..(j + 1) * n_in];
                    let mut acc = self.biases[l][j];
                    for (w, x) in w_row.iter().zip(row_in) {
                        acc += w * x;
                    }
                    *o = acc;
                }
            }
            let last = l == layers - 1;
            if !last {
                for v in &mut out {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            } else if self.sigmoid_output {
                for v in &mut out {
                    *v = crate::values::logistic(*v);
                }
            }
            activations.push(out);
        }
        BatchCache { batch, activations }
    }

    pub fn forward_one(&self, x: &[f64]) -> f64 {
        self.forward_batch(x, 1).outputs()[0]
    }

    /// Backprop `dloss_dout` (one entry per batch element) into parameter
    /// gradients, averaged by the caller's convention (gradients here are
    /// sums over the batch).
    pub fn backward(&self, cache: &BatchCache, dloss_dout: &[f64]) -> NetGrads {
        let layers = self.dims.len() - 1;
        let batch = cache.batch;
        debug_assert_eq!(dloss_dout.len(), batch);

        let mut grads = NetGrads {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        };

        // Delta at the output layer.
        let mut delta: Vec<f64> = if self.sigmoid_output {
            cache.activations[layers]
                .iter()
                .zip(dloss_dout)
                .map(|(z, d)| d * z * (1.0 - z))
                .collect()
        } else {
            dloss_dout.to_vec()
        };

        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let prev = &cache.activations[l];
            {
                let gw = &mut grads.weights[l];
                let gb = &mut grads.biases[l];
                for b in 0..batch {
                    let row_in = &prev[b * n_in..(b + 1) * n_in];
                    let d_row = &delta[b * n_out..(b + 1) * n_out];
                    for (j, dj) in d_row.iter().enumerate() {
                        if *dj == 0.0 {
                            continue;
                        }
                        gb[j] += dj;
                        let gw_row = &mut gw[j * n_in..(j + 1) * n_in];
                        for (g, x) in gw_row.iter_mut().zip(row_in) {
                            *g += dj * x;
                        }
                    }
                }
            }
            if l > 0 {
                // delta for the previous layer, through the ReLU mask.
                let mut next = vec![0.0; batch * n_in];
                for b in 0..batch {
                    let d_row = &delta[b * n_out..(b + 1) * n_out];
                    let prev_row = &prev[b * n_in..(b + 1) * n_in];
                    let next_row = &mut next[b * n_in..(b + 1) * n_in];
                    for (j, dj) in d_row.iter().enumerate() {
                        if *dj == 0.0 {
                            continue;
                        }
                        let w_row = &self.weights[l][j * n_in..(j + 1) * n_in];
                        for (k, w) in w_row.iter().enumerate() {
                            next_row[k] += dj * w;
                        }
                    }
                    for (nk, pk) in next_row.iter_mut().zip(prev_row) {
                        if *pk <= 0.0 {
                            *nk = 0.0;
                        }
                    }
                }
                delta = next;
            }
        }
        grads
    }

    /// Flat parameter view used by checkpoints and finite differences:
    /// weights then biases, layer by layer.
    pub fn get_param(&self, idx: usize) -> f64 {
        let mut i = idx;
        for l in 0..self.weights.len() {
            if i < self.weights[l].len() {
                return self.weights[l][i];
            }
            i -= self.weights[l].len();
            if i < self.biases[l].len() {
                return self.biases[l][i];
            }
            i -= self.biases[l].len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn set_param(&mut self, idx: usize, value: f64) {
        let mut i = idx;
        for l in 0..self.weights.len() {
            if i < self.weights[l].len() {
                self.weights[l][i] = value;
                return;
            }
            i -= self.weights[l].len();
            if i < self.biases[l].len() {
                self.biases[l][i] = value;
                return;
            }
            i -= self.biases[l].len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn grad_at(grads: &NetGrads, idx: usize) -> f64 {
        let mut i = idx;
        for l in 0..grads.weights.len() {
            if i < grads.weights[l].len() {
                return grads.weights[l][i];
            }
            i -= grads.weights[l].len();
            if i < grads.biases[l].len() {
                return grads.biases[l][i];
            }
            i -= grads.biases[l].len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub(crate) fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.weights.len() {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
        out
    }

    pub(crate) fn load_flat_params(&mut self, flat: &[f64]) {
        let mut i = 0;
        for l in 0..self.weights.len() {
            let wl = self.weights[l].len();
            self.weights[l].copy_from_slice(&flat[i..i + wl]);
            i += wl;
            let bl = self.biases[l].len();
            self.biases[l].copy_from_slice(&flat[i..i + bl]);
            i += bl;
        }
        assert_eq!(i, flat.len());
    }
}

/// Adam with the standard defaults (0.9, 0.999, 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, param_count: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One update on `net` from summed batch gradients; `scale` converts
    /// them to the batch mean.
    pub fn step(&mut self, net: &mut Mlp, grads: &NetGrads, scale: f64) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let mut idx = 0;
        for l in 0..net.weights.len() {
            let params = net.weights[l].iter_mut().chain(net.biases[l].iter_mut());
            let gl = grads.weights[l].iter().chain(grads.biases[l].iter());
            for (p, g) in params.zip(gl) {
                let g = *g * scale;
                self.m[idx] = self.beta1 * self.m[idx] + (1.0 - self.beta1) * g;
                self.v[idx] = self.beta2 * self.v[idx] + (1.0 - self.beta2) * g * g;
                *p -= self.lr * (self.m[idx] / bc1) / ((self.v[idx] / bc2).sqrt() + self.eps);
                idx += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn architecture_parameter_count() {
        // 3 hidden layers x 64 units; h takes x, alpha takes (x, w).
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
        let h = Mlp::new(&[1, 64, 64, 64, 1], true, &mut rng);
        let alpha = Mlp::new(&[2, 64, 64, 64, 1], false, &mut rng);
        assert_eq!(h.param_count(), 8513);
        assert_eq!(alpha.param_count(), 8577);
        assert_eq!(h.param_count() + alpha.param_count(), 17_090);
    }

    #[test]
    fn sigmoid_output_bounded() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let net = Mlp::new(&[2, 8, 8, 1], true, &mut rng);
        for i in 0..100 {
            let x = [i as f64 - 50.0, (i as f64).sin() * 20.0];
            let z = net.forward_one(&x);
            assert!((0.0..=1.0).contains(&z));
        }
    }

    #[test]
    fn backward_matches_finite_difference() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        for sigmoid in [false, true] {
            let mut net = Mlp::new(&[3, 6, 5, 1], sigmoid, &mut rng);
            use rand::Rng;
            let batch = 7;
            let inputs: Vec<f64> = (0..batch * 3).map(|_| rng.random_range(-2.0..2.0f64)).collect();
            // Loss = sum of outputs (dloss_dout = 1 each).
            let cache = net.forward_batch(&inputs, batch);
            let grads = net.backward(&cache, &vec![1.0; batch]);
            for idx in (0..net.param_count()).step_by(3) {
                let orig = net.get_param(idx);
                let h = 1e-6;
                net.set_param(idx, orig + h);
                let up: f64 = net.forward_batch(&inputs, batch).outputs().iter().sum();
                net.set_param(idx, orig - h);
                let down: f64 = net.forward_batch(&inputs, batch).outputs().iter().sum();
                net.set_param(idx, orig);
                let fd = (up - down) / (2.0 * h);
                let an = Mlp::grad_at(&grads, idx);
                assert!(
                    (an - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "sigmoid={sigmoid} idx={idx} an={an} fd={fd}"
                );
            }
        }
    }

    #[test]
    fn adam_reduces_simple_quadratic_loss() {
        // Fit the scalar function f(x) = 0.5 on a sigmoid head.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let mut net = Mlp::new(&[1, 8, 1], true, &mut rng);
        let mut opt = Adam::new(1e-2, net.param_count());
        let inputs: Vec<f64> = (0..64).map(|i| i as f64 / 32.0 - 1.0).collect();
        let loss = |net: &Mlp| -> f64 {
            let cache = net.forward_batch(&inputs, 64);
            cache.outputs().iter().map(|z| (z - 0.9f64).powi(2)).sum::<f64>() / 64.0
        };
        let before = loss(&net);
        for _ in 0..300 {
            let cache = net.forward_batch(&inputs, 64);
            let dout: Vec<f64> = cache.outputs().iter().map(|z| 2.0 * (z - 0.9)).collect();
            let grads = net.backward(&cache, &dout);
            opt.step(&mut net, &grads, 1.0 / 64.0);
        }
        let after = loss(&net);
        assert!(after < before * 0.05, "before={before} after={after}");
    }
}
