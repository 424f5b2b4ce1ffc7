//! Minimal fully-connected autoencoder with batch normalization and
//! rectifier activations, trained full-batch with hand-written
//! backpropagation. Batches are row-major (n x dim).

use rand::Rng;
use serde::{Deserialize, Serialize};

use topodr_core::error::{CoreError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major out_dim x in_dim.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    #[serde(skip)]
    pub grad_weight: Vec<f64>,
    #[serde(skip)]
    pub grad_bias: Vec<f64>,
}

impl Linear {
    fn new(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Linear {
        // Uniform fan-in scaling, zero biases.
        let bound = 1.0 / (in_dim as f64).sqrt();
        let weight = (0..in_dim * out_dim).map(|_| rng.gen_range(-bound..bound)).collect();
        Linear {
            in_dim,
            out_dim,
            weight,
            bias: vec![0.0; out_dim],
            grad_weight: vec![0.0; in_dim * out_dim],
            grad_bias: vec![0.0; out_dim],
        }
    }

    fn forward(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut y = vec![0.0; n * self.out_dim];
        for r in 0..n {
            let xi = &x[r * self.in_dim..(r + 1) * self.in_dim];
            let yo = &mut y[r * self.out_dim..(r + 1) * self.out_dim];
            for o in 0..self.out_dim {
                let row = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
                yo[o] = self.bias[o] + row.iter().zip(xi).map(|(w, v)| w * v).sum::<f64>();
            }
        }
        y
    }

    /// Accumulates parameter gradients and returns the input gradient.
    fn backward(&mut self, x: &[f64], gy: &[f64], n: usize) -> Vec<f64> {
        let mut gx = vec![0.0; n * self.in_dim];
        for r in 0..n {
            let xi = &x[r * self.in_dim..(r + 1) * self.in_dim];
            let gyo = &gy[r * self.out_dim..(r + 1) * self.out_dim];
            for o in 0..self.out_dim {
                let g = gyo[o];
                self.grad_bias[o] += g;
                let wrow = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
                let grow = &mut self.grad_weight[o * self.in_dim..(o + 1) * self.in_dim];
                let gxr = &mut gx[r * self.in_dim..(r + 1) * self.in_dim];
                for k in 0..self.in_dim {
                    grow[k] += g * xi[k];
                    gxr[k] += g * wrow[k];
                }
            }
        }
        gx
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchNorm {
    pub dim: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    /// Frozen statistics used in inference mode; after training they hold
    /// the final full-batch statistics so that encoding the training set
    /// reproduces the training embedding exactly.
    pub frozen_mean: Vec<f64>,
    pub frozen_var: Vec<f64>,
    pub eps: f64,
    #[serde(skip)]
    pub grad_gamma: Vec<f64>,
    #[serde(skip)]
    pub grad_beta: Vec<f64>,
    #[serde(skip)]
    cache: Option<BnCache>,
}

#[derive(Debug, Clone, Default)]
struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    centered: Vec<f64>,
}

impl BatchNorm {
    fn new(dim: usize) -> BatchNorm {
        BatchNorm {
            dim,
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            frozen_mean: vec![0.0; dim],
            frozen_var: vec![1.0; dim],
            eps: 1e-5,
            grad_gamma: vec![0.0; dim],
            grad_beta: vec![0.0; dim],
            cache: None,
        }
    }

    fn forward(&mut self, x: &[f64], n: usize, training: bool) -> Vec<f64> {
        let d = self.dim;
        let mut y = vec![0.0; x.len()];
        if !training {
            for r in 0..n {
                for k in 0..d {
                    let xhat =
                        (x[r * d + k] - self.frozen_mean[k]) / (self.frozen_var[k] + self.eps).sqrt();
                    y[r * d + k] = self.gamma[k] * xhat + self.beta[k];
                }
            }
            return y;
        }
        let mut mean = vec![0.0; d];
        let mut var = vec![0.0; d];
        for r in 0..n {
            for k in 0..d {
                mean[k] += x[r * d + k];
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        for r in 0..n {
            for k in 0..d {
                let c = x[r * d + k] - mean[k];
                var[k] += c * c;
            }
        }
        for v in &mut var {
            *v /= n as f64;
        }
        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = vec![0.0; x.len()];
        let mut centered = vec![0.0; x.len()];
        for r in 0..n {
            for k in 0..d {
                let c = x[r * d + k] - mean[k];
                centered[r * d + k] = c;
                xhat[r * d + k] = c * inv_std[k];
                y[r * d + k] = self.gamma[k] * xhat[r * d + k] + self.beta[k];
            }
        }
        self.frozen_mean = mean;
        self.frozen_var = var;
        self.cache = Some(BnCache { xhat, inv_std, centered });
        y
    }

    fn backward(&mut self, gy: &[f64], n: usize) -> Vec<f64> {
        let d = self.dim;
        let cache = self.cache.as_ref().expect("backward follows a training forward");
        let mut gx = vec![0.0; gy.len()];
        let nf = n as f64;
        for k in 0..d {
            let mut sum_gy = 0.0;
            let mut sum_gy_xhat = 0.0;
            for r in 0..n {
                sum_gy += gy[r * d + k];
                sum_gy_xhat += gy[r * d + k] * cache.xhat[r * d + k];
            }
            self.grad_beta[k] += sum_gy;
            self.grad_gamma[k] += sum_gy_xhat;
            let g = self.gamma[k];
            let inv = cache.inv_std[k];
            for r in 0..n {
                let xhat = cache.xhat[r * d + k];
                gx[r * d + k] =
                    g * inv / nf * (nf * gy[r * d + k] - sum_gy - xhat * sum_gy_xhat);
                let _ = cache.centered[r * d + k];
            }
        }
        gx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Layer {
    Linear(usize),
    BatchNorm(usize),
    Relu,
}

/// Encoder/decoder stack. The encoder maps inputs to the latent plane, the
/// decoder mirrors it back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Autoencoder {
    /// Checkpoint format version.
    #[serde(default = "checkpoint_version")]
    pub version: u32,
    pub input_dim: usize,
    pub latent_dim: usize,
    encoder: Stack,
    decoder: Stack,
}

fn checkpoint_version() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Stack {
    plan: Vec<Layer>,
    linears: Vec<Linear>,
    norms: Vec<BatchNorm>,
    #[serde(skip)]
    inputs: Vec<Vec<f64>>,
    #[serde(skip)]
    relu_masks: Vec<Vec<bool>>,
}

impl Stack {
    fn new(dims: &[usize], batch_norm: bool, rng: &mut impl Rng) -> Stack {
        let mut plan = Vec::new();
        let mut linears = Vec::new();
        let mut norms = Vec::new();
        for w in dims.windows(2) {
            plan.push(Layer::Linear(linears.len()));
            linears.push(Linear::new(w[0], w[1], rng));
            let last = w[1] == *dims.last().expect("dims non-empty");
            let final_layer = linears.len() == dims.len() - 1;
            let _ = last;
            if !final_layer {
                if batch_norm {
                    plan.push(Layer::BatchNorm(norms.len()));
                    norms.push(BatchNorm::new(w[1]));
                }
                plan.push(Layer::Relu);
            }
        }
        Stack { plan, linears, norms, inputs: Vec::new(), relu_masks: Vec::new() }
    }

    fn forward(&mut self, x: &[f64], n: usize, training: bool) -> Vec<f64> {
        self.inputs.clear();
        self.relu_masks.clear();
        let mut cur = x.to_vec();
        for layer in self.plan.clone() {
            match layer {
                Layer::Linear(i) => {
                    self.inputs.push(cur.clone());
                    cur = self.linears[i].forward(&cur, n);
                }
                Layer::BatchNorm(i) => {
                    cur = self.norms[i].forward(&cur, n, training);
                }
                Layer::Relu => {
                    let mask: Vec<bool> = cur.iter().map(|&v| v > 0.0).collect();
                    for (v, &m) in cur.iter_mut().zip(&mask) {
                        if !m {
                            *v = 0.0;
                        }
                    }
                    self.relu_masks.push(mask);
                }
            }
        }
        cur
    }

    fn backward(&mut self, gy: &[f64], n: usize) -> Vec<f64> {
        let mut grad = gy.to_vec();
        let mut lin_idx = self.inputs.len();
        let mut relu_idx = self.relu_masks.len();
        for layer in self.plan.clone().into_iter().rev() {
            match layer {
                Layer::Linear(i) => {
                    lin_idx -= 1;
                    grad = self.linears[i].backward(&self.inputs[lin_idx], &grad, n);
                }
                Layer::BatchNorm(i) => {
                    grad = self.norms[i].backward(&grad, n);
                }
                Layer::Relu => {
                    relu_idx -= 1;
                    for (g, &m) in grad.iter_mut().zip(&self.relu_masks[relu_idx]) {
                        if !m {
                            *g = 0.0;
                        }
                    }
                }
            }
        }
        grad
    }

    fn zero_grad(&mut self) {
        for l in &mut self.linears {
            l.grad_weight.iter_mut().for_each(|g| *g = 0.0);
            l.grad_bias.iter_mut().for_each(|g| *g = 0.0);
        }
        for b in &mut self.norms {
            b.grad_gamma.iter_mut().for_each(|g| *g = 0.0);
            b.grad_beta.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    fn visit_params(&mut self, f: &mut impl FnMut(&mut [f64], &[f64])) {
        for l in &mut self.linears {
            f(&mut l.weight, &l.grad_weight);
            f(&mut l.bias, &l.grad_bias);
        }
        for b in &mut self.norms {
            f(&mut b.gamma, &b.grad_gamma);
            f(&mut b.beta, &b.grad_beta);
        }
    }
}

impl Autoencoder {
    /// Encoder `input -> hidden... -> latent`, decoder mirrored.
    pub fn new(
        input_dim: usize,
        hidden: &[usize],
        latent_dim: usize,
        batch_norm: bool,
        rng: &mut impl Rng,
    ) -> Result<Autoencoder> {
        if input_dim == 0 || latent_dim == 0 || hidden.iter().any(|&h| h == 0) {
            return Err(CoreError::validation("layer sizes must be positive"));
        }
        let mut enc_dims = vec![input_dim];
        enc_dims.extend_from_slice(hidden);
        enc_dims.push(latent_dim);
        let dec_dims: Vec<usize> = enc_dims.iter().rev().copied().collect();
        Ok(Autoencoder {
            version: checkpoint_version(),
            input_dim,
            latent_dim,
            encoder: Stack::new(&enc_dims, batch_norm, rng),
            decoder: Stack::new(&dec_dims, batch_norm, rng),
        })
    }

    /// Training-mode forward: returns (latent, reconstruction) and caches
    /// activations for `backward`. Batch statistics are written to the
    /// frozen slots, so the most recent call defines inference behavior.
    pub fn forward_train(&mut self, x: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
        let z = self.encoder.forward(x, n, true);
        let xt = self.decoder.forward(&z, n, true);
        (z, xt)
    }

    /// Backpropagates both heads: `g_xt` through the decoder (its input
    /// gradient is added to `g_z`) and the sum through the encoder.
    pub fn backward(&mut self, g_z: &[f64], g_xt: &[f64], n: usize) {
        let mut gz_total = self.decoder.backward(g_xt, n);
        for (a, b) in gz_total.iter_mut().zip(g_z) {
            *a += b;
        }
        self.encoder.backward(&gz_total, n);
    }

    pub fn zero_grad(&mut self) {
        self.encoder.zero_grad();
        self.decoder.zero_grad();
    }

    pub fn visit_params(&mut self, mut f: impl FnMut(&mut [f64], &[f64])) {
        self.encoder.visit_params(&mut f);
        self.decoder.visit_params(&mut f);
    }

    /// Inference-mode encoding with frozen normalization statistics.
    pub fn encode(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut enc = self.encoder.clone();
        enc.forward(x, n, false)
    }

    pub fn decode(&self, z: &[f64], n: usize) -> Vec<f64> {
        let mut dec = self.decoder.clone();
        dec.forward(z, n, false)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Autoencoder> {
        serde_json::from_str(s).map_err(|e| CoreError::validation(format!("bad model JSON: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn network_gradients_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 7;
        let x: Vec<f64> = (0..n * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut ae = Autoencoder::new(3, &[8, 4], 2, true, &mut rng).unwrap();

        // Scalar objective: sum of squares of latent and reconstruction.
        let objective = |ae: &mut Autoencoder| -> f64 {
            let (z, xt) = ae.forward_train(&x, n);
            z.iter().map(|v| v * v).sum::<f64>() + xt.iter().map(|v| v * v).sum::<f64>()
        };

        let (z, xt) = ae.forward_train(&x, n);
        let gz: Vec<f64> = z.iter().map(|v| 2.0 * v).collect();
        let gxt: Vec<f64> = xt.iter().map(|v| 2.0 * v).collect();
        ae.zero_grad();
        ae.backward(&gz, &gxt, n);

        // Check a sample of parameters by central differences, nudging away
        // from rectifier kinks via the precision of the probe itself.
        let h = 1e-6;
        let mut checked = 0;
        let mut max_rel: f64 = 0.0;
        for tensor in 0..6 {
            let mut idx = 0;
            let mut grads = Vec::new();
            ae.visit_params(|p, g| {
                if idx == tensor {
                    grads = g.to_vec();
                    let _ = p;
                }
                idx += 1;
            });
            for k in (0..grads.len()).step_by(grads.len().max(5) / 5) {
                let bump = |delta: f64, ae: &mut Autoencoder| {
                    let mut idx2 = 0;
                    ae.visit_params(|p, _| {
                        if idx2 == tensor {
                            p[k] += delta;
                        }
                        idx2 += 1;
                    });
                };
                bump(h, &mut ae);
                let fp = objective(&mut ae);
                bump(-2.0 * h, &mut ae);
                let fm = objective(&mut ae);
                bump(h, &mut ae);
                let fd = (fp - fm) / (2.0 * h);
                let g = grads[k];
                let denom = fd.abs().max(g.abs()).max(1e-4);
                max_rel = max_rel.max((fd - g).abs() / denom);
                checked += 1;
            }
        }
        assert!(checked > 10);
        assert!(max_rel < 1e-3, "max relative gradient error {max_rel}");
    }

    #[test]
    fn inference_reproduces_last_training_batch() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let n = 9;
        let x: Vec<f64> = (0..n * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut ae = Autoencoder::new(4, &[6], 2, true, &mut rng).unwrap();
        let (z, _) = ae.forward_train(&x, n);
        let z_inf = ae.encode(&x, n);
        for (a, b) in z.iter().zip(&z_inf) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn model_json_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let ae = Autoencoder::new(3, &[5], 2, true, &mut rng).unwrap();
        let json = ae.to_json();
        let back = Autoencoder::from_json(&json).unwrap();
        let x: Vec<f64> = (0..12).map(|k| k as f64 * 0.1).collect();
        assert_eq!(ae.encode(&x, 4), back.encode(&x, 4));
    }
}
