/// Adam optimizer over a list of parameter tensors. Tensors are visited in a
/// fixed order each step; moment slots are created lazily on the first pass
/// and must keep their shapes afterwards.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    cursor: usize,
    slots: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Adam {
        Adam { lr, beta1, beta2, eps, t: 0, cursor: 0, slots: Vec::new() }
    }

    /// Starts an update; call `update` once per tensor afterwards.
    pub fn begin_step(&mut self) {
        self.t += 1;
        self.cursor = 0;
    }

    /// Bias-corrected in-place update of one tensor.
    pub fn update(&mut self, param: &mut [f64], grad: &[f64]) {
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        if self.cursor == self.slots.len() {
            self.slots.push((vec![0.0; param.len()], vec![0.0; param.len()]));
        }
        let (m, v) = &mut self.slots[self.cursor];
        self.cursor += 1;
        assert_eq!(m.len(), param.len(), "parameter tensor changed shape");
        for k in 0..param.len() {
            m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * grad[k];
            v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            let mhat = m[k] / bc1;
            let vhat = v[k] / bc2;
            param[k] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_update_on_scalar_problem() {
        // Minimize (p - 3)^2 with the reference constants; replay the update
        // formulas independently and compare trajectories.
        let (lr, b1, b2, eps) = (0.01, 0.9, 0.999, 1e-8);
        let mut adam = Adam::new(lr, b1, b2, eps);
        let mut p = vec![0.0_f64];
        let (mut m, mut v, mut q) = (0.0_f64, 0.0_f64, 0.0_f64);
        for t in 1..=200 {
            let g = 2.0 * (p[0] - 3.0);
            let gq = 2.0 * (q - 3.0);
            m = b1 * m + (1.0 - b1) * gq;
            v = b2 * v + (1.0 - b2) * gq * gq;
            let mhat = m / (1.0 - b1.powi(t));
            let vhat = v / (1.0 - b2.powi(t));
            q -= lr * mhat / (vhat.sqrt() + eps);
            adam.begin_step();
            adam.update(&mut p, &[g]);
            assert!((p[0] - q).abs() < 1e-15, "divergence at step {t}");
        }
        assert!(p[0] > 0.5, "optimizer made no progress");
    }
}
