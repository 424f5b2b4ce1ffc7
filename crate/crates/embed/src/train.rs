//! Full-batch training loops: the autoencoder route (encoder/decoder trained
//! against reconstruction plus a topological term) and the free-coordinate
//! route (Adam directly on 2D coordinates), both with per-iteration
//! recomputation of the embedding-side topology and best-of-k restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use topodr_core::error::{CoreError, Result};
use topodr_core::wasserstein::{mw_metric, WassersteinConfig};
use topodr_core::PointCloud;

use crate::adam::Adam;
use crate::losses::{loss_reconstruction, LossVariant, TopoLossEvaluator};
use crate::nn::Autoencoder;

#[derive(Debug, Clone)]
pub struct AutoencoderConfig {
    pub hidden: Vec<usize>,
    pub latent: usize,
    pub batch_norm: bool,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig { hidden: vec![128, 32], latent: 2, batch_norm: true, seed: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Weight of the topological term (the reconstruction weight is 1).
    pub weight: f64,
    pub variant: LossVariant,
    pub restarts: usize,
    pub seed: u64,
    /// Standardize input coordinates to zero mean / unit variance first.
    pub standardize: bool,
    /// Record both Wasserstein metrics in the trace every k iterations.
    pub mw_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 1000,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            weight: 1e-2,
            variant: LossVariant::CascadeDistortion1,
            restarts: 10,
            seed: 1,
            standardize: false,
            mw_every: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.restarts == 0 {
            return Err(CoreError::validation("iterations and restarts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub reconstruction: f64,
    pub topological: f64,
    pub total: f64,
    pub mw0: Option<f64>,
    pub mw1: Option<f64>,
}

pub fn write_trace_csv<W: std::io::Write>(trace: &[TraceRow], mut w: W) -> Result<()> {
    writeln!(w, "iter,recon,topo,total,mw0,mw1")?;
    for row in trace {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.iter,
            row.reconstruction,
            row.topological,
            row.total,
            fmt(row.mw0),
            fmt(row.mw1)
        )?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub z: PointCloud,
    pub model: Autoencoder,
    pub trace: Vec<TraceRow>,
    /// Restart-selection metric of this run.
    pub final_mw1: f64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct FreeOutcome {
    pub z: PointCloud,
    pub trace: Vec<TraceRow>,
    pub final_loss: f64,
    pub final_mw1: f64,
    pub seed: u64,
}

/// Trains the autoencoder `restarts` times with distinct seeds and keeps the
/// run with the smallest final dimension-1 Wasserstein distance to the input.
pub fn train(x: &PointCloud, ae: &AutoencoderConfig, tc: &TrainConfig) -> Result<TrainOutcome> {
    tc.validate()?;
    let x = maybe_standardize(x, tc.standardize)?;
    let evaluator = TopoLossEvaluator::new(&x, tc.variant)?;
    let mut best: Option<TrainOutcome> = None;
    for r in 0..tc.restarts {
        let outcome = train_once(&x, ae, tc, &evaluator, tc.seed.wrapping_add(r as u64))?;
        if best.as_ref().map_or(true, |b| outcome.final_mw1 < b.final_mw1) {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one restart ran"))
}

fn train_once(
    x: &PointCloud,
    ae_cfg: &AutoencoderConfig,
    tc: &TrainConfig,
    evaluator: &TopoLossEvaluator,
    seed: u64,
) -> Result<TrainOutcome> {
    let n = x.len();
    let mut warnings = Vec::new();
    // A degenerate collapse of the embedding restarts with a reseeded model.
    'attempt: for attempt in 0..5 {
        let attempt_seed = seed.wrapping_add(attempt * 0x9e3779b97f4a7c15);
        let mut rng = ChaCha8Rng::seed_from_u64(ae_cfg.seed ^ attempt_seed);
        let mut model =
            Autoencoder::new(x.dim(), &ae_cfg.hidden, ae_cfg.latent, ae_cfg.batch_norm, &mut rng)?;
        let mut adam = Adam::new(tc.learning_rate, tc.beta1, tc.beta2, tc.adam_eps);
        let mut trace = Vec::with_capacity(tc.iterations);

        for iter in 0..tc.iterations {
            let (z_flat, xt) = model.forward_train(x.coords(), n);
            let z = match PointCloud::from_flat(z_flat.clone(), ae_cfg.latent) {
                Ok(z) => z,
                Err(_) => {
                    warnings.push(format!(
                        "embedding degenerated (coincident points) at iteration {iter}; \
                         restarting with a new seed"
                    ));
                    continue 'attempt;
                }
            };
            let (recon, grad_xt) = loss_reconstruction(x, &xt)?;
            let topo = evaluator.eval(&z)?;
            let total = recon + tc.weight * topo.topological;
            if !total.is_finite() {
                return Err(CoreError::internal(format!(
                    "non-finite loss at iteration {iter}: reconstruction {recon}, \
                     topological {}, seed {seed}",
                    topo.topological
                )));
            }
            let (mw0, mw1) = trace_metrics(x, &z, tc, iter);
            trace.push(TraceRow {
                iter,
                reconstruction: recon,
                topological: topo.topological,
                total,
                mw0,
                mw1,
            });

            let g_z: Vec<f64> = topo.grad_z.iter().map(|g| g * tc.weight).collect();
            model.zero_grad();
            model.backward(&g_z, &grad_xt, n);
            adam.begin_step();
            model.visit_params(|p, g| adam.update(p, g));
        }

        // Final forward fixes the frozen statistics; inference now maps the
        // training points onto exactly this embedding.
        let (z_flat, _) = model.forward_train(x.coords(), n);
        let z = match PointCloud::from_flat(z_flat, ae_cfg.latent) {
            Ok(z) => z,
            Err(_) => {
                warnings.push("final embedding degenerated; restarting".into());
                continue 'attempt;
            }
        };
        let final_mw1 = mw_metric(x, &z, 1, &WassersteinConfig::default())?;
        return Ok(TrainOutcome { z, model, trace, final_mw1, seed, warnings });
    }
    Err(CoreError::internal(
        "training collapsed to coincident embeddings on five consecutive seeds",
    ))
}

fn trace_metrics(
    x: &PointCloud,
    z: &PointCloud,
    tc: &TrainConfig,
    iter: usize,
) -> (Option<f64>, Option<f64>) {
    match tc.mw_every {
        Some(k) if k > 0 && iter % k == 0 => {
            let cfg = WassersteinConfig::default();
            (mw_metric(x, z, 0, &cfg).ok(), mw_metric(x, z, 1, &cfg).ok())
        }
        _ => (None, None),
    }
}

/// Free-coordinate mode: Adam directly on 2D coordinates, no network. The
/// initial coordinates come from `init` or a seeded Gaussian scaled to the
/// input's spread.
pub fn embed_free(x: &PointCloud, tc: &TrainConfig, init: Option<&PointCloud>) -> Result<FreeOutcome> {
    tc.validate()?;
    let x = maybe_standardize(x, tc.standardize)?;
    if let Some(z0) = init {
        if z0.len() != x.len() || z0.dim() != 2 {
            return Err(CoreError::validation(
                "free-mode initialization must be a 2D cloud of the input's size",
            ));
        }
    }
    let evaluator = TopoLossEvaluator::new(&x, tc.variant)?;
    let mut best: Option<FreeOutcome> = None;
    for r in 0..tc.restarts {
        let seed = tc.seed.wrapping_add(r as u64);
        let outcome = embed_free_once(&x, tc, &evaluator, init, seed)?;
        if best.as_ref().map_or(true, |b| outcome.final_mw1 < b.final_mw1) {
            best = Some(outcome);
        }
        if init.is_some() && tc.restarts == 1 {
            break;
        }
    }
    Ok(best.expect("at least one restart ran"))
}

fn embed_free_once(
    x: &PointCloud,
    tc: &TrainConfig,
    evaluator: &TopoLossEvaluator,
    init: Option<&PointCloud>,
    seed: u64,
) -> Result<FreeOutcome> {
    let n = x.len();
    let spread = coord_spread(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords: Vec<f64> = match init {
        Some(z0) if seed == tc.seed => z0.coords().to_vec(),
        Some(z0) => {
            // Later restarts jitter the provided initialization.
            let jitter = spread * 0.05;
            z0.coords().iter().map(|c| c + rng.gen_range(-jitter..jitter)).collect()
        }
        None => (0..n * 2).map(|_| rng.gen_range(-spread..spread)).collect(),
    };
    let mut adam = Adam::new(tc.learning_rate, tc.beta1, tc.beta2, tc.adam_eps);
    let mut trace = Vec::with_capacity(tc.iterations);
    let mut final_loss = f64::INFINITY;
    for iter in 0..tc.iterations {
        let z = PointCloud::from_flat(coords.clone(), 2).map_err(|_| {
            CoreError::internal(format!("free-mode coordinates collapsed at iteration {iter}"))
        })?;
        let topo = evaluator.eval(&z)?;
        final_loss = topo.topological;
        if !final_loss.is_finite() {
            return Err(CoreError::internal(format!(
                "non-finite loss at iteration {iter} (seed {seed})"
            )));
        }
        let (mw0, mw1) = trace_metrics(x, &z, tc, iter);
        trace.push(TraceRow {
            iter,
            reconstruction: 0.0,
            topological: final_loss,
            total: final_loss,
            mw0,
            mw1,
        });
        adam.begin_step();
        adam.update(&mut coords, &topo.grad_z);
    }
    let z = PointCloud::from_flat(coords, 2)
        .map_err(|_| CoreError::internal("free-mode coordinates collapsed at the end"))?;
    let final_mw1 = mw_metric(x, &z, 1, &WassersteinConfig::default())?;
    Ok(FreeOutcome { z, trace, final_loss, final_mw1, seed })
}

fn coord_spread(x: &PointCloud) -> f64 {
    let n = x.len() as f64;
    let dim = x.dim();
    let mut mean = vec![0.0; dim];
    for p in x.iter_points() {
        for (m, c) in mean.iter_mut().zip(p) {
            *m += c;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = 0.0;
    for p in x.iter_points() {
        var += p.iter().zip(&mean).map(|(c, m)| (c - m) * (c - m)).sum::<f64>();
    }
    (var / n).sqrt().max(1e-6)
}

fn maybe_standardize(x: &PointCloud, on: bool) -> Result<PointCloud> {
    if !on {
        return Ok(x.clone());
    }
    let n = x.len();
    let dim = x.dim();
    let mut mean = vec![0.0; dim];
    for p in x.iter_points() {
        for (m, c) in mean.iter_mut().zip(p) {
            *m += c;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut sd = vec![0.0; dim];
    for p in x.iter_points() {
        for (s, (c, m)) in sd.iter_mut().zip(p.iter().zip(&mean)) {
            *s += (c - m) * (c - m);
        }
    }
    for s in &mut sd {
        *s = (*s / n as f64).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let coords: Vec<f64> = x
        .coords()
        .iter()
        .enumerate()
        .map(|(k, c)| (c - mean[k % dim]) / sd[k % dim])
        .collect();
    PointCloud::from_flat(coords, dim)
}

/// Inference-mode encoding of arbitrary points through a trained model.
pub fn encode(model: &Autoencoder, points: &PointCloud) -> Result<PointCloud> {
    if points.dim() != model.input_dim {
        return Err(CoreError::validation(format!(
            "model expects inputs of dimension {}, got {}",
            model.input_dim,
            points.dim()
        )));
    }
    let z = model.encode(points.coords(), points.len());
    PointCloud::from_flat(z, model.latent_dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..n)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / n as f64;
                    vec![
                        t.cos() + 0.01 * rng.gen::<f64>(),
                        t.sin() + 0.01 * rng.gen::<f64>(),
                        0.3 * rng.gen::<f64>(),
                    ]
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn pure_autoencoder_reduces_reconstruction() {
        let x = ring_cloud(24, 9);
        let tc = TrainConfig {
            iterations: 60,
            weight: 0.0,
            restarts: 1,
            variant: LossVariant::TopoAe0,
            ..Default::default()
        };
        let ae = AutoencoderConfig { hidden: vec![16, 8], ..Default::default() };
        let out = train(&x, &ae, &tc).unwrap();
        let first = out.trace.first().unwrap().reconstruction;
        let last = out.trace.last().unwrap().reconstruction;
        assert!(last < first, "reconstruction did not improve: {first} -> {last}");
        // Deterministic under a fixed seed.
        let again = train(&x, &ae, &tc).unwrap();
        assert_eq!(out.z, again.z);
    }

    #[test]
    fn encode_reproduces_training_embedding() {
        let x = ring_cloud(18, 11);
        let tc = TrainConfig {
            iterations: 25,
            weight: 1e-3,
            restarts: 1,
            variant: LossVariant::TopoAe0,
            ..Default::default()
        };
        let ae = AutoencoderConfig { hidden: vec![12, 6], ..Default::default() };
        let out = train(&x, &ae, &tc).unwrap();
        let re = encode(&out.model, &x).unwrap();
        for (a, b) in out.z.coords().iter().zip(re.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
        // A small perturbation stays near its original embedding.
        let mut bumped = x.coords().to_vec();
        let delta = 1e-4;
        bumped[0] += delta;
        let steps: Vec<f64> = encode(&out.model, &PointCloud::from_flat(bumped, 3).unwrap())
            .unwrap()
            .coords()
            .iter()
            .zip(out.z.coords())
            .map(|(a, b)| (a - b).abs())
            .collect();
        let moved: f64 = steps.iter().cloned().fold(0.0, f64::max);
        assert!(moved < 10.0 * delta * 100.0, "encoder jumped by {moved}");
    }

    #[test]
    fn restart_selection_takes_the_smallest_distance() {
        let x = ring_cloud(16, 21);
        let base = TrainConfig {
            iterations: 20,
            weight: 1e-3,
            variant: LossVariant::TopoAe0,
            restarts: 1,
            ..Default::default()
        };
        let ae = AutoencoderConfig { hidden: vec![10, 5], ..Default::default() };
        let singles: Vec<f64> = (0..3)
            .map(|r| {
                let tc = TrainConfig { seed: base.seed + r, ..base.clone() };
                train(&x, &ae, &tc).unwrap().final_mw1
            })
            .collect();
        let tc = TrainConfig { restarts: 3, ..base };
        let best = train(&x, &ae, &tc).unwrap();
        let min = singles.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((best.final_mw1 - min).abs() < 1e-12, "{} vs {singles:?}", best.final_mw1);
    }

    #[test]
    fn free_mode_zeroes_losses_on_planar_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pts: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let x = PointCloud::new(pts).unwrap();
        for variant in [LossVariant::TopoAe0, LossVariant::TopoAe1, LossVariant::CascadeDistortion1]
        {
            let tc = TrainConfig { iterations: 1, restarts: 1, variant, ..Default::default() };
            let out = embed_free(&x, &tc, Some(&x)).unwrap();
            assert!(
                out.trace[0].topological <= 1e-12,
                "{variant:?} not zero at identity: {}",
                out.trace[0].topological
            );
        }
    }

    #[test]
    fn free_mode_flattens_the_unit_square() {
        let x = PointCloud::new(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let tc = TrainConfig {
            iterations: 1500,
            restarts: 3,
            variant: LossVariant::CascadeDistortion1,
            ..Default::default()
        };
        let out = embed_free(&x, &tc, None).unwrap();
        assert!(out.final_loss < 1e-6, "square reachable at zero loss, got {}", out.final_loss);
    }
}
