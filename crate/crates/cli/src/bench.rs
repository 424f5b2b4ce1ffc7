//! Scaling benchmarks for the two persistence engines, with explicit thread
//! pinning and median-of-three repetitions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topodr_core::error::{CoreError, Result};
use topodr_core::planar::{planar_rips_persistence, PlanarOptions};
use topodr_core::reduction::{rips_persistence, RipsOptions};
use topodr_core::PointCloud;

use crate::datasets::{generate, DatasetKind, DatasetSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKind {
    Uniform,
    CircleNoise,
    Grid,
}

impl BenchKind {
    pub fn parse(s: &str) -> Option<BenchKind> {
        match s {
            "uniform" => Some(BenchKind::Uniform),
            "circle_noise" => Some(BenchKind::CircleNoise),
            "grid" => Some(BenchKind::Grid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Planar,
    Reduction,
}

impl Engine {
    pub fn parse(s: &str) -> Option<Engine> {
        match s {
            "planar" => Some(Engine::Planar),
            "reduction" => Some(Engine::Reduction),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Planar => "planar",
            Engine::Reduction => "reduction",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub engine: Engine,
    pub n: usize,
    pub threads: usize,
    pub total_ms: f64,
    pub build_ms: f64,
    pub mml_ms: f64,
    pub pairing_ms: f64,
    pub discard_fraction: Option<f64>,
}

pub fn csv_header() -> &'static str {
    "engine,n,threads,total_ms,build_ms,mml_ms,pairing_ms,discard_fraction"
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.3},{:.3},{:.3},{:.3},{}",
            self.engine.name(),
            self.n,
            self.threads,
            self.total_ms,
            self.build_ms,
            self.mml_ms,
            self.pairing_ms,
            self.discard_fraction.map(|f| format!("{f:.4}")).unwrap_or_default()
        )
    }
}

fn cloud_for(kind: BenchKind, n: usize, seed: u64) -> Result<PointCloud> {
    match kind {
        BenchKind::CircleNoise => {
            generate(&DatasetSpec::new(DatasetKind::CircleNoise, Some(n), None, seed))
        }
        BenchKind::Grid => {
            generate(&DatasetSpec::new(DatasetKind::Grid, Some(n), Some(0.05), seed))
        }
        BenchKind::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            PointCloud::new((0..n).map(|_| vec![rng.gen(), rng.gen()]).collect())
        }
    }
}

/// Runs `reps` repetitions per (engine, size, threads) cell and reports the
/// median total time with its stage breakdown.
pub fn bench_scaling(
    kind: BenchKind,
    sizes: &[usize],
    engines: &[Engine],
    threads: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in sizes {
        let cloud = cloud_for(kind, n, seed)?;
        for &engine in engines {
            for &t in threads {
                if engine == Engine::Reduction && t != threads[0] {
                    continue; // single-threaded engine; bench once
                }
                let mut runs = Vec::with_capacity(reps);
                for _ in 0..reps.max(1) {
                    runs.push(run_one(engine, &cloud, t)?);
                }
                runs.sort_by(|a, b| a.total_ms.total_cmp(&b.total_ms));
                rows.push(runs.swap_remove(runs.len() / 2));
            }
        }
    }
    Ok(rows)
}

fn run_one(engine: Engine, cloud: &PointCloud, threads: usize) -> Result<BenchRow> {
    match engine {
        Engine::Planar => {
            let opts = PlanarOptions { parallel: threads != 1 };
            let run = || planar_rips_persistence(cloud, &opts);
            let res = if threads > 1 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| CoreError::internal(format!("thread pool: {e}")))?;
                pool.install(run)?
            } else {
                run()?
            };
            Ok(BenchRow {
                engine,
                n: cloud.len(),
                threads,
                total_ms: res.stats.total_ms,
                build_ms: res.stats.build_ms,
                mml_ms: res.stats.mml_ms,
                pairing_ms: res.stats.pairing_ms,
                discard_fraction: res.stats.discard_fraction(),
            })
        }
        Engine::Reduction => {
            let opts = RipsOptions { max_points: usize::MAX, ..Default::default() };
            let t0 = std::time::Instant::now();
            rips_persistence(cloud, 1, &opts)?;
            let total_ms = t0.elapsed().as_secs_f64() * 1e3;
            Ok(BenchRow {
                engine,
                n: cloud.len(),
                threads: 1,
                total_ms,
                build_ms: 0.0,
                mml_ms: 0.0,
                pairing_ms: 0.0,
                discard_fraction: None,
            })
        }
    }
}

/// Least-squares slope of log(time) against log(n).
pub fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.max(1e-9).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}
