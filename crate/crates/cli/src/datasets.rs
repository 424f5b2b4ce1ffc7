//! Seeded synthetic dataset samplers. Constants are fixed so the documented
//! cycle counts hold at the default sizes: three Gaussian blobs (three
//! dominant components), a twisted ellipse (one dominant cycle), uniform
//! samples over the edges of a tetrahedron (three dominant cycles) or of a
//! complete 5-vertex graph in 3D (six), a noisy circle, and a jittered grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topodr_core::error::{CoreError, Result};
use topodr_core::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    ThreeClusters,
    Twist,
    K4,
    K5,
    CircleNoise,
    Grid,
}

impl DatasetKind {
    pub fn parse(s: &str) -> Option<DatasetKind> {
        match s {
            "3clusters" => Some(DatasetKind::ThreeClusters),
            "twist" => Some(DatasetKind::Twist),
            "k4" => Some(DatasetKind::K4),
            "k5" => Some(DatasetKind::K5),
            "circle_noise" => Some(DatasetKind::CircleNoise),
            "grid" => Some(DatasetKind::Grid),
            _ => None,
        }
    }

    pub fn default_n(&self) -> usize {
        match self {
            DatasetKind::ThreeClusters => 800,
            DatasetKind::Twist => 100,
            DatasetKind::K4 => 300,
            DatasetKind::K5 => 500,
            DatasetKind::CircleNoise => 500,
            DatasetKind::Grid => 400,
        }
    }

    pub fn default_noise(&self) -> f64 {
        match self {
            DatasetKind::ThreeClusters => 0.4,
            DatasetKind::Twist => 0.015,
            DatasetKind::K4 => 0.04,
            DatasetKind::K5 => 0.04,
            DatasetKind::CircleNoise => 0.1,
            DatasetKind::Grid => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(kind: DatasetKind, n: Option<usize>, noise: Option<f64>, seed: u64) -> DatasetSpec {
        DatasetSpec {
            kind,
            n: n.unwrap_or_else(|| kind.default_n()),
            noise: noise.unwrap_or_else(|| kind.default_noise()),
            seed,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the second coordinate is discarded for simplicity.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn generate(spec: &DatasetSpec) -> Result<PointCloud> {
    if spec.n == 0 {
        return Err(CoreError::validation("dataset size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pts: Vec<Vec<f64>> = match spec.kind {
        DatasetKind::ThreeClusters => {
            let centers = [[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [2.5, 4.33, 1.2]];
            (0..spec.n)
                .map(|k| {
                    let c = centers[k % 3];
                    (0..3).map(|d| c[d] + spec.noise * normal(&mut rng)).collect()
                })
                .collect()
        }
        DatasetKind::Twist => {
            // Ellipse in the xy-plane, its cross-section rotated about the
            // major (x) axis by an angle proportional to the position along
            // that axis.
            let (a, b, rate) = (2.0, 1.0, 2.4);
            (0..spec.n)
                .map(|_| {
                    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let phi = rate * t.cos();
                    let y = b * t.sin();
                    vec![
                        a * t.cos() + spec.noise * normal(&mut rng),
                        y * phi.cos() + spec.noise * normal(&mut rng),
                        y * phi.sin() + spec.noise * normal(&mut rng),
                    ]
                })
                .collect()
        }
        DatasetKind::K4 => {
            let v = [
                [1.0, 1.0, 1.0],
                [1.0, -1.0, -1.0],
                [-1.0, 1.0, -1.0],
                [-1.0, -1.0, 1.0],
            ];
            let edges: Vec<(usize, usize)> =
                (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j))).collect();
            sample_graph_edges(&v, &edges, spec.n, spec.noise, &mut rng)
        }
        DatasetKind::K5 => {
            // Tetrahedron plus its centroid: disjoint edge pairs stay well
            // separated, keeping the six graph cycles clearly dominant.
            let v = [
                [1.0, 1.0, 1.0],
                [1.0, -1.0, -1.0],
                [-1.0, 1.0, -1.0],
                [-1.0, -1.0, 1.0],
                [0.0, 0.0, 0.0],
            ];
            let edges: Vec<(usize, usize)> =
                (0..5).flat_map(|i| ((i + 1)..5).map(move |j| (i, j))).collect();
            sample_graph_edges(&v, &edges, spec.n, spec.noise, &mut rng)
        }
        DatasetKind::CircleNoise => (0..spec.n)
            .map(|_| {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                vec![
                    t.cos() + spec.noise * normal(&mut rng),
                    t.sin() + spec.noise * normal(&mut rng),
                ]
            })
            .collect(),
        DatasetKind::Grid => {
            let side = (spec.n as f64).sqrt().ceil() as usize;
            (0..spec.n)
                .map(|k| {
                    let (i, j) = (k / side, k % side);
                    vec![
                        i as f64 + spec.noise * normal(&mut rng),
                        j as f64 + spec.noise * normal(&mut rng),
                    ]
                })
                .collect()
        }
    };
    PointCloud::new(pts)
}

fn sample_graph_edges(
    vertices: &[[f64; 3]],
    edges: &[(usize, usize)],
    n: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let (i, j) = edges[k % edges.len()];
            let t: f64 = rng.gen();
            (0..3)
                .map(|d| {
                    vertices[i][d] + t * (vertices[j][d] - vertices[i][d]) + noise * normal(rng)
                })
                .collect()
        })
        .collect()
}
