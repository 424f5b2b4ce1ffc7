//! L2-Wasserstein distances between persistence diagrams via the auction
//! algorithm with epsilon scaling, plus an exact Hungarian matcher that
//! serves as the small-instance oracle.
//!
//! Diagrams are augmented with the diagonal projections of the other side's
//! points so both sides have equal cardinality; matching a point to any
//! diagonal copy costs its own distance to the diagonal (sliding along the
//! diagonal is free), and diagonal-diagonal matches cost nothing.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::diagram::PersistenceDiagram;
use crate::error::{CoreError, Result};
use crate::planar::{planar_rips_persistence, PlanarOptions};
use crate::reduction::{rips_persistence, RipsOptions};

#[derive(Debug, Clone)]
pub struct WassersteinConfig {
    /// Outer exponent of the sum (the distance is the q-th root).
    pub q: f64,
    /// Exponent of the ground norm on the plane.
    pub p: f64,
    /// Guaranteed relative error of the auction on the q-th power.
    pub relative_tol: f64,
    /// Epsilon shrink factor between scaling rounds.
    pub eps_scale: f64,
    /// Use the exact matcher instead of the auction.
    pub exact: bool,
}

impl Default for WassersteinConfig {
    fn default() -> Self {
        WassersteinConfig { q: 2.0, p: 2.0, relative_tol: 1e-2, eps_scale: 5.0, exact: false }
    }
}

impl WassersteinConfig {
    pub fn exact() -> Self {
        WassersteinConfig { exact: true, ..Default::default() }
    }

    pub fn with_tol(relative_tol: f64) -> Self {
        WassersteinConfig { relative_tol, ..Default::default() }
    }
}

/// Where a diagram point was sent by the optimal (or near-optimal) matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchTarget {
    /// Index of a point in the other diagram.
    Point(usize),
    Diagonal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagramMatching {
    /// Per point of the first diagram (finite points, in diagram order).
    pub first_to: Vec<MatchTarget>,
    /// Per point of the second diagram.
    pub second_to: Vec<MatchTarget>,
    /// Sum of q-th cost powers of the matching; the distance is its q-th root.
    pub cost_pow_q: f64,
}

/// Wasserstein distance between two diagrams of the same homology dimension.
/// Infinite-persistence points must come in equal numbers on both sides (they
/// are dropped before matching); otherwise the distance is infinite.
pub fn wasserstein(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    cfg: &WassersteinConfig,
) -> Result<(f64, DiagramMatching)> {
    if d1.dim != d2.dim {
        return Err(CoreError::validation(format!(
            "cannot match diagrams of homology dimensions {} and {}",
            d1.dim, d2.dim
        )));
    }
    if d1.essential_count() != d2.essential_count() {
        return Ok((
            f64::INFINITY,
            DiagramMatching { first_to: Vec::new(), second_to: Vec::new(), cost_pow_q: f64::INFINITY },
        ));
    }
    let a: Vec<(f64, f64)> = d1.finite_points(true);
    let b: Vec<(f64, f64)> = d2.finite_points(true);
    wasserstein_points(&a, &b, cfg)
}

/// As `wasserstein`, on raw finite (birth, death) points.
pub fn wasserstein_points(
    a: &[(f64, f64)],
    b: &[(f64, f64)],
    cfg: &WassersteinConfig,
) -> Result<(f64, DiagramMatching)> {
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    if n == 0 {
        return Ok((0.0, DiagramMatching { first_to: vec![], second_to: vec![], cost_pow_q: 0.0 }));
    }

    let cost = |i: usize, j: usize| -> f64 {
        match (i < n1, j < n2) {
            (true, true) => pair_cost(a[i], b[j], cfg),
            (true, false) => diagonal_cost(a[i], cfg),
            (false, true) => diagonal_cost(b[j], cfg),
            (false, false) => 0.0,
        }
    };
    let matrix: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| cost(i, j)).collect()).collect();

    let assignment = if cfg.exact {
        hungarian_min_cost(&matrix)
    } else {
        auction_min_cost(&matrix, cfg)
    };

    let cost_pow_q: f64 = assignment.iter().enumerate().map(|(i, &j)| matrix[i][j]).sum();
    let first_to = (0..n1)
        .map(|i| if assignment[i] < n2 { MatchTarget::Point(assignment[i]) } else { MatchTarget::Diagonal })
        .collect();
    let mut second_to = vec![MatchTarget::Diagonal; n2];
    for (i, &j) in assignment.iter().enumerate() {
        if j < n2 {
            second_to[j] = if i < n1 { MatchTarget::Point(i) } else { MatchTarget::Diagonal };
        }
    }
    Ok((cost_pow_q.powf(1.0 / cfg.q), DiagramMatching { first_to, second_to, cost_pow_q }))
}

fn pair_cost(x: (f64, f64), y: (f64, f64), cfg: &WassersteinConfig) -> f64 {
    let db = (x.0 - y.0).abs();
    let dd = (x.1 - y.1).abs();
    if cfg.p == 2.0 && cfg.q == 2.0 {
        db * db + dd * dd
    } else {
        (db.powf(cfg.p) + dd.powf(cfg.p)).powf(cfg.q / cfg.p)
    }
}

/// Cost of sending a point to the diagonal: its p-norm distance to the
/// nearest diagonal point, raised to the q-th power.
fn diagonal_cost(x: (f64, f64), cfg: &WassersteinConfig) -> f64 {
    let half = (x.1 - x.0).abs() / 2.0;
    if cfg.p == 2.0 && cfg.q == 2.0 {
        2.0 * half * half
    } else {
        (2.0 * half.powf(cfg.p)).powf(cfg.q / cfg.p)
    }
}

/// Forward auction with epsilon scaling on a square min-cost assignment.
/// Stops once the duality gap bound n*eps drops below the requested relative
/// error of the current assignment cost.
fn auction_min_cost(cost: &[Vec<f64>], cfg: &WassersteinConfig) -> Vec<usize> {
    let n = cost.len();
    let c_max = cost
        .iter()
        .flat_map(|row| row.iter().copied())
        .fold(0.0_f64, f64::max);
    if c_max == 0.0 {
        return (0..n).collect();
    }

    // Maximize value = -cost.
    let mut prices = vec![0.0_f64; n];
    let mut eps = c_max / 4.0;
    let floor = c_max * 1e-15;
    let mut assignment: Vec<usize> = (0..n).collect();
    loop {
        let mut owner: Vec<Option<usize>> = vec![None; n];
        let mut queue: std::collections::VecDeque<usize> = (0..n).collect();
        while let Some(i) = queue.pop_front() {
            let mut best_j = 0;
            let mut best = f64::NEG_INFINITY;
            let mut second = f64::NEG_INFINITY;
            for j in 0..n {
                let v = -cost[i][j] - prices[j];
                if v > best {
                    second = best;
                    best = v;
                    best_j = j;
                } else if v > second {
                    second = v;
                }
            }
            let bid = if second.is_finite() { best - second + eps } else { eps };
            prices[best_j] += bid;
            if let Some(prev) = owner[best_j].replace(i) {
                queue.push_back(prev);
            }
        }
        for (j, o) in owner.iter().enumerate() {
            assignment[o.expect("every item is owned at the end of a round")] = j;
        }
        let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        let gap = n as f64 * eps;
        // total - gap lower-bounds the optimum.
        if total == 0.0 || gap <= cfg.relative_tol * (total - gap).max(0.0) || eps <= floor {
            return assignment;
        }
        eps /= cfg.eps_scale;
    }
}

/// Exact O(n^3) Hungarian algorithm (potentials + shortest augmenting paths).
pub fn hungarian_min_cost(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-indexed potentials; way[j] = previous column on the augmenting path.
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row assigned to column j (0 = none)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Wasserstein distance between the dimension-k Rips diagrams of two clouds;
/// the input side uses the reduction engine, the embedding side the planar
/// engine whenever the cloud is 2D.
pub fn mw_metric(x: &PointCloud, z: &PointCloud, k: usize, cfg: &WassersteinConfig) -> Result<f64> {
    let dx = diagram_of(x, k)?;
    let dz = diagram_of(z, k)?;
    Ok(wasserstein(&dx, &dz, cfg)?.0)
}

pub(crate) fn diagram_of(cloud: &PointCloud, k: usize) -> Result<PersistenceDiagram> {
    if cloud.dim() == 2 {
        let res = planar_rips_persistence(cloud, &PlanarOptions::default())?;
        Ok(if k == 0 { res.dgm0 } else { res.dgm1 })
    } else {
        let mut dgms = rips_persistence(cloud, k, &RipsOptions::default())?;
        Ok(dgms.swap_remove(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::PersistencePair;

    fn dgm(points: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(
            1,
            points
                .iter()
                .map(|&(b, d)| PersistencePair {
                    birth: b,
                    death: d,
                    birth_simplex: vec![0, 1],
                    death_simplex: None,
                })
                .collect(),
        )
    }

    fn random_dgm(rng: &mut impl rand::Rng, n: usize) -> PersistenceDiagram {
        dgm(&(0..n)
            .map(|_| {
                let b = rng.gen::<f64>() * 2.0;
                (b, b + rng.gen::<f64>())
            })
            .collect::<Vec<_>>())
    }

    #[test]
    fn identical_diagrams_cost_nothing() {
        let d = dgm(&[(0.5, 1.5), (1.0, 3.0)]);
        let (w, m) = wasserstein(&d, &d, &Default::default()).unwrap();
        assert_eq!(w, 0.0);
        assert_eq!(m.first_to, vec![MatchTarget::Point(0), MatchTarget::Point(1)]);
    }

    #[test]
    fn single_point_against_empty() {
        let d1 = dgm(&[(1.0, 3.0)]);
        let d2 = dgm(&[]);
        let (w, m) = wasserstein(&d1, &d2, &WassersteinConfig::exact()).unwrap();
        assert!((w - 2.0_f64.sqrt()).abs() < 1e-12);
        assert_eq!(m.first_to, vec![MatchTarget::Diagonal]);
    }

    #[test]
    fn hexagon_reference_distance() {
        let d1 = dgm(&[(1.0, 1.732)]);
        let d2 = dgm(&[(1.0, 1.819)]);
        let (w, _) = wasserstein(&d1, &d2, &WassersteinConfig::with_tol(1e-3)).unwrap();
        assert!((w - 0.087).abs() < 1e-3, "got {w}");
    }

    #[test]
    fn essential_mismatch_is_infinite() {
        let mut d1 = dgm(&[(1.0, 2.0)]);
        d1.pairs.push(PersistencePair {
            birth: 0.0,
            death: f64::INFINITY,
            birth_simplex: vec![0],
            death_simplex: None,
        });
        let d2 = dgm(&[(1.0, 2.0)]);
        let (w, _) = wasserstein(&d1, &d2, &Default::default()).unwrap();
        assert!(w.is_infinite());
        assert!(wasserstein(&d1, &dgm(&[]), &Default::default()).unwrap().0.is_infinite());
    }

    #[test]
    fn auction_tracks_hungarian_on_small_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for _ in 0..60 {
            let n1 = rng.gen_range(0..10);
            let n2 = rng.gen_range(0..10);
            let d1 = random_dgm(&mut rng, n1);
            let d2 = random_dgm(&mut rng, n2);
            let (w_auc, m_auc) = wasserstein(&d1, &d2, &Default::default()).unwrap();
            let (w_ex, _) = wasserstein(&d1, &d2, &WassersteinConfig::exact()).unwrap();
            assert!(w_auc + 1e-12 >= w_ex, "auction beat the exact optimum");
            if w_ex > 0.0 {
                assert!(
                    (w_auc - w_ex) / w_ex <= 1e-2,
                    "auction {w_auc} vs exact {w_ex}"
                );
            } else {
                assert!(w_auc <= 1e-9);
            }
            // Internal consistency: reported distance matches the matching cost.
            assert!((w_auc.powi(2) - m_auc.cost_pow_q).abs() <= 1e-12 * (1.0 + m_auc.cost_pow_q));
        }
    }

    #[test]
    fn symmetry_and_triangle_inequality() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(73);
        let cfg = WassersteinConfig::with_tol(1e-3);
        for _ in 0..25 {
            let (n1, n2, n3) = (rng.gen_range(1..8), rng.gen_range(1..8), rng.gen_range(1..8));
            let d1 = random_dgm(&mut rng, n1);
            let d2 = random_dgm(&mut rng, n2);
            let d3 = random_dgm(&mut rng, n3);
            let w12 = wasserstein(&d1, &d2, &cfg).unwrap().0;
            let w21 = wasserstein(&d2, &d1, &cfg).unwrap().0;
            assert!((w12 - w21).abs() <= 1e-2 * (1.0 + w12.max(w21)));
            let w13 = wasserstein(&d1, &d3, &cfg).unwrap().0;
            let w23 = wasserstein(&d2, &d3, &cfg).unwrap().0;
            assert!(w13 <= (w12 + w23) * (1.0 + 2e-2) + 1e-9);
        }
    }

    #[test]
    fn mw_metric_same_cloud_is_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(79);
        let pts: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let c = PointCloud::new(pts).unwrap();
        assert_eq!(mw_metric(&c, &c, 1, &Default::default()).unwrap(), 0.0);
        assert_eq!(mw_metric(&c, &c, 0, &Default::default()).unwrap(), 0.0);
    }
}
