//! Embedding quality indicators and the projection of persistent generators
//! into the plane for visual validation.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use topodr_core::cascade::CascadeRecord;
use topodr_core::error::{CoreError, Result};
use topodr_core::order::Edge;
use topodr_core::wasserstein::{mw_metric, WassersteinConfig};
use topodr_core::PointCloud;

/// Root mean squared pairwise-distance error with 1/n normalization (not
/// 1/#pairs).
pub fn metric_distortion(x: &PointCloud, z: &PointCloud) -> Result<f64> {
    check_sizes(x, z)?;
    let n = x.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = x.dist(i, j) - z.dist(i, j);
            sum += r * r;
        }
    }
    Ok((sum / n as f64).sqrt())
}

/// Pearson correlation between the two pairwise-distance vectors.
pub fn linear_correlation(x: &PointCloud, z: &PointCloud) -> Result<f64> {
    check_sizes(x, z)?;
    let n = x.len();
    let mut dx = Vec::with_capacity(n * (n - 1) / 2);
    let mut dz = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dx.push(x.dist(i, j));
            dz.push(z.dist(i, j));
        }
    }
    Ok(pearson(&dx, &dz))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

/// Fraction of vertex triples whose three pairwise-distance orderings agree
/// in both clouds. Exhaustive for n <= 300, otherwise 100n seeded samples
/// (or an explicit `sample_size`).
pub fn triplet_accuracy(
    x: &PointCloud,
    z: &PointCloud,
    sample_size: Option<usize>,
    seed: u64,
) -> Result<f64> {
    check_sizes(x, z)?;
    let n = x.len();
    if n < 3 {
        return Err(CoreError::validation("triplet accuracy needs at least 3 points"));
    }
    let triple_order = |c: &PointCloud, a: usize, b: usize, d: usize| -> [bool; 3] {
        let ab = c.dist(a, b);
        let ad = c.dist(a, d);
        let bd = c.dist(b, d);
        [ab < ad, ab < bd, ad < bd]
    };
    let all_triples = n * (n - 1) * (n - 2) / 6;
    let exhaustive = match sample_size {
        Some(s) => s >= all_triples,
        None => n <= 300,
    };
    if exhaustive {
        let mut agree = 0usize;
        for a in 0..n {
            for b in (a + 1)..n {
                for d in (b + 1)..n {
                    if triple_order(x, a, b, d) == triple_order(z, a, b, d) {
                        agree += 1;
                    }
                }
            }
        }
        Ok(agree as f64 / all_triples as f64)
    } else {
        let samples = sample_size.unwrap_or(100 * n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut agree = 0usize;
        for _ in 0..samples {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let d = rng.gen_range(0..n);
            if a == b || a == d || b == d {
                continue;
            }
            if triple_order(x, a, b, d) == triple_order(z, a, b, d) {
                agree += 1;
            }
        }
        // Degenerate draws are rare and simply shrink the sample.
        let valid = samples as f64 * (1.0 - 3.0 / n as f64).max(0.5);
        Ok((agree as f64 / valid).min(1.0))
    }
}

/// Rank-based trustworthiness and continuity at `k` nearest neighbors.
pub fn trust_continuity(x: &PointCloud, z: &PointCloud, k: usize) -> Result<(f64, f64)> {
    check_sizes(x, z)?;
    let n = x.len();
    if k == 0 || 2 * n <= 3 * k + 1 {
        return Err(CoreError::validation(format!(
            "neighborhood size {k} is too large for {n} points"
        )));
    }
    let rx = ranks(x);
    let rz = ranks(z);
    let penalty = |ranks_src: &[Vec<usize>], ranks_dst: &[Vec<usize>]| -> f64 {
        // Points in the destination k-neighborhood whose source rank exceeds k.
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                if ranks_dst[i][j] <= k && ranks_src[i][j] > k {
                    total += (ranks_src[i][j] - k) as f64;
                }
            }
        }
        1.0 - 2.0 / (n as f64 * k as f64 * (2.0 * n as f64 - 3.0 * k as f64 - 1.0)) * total
    };
    let trust = penalty(&rx, &rz);
    let cont = penalty(&rz, &rx);
    Ok((trust, cont))
}

/// ranks[i][j] = 1-based neighbor rank of j around i (self gets 0). Ties are
/// broken by index for determinism.
fn ranks(c: &PointCloud) -> Vec<Vec<usize>> {
    let n = c.len();
    let mut out = vec![vec![0usize; n]; n];
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| c.dist2(i, a).total_cmp(&c.dist2(i, b)).then(a.cmp(&b)));
        for (r, &j) in order.iter().enumerate() {
            out[i][j] = r + 1;
        }
    }
    out
}

/// A persistent generator of the input drawn in the embedding plane.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectedGenerator {
    pub birth: f64,
    pub death: f64,
    /// Closed polyline through the embedding (first vertex not repeated).
    pub vertices: Vec<u32>,
    pub polyline: Vec<[f64; 2]>,
    /// Polyline after two passes of closed 3-point averaging, for display.
    pub smoothed: Vec<[f64; 2]>,
    /// Proper crossings between non-adjacent segments of the raw polyline.
    pub self_intersections: usize,
}

/// Orders each significant generator (persistence above `threshold_frac` of
/// the maximum) into a closed polyline over the embedding coordinates.
pub fn project_generators(
    z: &PointCloud,
    records: &[CascadeRecord],
    threshold_frac: f64,
) -> Result<Vec<ProjectedGenerator>> {
    if z.dim() != 2 {
        return Err(CoreError::validation("generators project into a 2D embedding"));
    }
    let max_pers = records.iter().map(|r| r.death - r.birth).fold(0.0, f64::max);
    let mut out = Vec::new();
    for rec in records {
        if rec.death - rec.birth < threshold_frac * max_pers {
            continue;
        }
        let cycle = eulerian_cycle(&rec.generator)?;
        let polyline: Vec<[f64; 2]> = cycle
            .iter()
            .map(|&v| {
                let p = z.point(v as usize);
                [p[0], p[1]]
            })
            .collect();
        let smoothed = smooth_closed(&smooth_closed(&polyline));
        let self_intersections = count_crossings(&polyline);
        out.push(ProjectedGenerator {
            birth: rec.birth,
            death: rec.death,
            vertices: cycle,
            polyline,
            smoothed,
            self_intersections,
        });
    }
    Ok(out)
}

/// Hierholzer's algorithm over the generator's edge multiset. Generators are
/// mod-2 cycles (all degrees even); a disconnected or open generator is an
/// internal error.
fn eulerian_cycle(edges: &[Edge]) -> Result<Vec<u32>> {
    if edges.is_empty() {
        return Err(CoreError::internal("empty generator"));
    }
    let mut adj: HashMap<u32, Vec<(u32, usize)>> = HashMap::new();
    for (k, e) in edges.iter().enumerate() {
        adj.entry(e.i).or_default().push((e.j, k));
        adj.entry(e.j).or_default().push((e.i, k));
    }
    for (v, nb) in &adj {
        if nb.len() % 2 != 0 {
            return Err(CoreError::internal(format!(
                "generator vertex {v} has odd degree; not a cycle"
            )));
        }
    }
    let mut used = vec![false; edges.len()];
    let start = edges[0].i;
    let mut stack = vec![start];
    let mut cycle = Vec::new();
    let mut cursor: HashMap<u32, usize> = HashMap::new();
    while let Some(&v) = stack.last() {
        let nb = adj.get(&v).expect("vertex has adjacency");
        let c = cursor.entry(v).or_insert(0);
        let mut advanced = false;
        while *c < nb.len() {
            let (to, eid) = nb[*c];
            *c += 1;
            if !used[eid] {
                used[eid] = true;
                stack.push(to);
                advanced = true;
                break;
            }
        }
        if !advanced {
            cycle.push(stack.pop().expect("stack non-empty"));
        }
    }
    if used.iter().any(|&u| !u) {
        return Err(CoreError::internal("generator is disconnected; not a single cycle"));
    }
    // The walk closes on the start vertex; drop the duplicate.
    if cycle.len() > 1 && cycle.first() == cycle.last() {
        cycle.pop();
    }
    Ok(cycle)
}

fn smooth_closed(poly: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let m = poly.len();
    if m < 3 {
        return poly.to_vec();
    }
    (0..m)
        .map(|k| {
            let a = poly[(k + m - 1) % m];
            let b = poly[k];
            let c = poly[(k + 1) % m];
            [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
        })
        .collect()
}

/// Proper crossings between non-adjacent segments of a closed polyline.
fn count_crossings(poly: &[[f64; 2]]) -> usize {
    let m = poly.len();
    if m < 4 {
        return 0;
    }
    let seg = |k: usize| (poly[k], poly[(k + 1) % m]);
    let mut count = 0;
    for a in 0..m {
        for b in (a + 2)..m {
            if a == 0 && b == m - 1 {
                continue; // adjacent around the wrap
            }
            let (p1, p2) = seg(a);
            let (q1, q2) = seg(b);
            if segments_cross(p1, p2, q1, q2) {
                count += 1;
            }
        }
    }
    count
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    robust_orient(a, b, c)
}

fn robust_orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    // Exactness matters only for sign decisions near collinearity.
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    det
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 > 0.0) != (d2 > 0.0)
        && (d3 > 0.0) != (d4 > 0.0)
        && d1 != 0.0
        && d2 != 0.0
        && d3 != 0.0
        && d4 != 0.0
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTimes {
    pub mw_ms: f64,
    pub distortion_ms: f64,
    pub triplet_ms: f64,
    pub rank_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    pub mw0: f64,
    pub mw1: f64,
    pub metric_distortion: f64,
    pub linear_correlation: f64,
    pub triplet_accuracy: f64,
    pub trustworthiness: f64,
    pub continuity: f64,
    pub neighborhood_size: usize,
    pub times: StageTimes,
}

impl QualityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

pub fn quality_report(x: &PointCloud, z: &PointCloud, k: usize, seed: u64) -> Result<QualityReport> {
    check_sizes(x, z)?;
    let cfg = WassersteinConfig::default();
    let t0 = std::time::Instant::now();
    let mw0 = mw_metric(x, z, 0, &cfg)?;
    let mw1 = mw_metric(x, z, 1, &cfg)?;
    let mw_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = std::time::Instant::now();
    let md = metric_distortion(x, z)?;
    let lc = linear_correlation(x, z)?;
    let distortion_ms = t1.elapsed().as_secs_f64() * 1e3;

    let t2 = std::time::Instant::now();
    let ta = triplet_accuracy(x, z, None, seed)?;
    let triplet_ms = t2.elapsed().as_secs_f64() * 1e3;

    let t3 = std::time::Instant::now();
    let (trust, cont) = trust_continuity(x, z, k)?;
    let rank_ms = t3.elapsed().as_secs_f64() * 1e3;

    Ok(QualityReport {
        mw0,
        mw1,
        metric_distortion: md,
        linear_correlation: lc,
        triplet_accuracy: ta,
        trustworthiness: trust,
        continuity: cont,
        neighborhood_size: k,
        times: StageTimes { mw_ms, distortion_ms, triplet_ms, rank_ms },
    })
}

fn check_sizes(x: &PointCloud, z: &PointCloud) -> Result<()> {
    if x.len() != z.len() {
        return Err(CoreError::validation(format!(
            "clouds have different sizes: {} vs {}",
            x.len(),
            z.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use topodr_core::reduction::{analyze, RipsOptions};

    fn cloud2(points: &[(f64, f64)]) -> PointCloud {
        PointCloud::new(points.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap()
    }

    fn random_cloud(n: usize, dim: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new((0..n).map(|_| (0..dim).map(|_| rng.gen()).collect()).collect()).unwrap()
    }

    #[test]
    fn identity_is_perfect() {
        let x = random_cloud(50, 2, 1);
        assert_eq!(metric_distortion(&x, &x).unwrap(), 0.0);
        assert!((linear_correlation(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(triplet_accuracy(&x, &x, None, 0).unwrap(), 1.0);
        let (t, c) = trust_continuity(&x, &x, 10).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_distortion_reference() {
        // One pair at distance 1 vs 2: residual 1, normalized by n = 2.
        let x = cloud2(&[(0.0, 0.0), (1.0, 0.0)]);
        let z = cloud2(&[(0.0, 0.0), (2.0, 0.0)]);
        let md = metric_distortion(&x, &z).unwrap();
        assert!((md - (0.5_f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rigid_motions_leave_indicators_alone_but_scale_moves_md() {
        let x = random_cloud(60, 3, 2);
        let z = random_cloud(60, 2, 3);
        // Rotate + translate z.
        let (c, s) = (0.6_f64, 0.8_f64);
        let zr = PointCloud::new(
            (0..z.len())
                .map(|i| {
                    let p = z.point(i);
                    vec![c * p[0] - s * p[1] + 3.0, s * p[0] + c * p[1] - 1.5]
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let md1 = metric_distortion(&x, &z).unwrap();
        let md2 = metric_distortion(&x, &zr).unwrap();
        assert!((md1 - md2).abs() < 1e-9);
        let (t1, c1) = trust_continuity(&x, &z, 10).unwrap();
        let (t2, c2) = trust_continuity(&x, &zr, 10).unwrap();
        assert!((t1 - t2).abs() < 1e-12 && (c1 - c2).abs() < 1e-12);
        let ta1 = triplet_accuracy(&x, &z, None, 0).unwrap();
        let ta2 = triplet_accuracy(&x, &zr, None, 0).unwrap();
        assert!((ta1 - ta2).abs() < 1e-12);
        // Uniform scaling: LC and TA invariant, MD not.
        let zs = PointCloud::new(
            (0..z.len()).map(|i| z.point(i).iter().map(|v| v * 2.0).collect()).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!((linear_correlation(&x, &z).unwrap() - linear_correlation(&x, &zs).unwrap()).abs() < 1e-9);
        assert!((triplet_accuracy(&x, &z, None, 0).unwrap()
            - triplet_accuracy(&x, &zs, None, 0).unwrap())
        .abs()
            < 1e-12);
        assert!((metric_distortion(&x, &zs).unwrap() - md1).abs() > 1e-3);
    }

    #[test]
    fn shuffled_embedding_destroys_neighborhoods() {
        use rand::seq::SliceRandom;
        let x = random_cloud(80, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut perm: Vec<usize> = (0..x.len()).collect();
        perm.shuffle(&mut rng);
        let z = PointCloud::new(perm.iter().map(|&i| x.point(i).to_vec()).collect::<Vec<_>>())
            .unwrap();
        let (t, c) = trust_continuity(&x, &z, 10).unwrap();
        assert!(t < 0.8 && c < 0.8, "shuffling left trust {t} cont {c}");
    }

    #[test]
    fn trust_cont_swap_roles() {
        let x = random_cloud(40, 3, 6);
        let z = random_cloud(40, 2, 7);
        let (t_xz, c_xz) = trust_continuity(&x, &z, 10).unwrap();
        let (t_zx, c_zx) = trust_continuity(&z, &x, 10).unwrap();
        assert!((t_xz - c_zx).abs() < 1e-12);
        assert!((c_xz - t_zx).abs() < 1e-12);
    }

    #[test]
    fn sampled_ta_tracks_exhaustive() {
        let x = random_cloud(120, 3, 8);
        let z = random_cloud(120, 2, 9);
        let exact = triplet_accuracy(&x, &z, Some(usize::MAX), 0).unwrap();
        let sampled = triplet_accuracy(&x, &z, Some(100 * 120), 42).unwrap();
        let slack = 2.0 / (100.0_f64 * 120.0).sqrt();
        assert!((exact - sampled).abs() <= slack, "exact {exact} sampled {sampled}");
    }

    #[test]
    fn square_generator_projects_cleanly() {
        let x = cloud2(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let a = analyze(&x, 1, &RipsOptions::default()).unwrap();
        let recs = topodr_core::cascade::cascades(&a).unwrap();
        let projected = project_generators(&x, &recs, 0.2).unwrap();
        assert_eq!(projected.len(), 1);
        let g = &projected[0];
        assert_eq!(g.polyline.len(), 4);
        assert_eq!(g.self_intersections, 0);
        assert_eq!(g.smoothed.len(), 4);
    }

    #[test]
    fn crossing_counter_sees_a_bowtie() {
        // Self-intersecting quadrilateral (hourglass ordering).
        let poly = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(count_crossings(&poly), 1);
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(count_crossings(&square), 0);
    }
}
