//! Differentiable topological losses. Each loss compares edge lengths (or
//! matched diagram points) between the high-dimensional input and its planar
//! embedding, treating the selected edge sets and matchings as constants of
//! the evaluation; they are recomputed per call on the embedding side and
//! cached once on the input side, which never moves during optimization.

use serde::Serialize;

use topodr_core::cascade;
use topodr_core::error::{CoreError, Result};
use topodr_core::graphs::mst_highdim;
use topodr_core::order::Edge;
use topodr_core::planar::{planar_rips_persistence, PlanarOptions};
use topodr_core::reduction::{analyze, RipsOptions};
use topodr_core::wasserstein::{wasserstein_points, DiagramMatching, MatchTarget, WassersteinConfig};
use topodr_core::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LossVariant {
    /// Length residuals over the spanning trees of both sides.
    TopoAe0,
    /// Length residuals over all dimension-(0,1) critical edges.
    TopoAe1,
    /// Input side extended to the full cascade skeleton.
    CascadeDistortion1,
    /// TopoAe0 plus the dimension-1 Wasserstein distance.
    TopoAeW1,
}

impl LossVariant {
    pub fn parse(s: &str) -> Option<LossVariant> {
        match s {
            "topoae0" => Some(LossVariant::TopoAe0),
            "topoae1" => Some(LossVariant::TopoAe1),
            "cd1" => Some(LossVariant::CascadeDistortion1),
            "taew1" => Some(LossVariant::TopoAeW1),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossVariant::TopoAe0 => "topoae0",
            LossVariant::TopoAe1 => "topoae1",
            LossVariant::CascadeDistortion1 => "cd1",
            LossVariant::TopoAeW1 => "taew1",
        }
    }
}

/// One edge's contribution to a length-residual loss term.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeTerm {
    pub edge: (u32, u32),
    pub len_high: f64,
    pub len_low: f64,
    pub residual_sq: f64,
}

/// Value and gradient of one loss evaluation, with its per-edge breakdown.
#[derive(Debug, Clone)]
pub struct LossBreakdown {
    pub reconstruction: f64,
    pub topological: f64,
    /// reconstruction + weight * topological.
    pub total: f64,
    pub per_edge: Vec<EdgeTerm>,
    /// d(topological)/dZ, flattened n x dim(Z).
    pub grad_z: Vec<f64>,
}

impl LossBreakdown {
    fn topo_only(topological: f64, per_edge: Vec<EdgeTerm>, grad_z: Vec<f64>) -> LossBreakdown {
        LossBreakdown { reconstruction: 0.0, topological, total: topological, per_edge, grad_z }
    }
}

/// Precomputed input-side state for repeated evaluations against moving
/// embeddings.
pub struct TopoLossEvaluator {
    variant: LossVariant,
    x: PointCloud,
    /// Edge set of the first (input-side) term.
    x_edges: Vec<Edge>,
    /// Finite diagram points and their birth/death edges, for the
    /// Wasserstein term.
    x_pairs: Vec<((f64, f64), Edge, Edge)>,
    pub wasserstein_config: WassersteinConfig,
}

impl TopoLossEvaluator {
    /// Runs the input-side analysis once. For dimension-1 variants this uses
    /// the reduction engine (the input may live in any dimension), so the
    /// engine's size cap applies.
    pub fn new(x: &PointCloud, variant: LossVariant) -> Result<TopoLossEvaluator> {
        let needs_dim1 = !matches!(variant, LossVariant::TopoAe0);
        let mut x_edges;
        let mut x_pairs = Vec::new();
        if needs_dim1 {
            let a = analyze(x, 1, &RipsOptions::default())?;
            x_edges = match variant {
                LossVariant::CascadeDistortion1 => cascade::skeleton_gcs(&a, 1)?,
                _ => cascade::critical_edges(&a, 1)?,
            };
            x_pairs = a
                .positive1
                .iter()
                .map(|p| ((p.birth, p.death), p.birth_edge, p.death_edge))
                .collect();
            if variant == LossVariant::TopoAeW1 {
                // The residual term of this baseline is the dimension-0 one.
                x_edges = a.mst_edges.clone();
                x_edges.sort_unstable();
            }
        } else {
            let (_, mut mst) = mst_highdim(x);
            mst.sort_unstable();
            x_edges = mst;
        }
        Ok(TopoLossEvaluator {
            variant,
            x: x.clone(),
            x_edges,
            x_pairs,
            wasserstein_config: WassersteinConfig::default(),
        })
    }

    pub fn variant(&self) -> LossVariant {
        self.variant
    }

    pub fn input(&self) -> &PointCloud {
        &self.x
    }

    pub fn input_term_edges(&self) -> &[Edge] {
        &self.x_edges
    }

    /// Evaluates the topological term and its gradient with respect to the
    /// embedding coordinates.
    pub fn eval(&self, z: &PointCloud) -> Result<LossBreakdown> {
        if z.len() != self.x.len() {
            return Err(CoreError::validation(format!(
                "embedding has {} points but the input has {}",
                z.len(),
                self.x.len()
            )));
        }
        match self.variant {
            LossVariant::TopoAe0 => {
                let z_edges = embedding_tree(z)?;
                Ok(self.residual_loss(z, &z_edges))
            }
            LossVariant::TopoAe1 | LossVariant::CascadeDistortion1 => {
                let res = planar_result(z)?;
                Ok(self.residual_loss(z, &res.critical_edges()))
            }
            LossVariant::TopoAeW1 => {
                let z_edges = embedding_tree(z)?;
                let mut out = self.residual_loss(z, &z_edges);
                let w = self.wasserstein_term(z)?;
                out.topological += w.topological;
                out.total = out.topological;
                for (g, wg) in out.grad_z.iter_mut().zip(&w.grad_z) {
                    *g += wg;
                }
                out.per_edge.extend(w.per_edge);
                Ok(out)
            }
        }
    }

    /// Two-sided squared length residuals: input-term edges measured in both
    /// clouds plus embedding-term edges measured in both clouds.
    fn residual_loss(&self, z: &PointCloud, z_edges: &[Edge]) -> LossBreakdown {
        let mut value = 0.0;
        let mut per_edge = Vec::with_capacity(self.x_edges.len() + z_edges.len());
        let mut grad = vec![0.0; z.len() * z.dim()];
        for side in [&self.x_edges, &z_edges.to_vec()] {
            for &e in side.iter() {
                let (i, j) = e.endpoints();
                let dx = self.x.dist(i, j);
                let dz = z.dist(i, j);
                let r = dz - dx;
                value += r * r;
                per_edge.push(EdgeTerm {
                    edge: (e.i, e.j),
                    len_high: dx,
                    len_low: dz,
                    residual_sq: r * r,
                });
                add_edge_length_grad(z, e, 2.0 * r, &mut grad);
            }
        }
        LossBreakdown::topo_only(value, per_edge, grad)
    }

    /// Dimension-1 Wasserstein distance with gradients routed through the
    /// optimal matching: matched births/deaths differentiate through the
    /// corresponding embedding edges, diagonal matches push the point toward
    /// its projection.
    pub fn wasserstein_term(&self, z: &PointCloud) -> Result<LossBreakdown> {
        let res = planar_result(z)?;
        let z_pairs: Vec<((f64, f64), Edge, Edge)> = res
            .positive1
            .iter()
            .map(|p| ((p.birth, p.death), p.birth_edge, p.death_edge))
            .collect();
        let a_pts: Vec<(f64, f64)> = self.x_pairs.iter().map(|p| p.0).collect();
        let b_pts: Vec<(f64, f64)> = z_pairs.iter().map(|p| p.0).collect();
        let (w, matching) = wasserstein_points(&a_pts, &b_pts, &self.wasserstein_config)?;

        let mut grad = vec![0.0; z.len() * z.dim()];
        if w > 0.0 {
            let scale = 1.0 / (2.0 * w);
            accumulate_matching_grad(z, &z_pairs, &a_pts, &matching, scale, &mut grad);
        }
        Ok(LossBreakdown::topo_only(w, Vec::new(), grad))
    }
}

fn planar_result(z: &PointCloud) -> Result<topodr_core::planar::PlanarResult> {
    if z.dim() != 2 {
        return Err(CoreError::validation(
            "dimension-1 losses require a planar embedding (the fast engine feeds them)",
        ));
    }
    planar_rips_persistence(z, &PlanarOptions::default())
}

/// Spanning tree of the embedding: planar fast path when 2D.
fn embedding_tree(z: &PointCloud) -> Result<Vec<Edge>> {
    let mut mst = if z.dim() == 2 {
        planar_result(z)?.graphs.mst_edges
    } else {
        mst_highdim(z).1
    };
    mst.sort_unstable();
    Ok(mst)
}

/// d(length of e in z)/dz accumulated with coefficient `coeff`; the
/// subgradient at coincident endpoints is zero.
fn add_edge_length_grad(z: &PointCloud, e: Edge, coeff: f64, grad: &mut [f64]) {
    let (i, j) = e.endpoints();
    let len = z.dist(i, j);
    if len == 0.0 {
        return;
    }
    let dim = z.dim();
    let (pi, pj) = (z.point(i), z.point(j));
    for k in 0..dim {
        let u = (pi[k] - pj[k]) / len;
        grad[i * dim + k] += coeff * u;
        grad[j * dim + k] -= coeff * u;
    }
}

fn accumulate_matching_grad(
    z: &PointCloud,
    z_pairs: &[((f64, f64), Edge, Edge)],
    x_pts: &[(f64, f64)],
    matching: &DiagramMatching,
    scale: f64,
    grad: &mut [f64],
) {
    for (k, target) in matching.second_to.iter().enumerate() {
        let ((bz, dz), birth_edge, death_edge) = z_pairs[k];
        let (db, dd) = match *target {
            MatchTarget::Point(m) => {
                let (bx, dx) = x_pts[m];
                (2.0 * (bz - bx), 2.0 * (dz - dx))
            }
            MatchTarget::Diagonal => {
                let gap = dz - bz;
                (-gap, gap)
            }
        };
        add_edge_length_grad(z, birth_edge, scale * db, grad);
        add_edge_length_grad(z, death_edge, scale * dd, grad);
    }
}

/// Mean squared reconstruction error `sum ||xt_i - x_i||^2 / n` and its
/// gradient with respect to the reconstruction.
pub fn loss_reconstruction(x: &PointCloud, xt: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = x.len();
    let expect = n * x.dim();
    if xt.len() != expect {
        return Err(CoreError::validation(format!(
            "reconstruction buffer holds {} values, expected {expect}",
            xt.len()
        )));
    }
    let mut value = 0.0;
    let mut grad = vec![0.0; xt.len()];
    let inv_n = 1.0 / n as f64;
    for (k, (&a, &b)) in x.coords().iter().zip(xt).enumerate() {
        let r = b - a;
        value += r * r;
        grad[k] = 2.0 * r * inv_n;
    }
    Ok((value * inv_n, grad))
}

/// One-shot helpers mirroring the evaluator for single evaluations.
pub fn loss_topoae(x: &PointCloud, z: &PointCloud, d: usize) -> Result<LossBreakdown> {
    let variant = if d == 0 { LossVariant::TopoAe0 } else { LossVariant::TopoAe1 };
    TopoLossEvaluator::new(x, variant)?.eval(z)
}

pub fn loss_cascade_distortion(x: &PointCloud, z: &PointCloud, d: usize) -> Result<LossBreakdown> {
    if d == 0 {
        // The dimension-0 cascade skeleton is the MST, so the terms coincide.
        return loss_topoae(x, z, 0);
    }
    TopoLossEvaluator::new(x, LossVariant::CascadeDistortion1)?.eval(z)
}

pub fn loss_wasserstein_term(x: &PointCloud, z: &PointCloud) -> Result<LossBreakdown> {
    TopoLossEvaluator::new(x, LossVariant::TopoAeW1)?.wasserstein_term(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[&[f64]]) -> PointCloud {
        PointCloud::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn cloud2(points: &[(f64, f64)]) -> PointCloud {
        PointCloud::new(points.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap()
    }

    /// Two four-point clouds whose spanning trees differ by one edge; each
    /// tree has exactly one edge whose length changes by sqrt(2) - 1 in the
    /// other cloud.
    #[test]
    fn four_point_reference_value() {
        let x = cloud2(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (2.0, 1.0)]);
        let z = cloud2(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        let out = loss_topoae(&x, &z, 0).unwrap();
        let expect = 2.0 * (2.0_f64.sqrt() - 1.0).powi(2);
        assert!((out.topological - expect).abs() < 1e-9, "got {}", out.topological);
    }

    #[test]
    fn identical_clouds_are_free() {
        let x = cloud2(&[(0.0, 0.0), (1.0, 0.0), (0.3, 1.1), (2.0, 0.4)]);
        for d in [0, 1] {
            let out = loss_topoae(&x, &x, d).unwrap();
            assert_eq!(out.topological, 0.0);
            assert!(out.grad_z.iter().all(|&g| g == 0.0));
            let out = loss_cascade_distortion(&x, &x, d).unwrap();
            assert_eq!(out.topological, 0.0);
        }
        let out = loss_wasserstein_term(&x, &x).unwrap();
        assert_eq!(out.topological, 0.0);
    }

    #[test]
    fn hexagon_pair_separates_the_losses() {
        // Critical-edge lengths agree between the two fixtures, so the
        // critical-edge loss vanishes while the cascade loss does not.
        let x = cloud(&[
            &[1.0, 0.0, 0.0],
            &[0.5, 0.866, 0.0],
            &[-0.48, 0.667, 0.0],
            &[-0.73, -0.199, 0.433],
            &[-0.48, -1.065, 0.0],
            &[0.5, -0.866, 0.0],
        ]);
        let z = cloud2(&[
            (1.0, 0.0),
            (0.5, 0.866),
            (-0.48, 0.667),
            (-0.98, -0.199),
            (-0.48, -1.065),
            (0.5, -0.866),
        ]);
        let tae = loss_topoae(&x, &z, 1).unwrap();
        assert!(tae.topological <= 1e-9, "critical-edge loss {}", tae.topological);
        let cd = loss_cascade_distortion(&x, &z, 1).unwrap();
        assert!(cd.topological > 1e-3, "cascade loss {}", cd.topological);
    }

    #[test]
    fn cd_dominates_tae_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(97);
        for _ in 0..10 {
            let n = rng.gen_range(6..25);
            let x = PointCloud::new(
                (0..n).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect::<Vec<_>>(),
            )
            .unwrap();
            let z = PointCloud::new(
                (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect::<Vec<_>>(),
            )
            .unwrap();
            for d in [0, 1] {
                let tae = loss_topoae(&x, &z, d).unwrap().topological;
                let cd = loss_cascade_distortion(&x, &z, d).unwrap().topological;
                assert!(cd >= tae - 1e-12, "cd {cd} < tae {tae} at d={d}");
                if d == 0 {
                    assert!((cd - tae).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn reconstruction_examples() {
        let x = cloud2(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        let (v, g) = loss_reconstruction(&x, x.coords()).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&gi| gi == 0.0));

        let mut shifted = x.coords().to_vec();
        shifted[2] += 1.0; // one coordinate of one point
        let (v, _) = loss_reconstruction(&x, &shifted).unwrap();
        assert!((v - 1.0 / 4.0).abs() < 1e-15);
    }

    fn finite_diff_check(
        value_fn: &dyn Fn(&PointCloud) -> f64,
        grad: &[f64],
        z: &PointCloud,
        tol: f64,
    ) {
        let h = 1e-5;
        let dim = z.dim();
        let mut max_rel: f64 = 0.0;
        for i in 0..z.len() {
            for k in 0..dim {
                let mut plus = z.coords().to_vec();
                plus[i * dim + k] += h;
                let mut minus = z.coords().to_vec();
                minus[i * dim + k] -= h;
                let fd = (value_fn(&PointCloud::from_flat(plus, dim).unwrap())
                    - value_fn(&PointCloud::from_flat(minus, dim).unwrap()))
                    / (2.0 * h);
                let g = grad[i * dim + k];
                let denom = fd.abs().max(g.abs()).max(1e-6);
                max_rel = max_rel.max((fd - g).abs() / denom);
            }
        }
        assert!(max_rel < tol, "gradient mismatch: max relative error {max_rel}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        let n = 12;
        let x = PointCloud::new(
            (0..n).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect::<Vec<_>>(),
        )
        .unwrap();
        let z = PointCloud::new((0..n).map(|_| vec![rng.gen(), rng.gen()]).collect::<Vec<_>>())
            .unwrap();

        for variant in [
            LossVariant::TopoAe0,
            LossVariant::TopoAe1,
            LossVariant::CascadeDistortion1,
        ] {
            let eval = TopoLossEvaluator::new(&x, variant).unwrap();
            let out = eval.eval(&z).unwrap();
            // Frozen edge sets: re-evaluate lengths over the captured sets.
            let x_edges = eval.input_term_edges().to_vec();
            let z_edges: Vec<Edge> = match variant {
                LossVariant::TopoAe0 => embedding_tree(&z).unwrap(),
                _ => planar_result(&z).unwrap().critical_edges(),
            };
            let xc = x.clone();
            let frozen = move |zz: &PointCloud| -> f64 {
                let mut v = 0.0;
                for &e in x_edges.iter().chain(&z_edges) {
                    let (i, j) = e.endpoints();
                    let r = zz.dist(i, j) - xc.dist(i, j);
                    v += r * r;
                }
                v
            };
            finite_diff_check(&frozen, &out.grad_z, &z, 1e-4);
        }

        // Wasserstein term with its matching frozen.
        let eval = TopoLossEvaluator::new(&x, LossVariant::TopoAeW1).unwrap();
        let out = eval.wasserstein_term(&z).unwrap();
        let frozen = |zz: &PointCloud| eval.wasserstein_term(zz).unwrap().topological;
        finite_diff_check(&frozen, &out.grad_z, &z, 1e-4);

        // Reconstruction.
        let xt: Vec<f64> = x.coords().iter().map(|c| c + 0.3 * rng.gen::<f64>()).collect();
        let (_, grad) = loss_reconstruction(&x, &xt).unwrap();
        let h = 1e-6;
        for k in [0usize, 5, 17] {
            let mut plus = xt.clone();
            plus[k] += h;
            let mut minus = xt.clone();
            minus[k] -= h;
            let fd = (loss_reconstruction(&x, &plus).unwrap().0
                - loss_reconstruction(&x, &minus).unwrap().0)
                / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn permuting_both_clouds_preserves_losses() {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(103);
        let n = 14;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
        let zs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let xp: Vec<Vec<f64>> = perm.iter().map(|&i| xs[i].clone()).collect();
        let zp: Vec<Vec<f64>> = perm.iter().map(|&i| zs[i].clone()).collect();
        let (x, z) = (PointCloud::new(xs).unwrap(), PointCloud::new(zs).unwrap());
        let (px, pz) = (PointCloud::new(xp).unwrap(), PointCloud::new(zp).unwrap());
        for d in [0, 1] {
            let a = loss_topoae(&x, &z, d).unwrap().topological;
            let b = loss_topoae(&px, &pz, d).unwrap().topological;
            assert!((a - b).abs() < 1e-9, "d={d}: {a} vs {b}");
        }
        // The d=0 cascade skeleton is the MST, which is label-independent on
        // generic data. (The d=1 skeleton picks homologous representatives
        // through the index-based tie order, so it is only invariant as a
        // homology class, not as an edge set.)
        let a = loss_cascade_distortion(&x, &z, 0).unwrap().topological;
        let b = loss_cascade_distortion(&px, &pz, 0).unwrap().topological;
        assert!((a - b).abs() < 1e-9, "cd d=0: {a} vs {b}");
        let a = loss_wasserstein_term(&x, &z).unwrap().topological;
        let b = loss_wasserstein_term(&px, &pz).unwrap().topological;
        assert!((a - b).abs() < 2e-2 * (1.0 + a));
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let x = cloud2(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let z = cloud2(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(loss_topoae(&x, &z, 0).is_err());
    }
}
