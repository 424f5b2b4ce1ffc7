//! Cascade extraction: for each positive dimension-1 pair, the 2-chain
//! accumulated by a homologous propagation from the death triangle, whose
//! boundary is a persistent generator of the killed class.
//!
//! The propagation repeatedly takes the youngest boundary edge. If that edge
//! is the birth edge, the walk is done. If it created an earlier positive
//! pair, the stored cascade of that pair is added. Otherwise the edge forms
//! a same-diameter pair with its first-in-filtration cofacet triangle, which
//! is recomputed on demand rather than stored.
//!
//! The same machinery in dimension 0 pairs vertices with tree edges; its
//! global skeleton is exactly the MST, which the tests assert.

use std::collections::{BTreeSet, HashMap};

use crate::error::{CoreError, Result};
use crate::order::{sorted_triple, Edge};
use crate::reduction::RipsAnalysis;

/// A chain with Z/2 coefficients: membership toggles under addition.
#[derive(Debug, Clone, Default)]
pub struct Mod2Chain<T: Ord + Copy> {
    items: BTreeSet<T>,
}

impl<T: Ord + Copy> Mod2Chain<T> {
    pub fn new() -> Self {
        Mod2Chain { items: BTreeSet::new() }
    }

    pub fn toggle(&mut self, item: T) {
        if !self.items.insert(item) {
            self.items.remove(&item);
        }
    }

    pub fn toggle_all(&mut self, items: impl IntoIterator<Item = T>) {
        for item in items {
            self.toggle(item);
        }
    }

    /// Largest member, i.e. the youngest simplex when members are filtration
    /// ranks.
    pub fn youngest(&self) -> Option<T> {
        self.items.iter().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn contains(&self, item: &T) -> bool {
        self.items.contains(item)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    pub fn into_sorted_vec(self) -> Vec<T> {
        self.items.into_iter().collect()
    }
}

/// Boundary of a 2-chain given as triangles: the mod-2 set of its edges.
pub fn chain_boundary_edges(triangles: &[[u32; 3]]) -> Vec<Edge> {
    let mut b: Mod2Chain<Edge> = Mod2Chain::new();
    for t in triangles {
        b.toggle_all(triangle_edges(*t));
    }
    b.into_sorted_vec()
}

/// Boundary of a 1-chain given as edges: the mod-2 set of its vertices.
pub fn chain_boundary_vertices(edges: &[Edge]) -> Vec<u32> {
    let mut b: Mod2Chain<u32> = Mod2Chain::new();
    for e in edges {
        b.toggle(e.i);
        b.toggle(e.j);
    }
    b.into_sorted_vec()
}

fn triangle_edges(t: [u32; 3]) -> [Edge; 3] {
    [
        Edge::new(t[0] as usize, t[1] as usize),
        Edge::new(t[0] as usize, t[2] as usize),
        Edge::new(t[1] as usize, t[2] as usize),
    ]
}

#[derive(Debug, Clone)]
pub struct CascadeRecord {
    pub birth_edge: Edge,
    pub death_edge: Edge,
    pub death_triangle: [u32; 3],
    pub birth: f64,
    pub death: f64,
    /// Triangles of the cascade after mod-2 reduction (the death triangle is
    /// always a member).
    pub triangles: Vec<[u32; 3]>,
    /// 1-skeleton of the cascade: every edge of a member triangle.
    pub skeleton: Vec<Edge>,
    /// Boundary of the cascade; a 1-cycle whose youngest edge is the birth
    /// edge.
    pub generator: Vec<Edge>,
}

/// Runs the propagation for every positive dimension-1 pair of `a`, in
/// ascending death order (so cascades of earlier pairs are available to
/// later ones).
pub fn cascades(a: &RipsAnalysis) -> Result<Vec<CascadeRecord>> {
    let mut records: Vec<CascadeRecord> = Vec::with_capacity(a.positive1.len());
    let mut by_birth_rank: HashMap<u32, usize> = HashMap::new();
    let iteration_cap = a.num_triangles.max(16);

    for pair in &a.positive1 {
        let birth_rank = a.rank_of(pair.birth_edge);
        let mut cascade: Mod2Chain<[u32; 3]> = Mod2Chain::new();
        let mut boundary: Mod2Chain<u32> = Mod2Chain::new();
        cascade.toggle(pair.death_triangle);
        boundary.toggle_all(triangle_edges(pair.death_triangle).map(|e| a.rank_of(e)));

        let mut steps = 0usize;
        loop {
            let Some(y) = boundary.youngest() else {
                return Err(CoreError::internal(format!(
                    "cascade boundary vanished before reaching the birth edge {:?}",
                    pair.birth_edge
                )));
            };
            if y == birth_rank {
                break;
            }
            steps += 1;
            if steps > iteration_cap {
                return Err(CoreError::internal(
                    "cascade propagation exceeded the triangle count; \
                     filtration order mismatch",
                ));
            }
            if let Some(&ri) = by_birth_rank.get(&y) {
                let prior = &records[ri];
                cascade.toggle_all(prior.triangles.iter().copied());
                boundary.toggle_all(prior.generator.iter().map(|&e| a.rank_of(e)));
            } else {
                let partner = apparent_partner(a, y).ok_or_else(|| {
                    CoreError::internal(format!(
                        "no same-diameter cofacet for boundary edge {:?}; \
                         filtration order mismatch",
                        a.key_of_rank(y).edge
                    ))
                })?;
                cascade.toggle(partner);
                boundary.toggle_all(triangle_edges(partner).map(|e| a.rank_of(e)));
            }
        }

        let triangles = cascade.into_sorted_vec();
        let mut skeleton: Vec<Edge> = triangles.iter().flat_map(|&t| triangle_edges(t)).collect();
        skeleton.sort_unstable();
        skeleton.dedup();
        let mut generator: Vec<Edge> =
            boundary.into_sorted_vec().into_iter().map(|r| a.key_of_rank(r).edge).collect();
        generator.sort_unstable();

        by_birth_rank.insert(birth_rank, records.len());
        records.push(CascadeRecord {
            birth_edge: pair.birth_edge,
            death_edge: pair.death_edge,
            death_triangle: pair.death_triangle,
            birth: pair.birth,
            death: pair.death,
            triangles,
            skeleton,
            generator,
        });
    }
    Ok(records)
}

/// First-in-filtration triangle whose diameter edge is `rank`: the partner
/// of a zero-persistence creator edge.
fn apparent_partner(a: &RipsAnalysis, rank: u32) -> Option<[u32; 3]> {
    let e = a.key_of_rank(rank).edge;
    let mut best: Option<[u32; 3]> = None;
    for w in a.diameter_cofacets(rank) {
        let t = sorted_triple(e.i as usize, e.j as usize, w as usize);
        best = match best {
            None => Some(t),
            Some(b) if crate::order::colex_cmp_tri(t, b).is_lt() => Some(t),
            keep => keep,
        };
    }
    best
}

/// Edges that create or kill a positive class of dimension at most `d`:
/// the MST for d = 0, extended by the birth and death edges of positive
/// dimension-1 pairs for d = 1.
pub fn critical_edges(a: &RipsAnalysis, d: usize) -> Result<Vec<Edge>> {
    let mut edges: Vec<Edge> = a.mst_edges.clone();
    if d >= 1 {
        if a.dgm1.is_none() {
            return Err(CoreError::validation(
                "dimension-1 pairs were not computed for this analysis",
            ));
        }
        for p in &a.positive1 {
            edges.push(p.birth_edge);
            edges.push(p.death_edge);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Global cascade skeleton: the union of the cascade 1-skeletons of every
/// positive pair of dimension at most `d`. For d = 0 this runs the
/// dimension-0 propagation (whose union provably equals the MST).
pub fn skeleton_gcs(a: &RipsAnalysis, d: usize) -> Result<Vec<Edge>> {
    let mut edges = gcs_dim0(a);
    if d >= 1 {
        if a.dgm1.is_none() {
            return Err(CoreError::validation(
                "dimension-1 pairs were not computed for this analysis",
            ));
        }
        for rec in cascades(a)? {
            edges.extend(rec.skeleton);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Dimension-0 cascades: every tree edge kills a vertex class; the
/// propagation from an edge expands across previously stored cascades until
/// it reaches an unpaired vertex. Vertices are ordered by index (smaller
/// index = older).
fn gcs_dim0(a: &RipsAnalysis) -> Vec<Edge> {
    struct Record0 {
        edges: Vec<Edge>,
        /// Boundary endpoints of the path, (younger, older).
        ends: (u32, u32),
    }
    let mut partner_of_vertex: Vec<Option<usize>> = vec![None; a.n];
    let mut recs: Vec<Record0> = Vec::with_capacity(a.mst_edges.len());
    let mut union: BTreeSet<Edge> = BTreeSet::new();

    for &e in &a.mst_edges {
        let mut cascade: Mod2Chain<Edge> = Mod2Chain::new();
        let mut boundary: Mod2Chain<u32> = Mod2Chain::new();
        cascade.toggle(e);
        boundary.toggle(e.i);
        boundary.toggle(e.j);
        loop {
            let y = boundary.youngest().expect("path boundary has endpoints");
            match partner_of_vertex[y as usize] {
                None => {
                    partner_of_vertex[y as usize] = Some(recs.len());
                    let older = boundary.youngest_excluding(y);
                    let edges: Vec<Edge> = cascade.into_sorted_vec();
                    union.extend(edges.iter().copied());
                    recs.push(Record0 { edges, ends: (y, older) });
                    break;
                }
                Some(ri) => {
                    cascade.toggle_all(recs[ri].edges.iter().copied());
                    boundary.toggle(recs[ri].ends.0);
                    boundary.toggle(recs[ri].ends.1);
                }
            }
        }
    }
    union.into_iter().collect()
}

impl Mod2Chain<u32> {
    fn youngest_excluding(&self, skip: u32) -> u32 {
        self.items
            .iter()
            .rev()
            .find(|&&v| v != skip)
            .copied()
            .expect("dimension-0 boundary holds two endpoints")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;
    use crate::reduction::fixtures::{deformed_hexagon_2d, twisted_hexagon_3d};
    use crate::reduction::analyze;

    fn cloud2(points: &[(f64, f64)]) -> PointCloud {
        PointCloud::new(points.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap()
    }

    #[test]
    fn unit_square_cascade_and_skeletons() {
        let c = cloud2(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let a = analyze(&c, 1, &Default::default()).unwrap();
        let recs = cascades(&a).unwrap();
        assert_eq!(recs.len(), 1);
        let rec = &recs[0];
        // The propagation pulls in both triangles over the killing diagonal;
        // the generator is the 4-cycle of sides.
        assert_eq!(rec.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(rec.generator.len(), 4);

        // Global skeleton: MST plus the remaining side and the diagonal.
        let gcs1 = skeleton_gcs(&a, 1).unwrap();
        let mut expect: Vec<Edge> = vec![
            Edge::new(0, 1),
            Edge::new(1, 2),
            Edge::new(2, 3),
            Edge::new(0, 3),
            Edge::new(0, 2),
        ];
        expect.sort_unstable();
        assert_eq!(gcs1, expect);

        // Critical edges: the four sides plus the killing diagonal.
        let pi1 = critical_edges(&a, 1).unwrap();
        assert_eq!(pi1, expect);
        let pi0 = critical_edges(&a, 0).unwrap();
        let mut mst = a.mst_edges.clone();
        mst.sort_unstable();
        assert_eq!(pi0, mst);
    }

    #[test]
    fn cascade_invariants_hold() {
        let a = analyze(&twisted_hexagon_3d(), 1, &Default::default()).unwrap();
        for rec in cascades(&a).unwrap() {
            // Boundary of the stored cascade equals the stored generator.
            assert_eq!(chain_boundary_edges(&rec.triangles), rec.generator);
            // The generator is a 1-cycle whose youngest edge is the birth edge.
            assert!(chain_boundary_vertices(&rec.generator).is_empty());
            let youngest = rec.generator.iter().map(|&e| a.rank_of(e)).max().unwrap();
            assert_eq!(a.key_of_rank(youngest).edge, rec.birth_edge);
            // Death triangle is a member and every generator edge is in the skeleton.
            assert!(rec.triangles.contains(&rec.death_triangle));
            assert!(rec.generator.iter().all(|e| rec.skeleton.contains(e)));
        }
    }

    #[test]
    fn deformed_hexagon_cascade_contains_the_long_chord() {
        // The planar fixture's cascade reaches beyond its critical edges:
        // it must pull in a chord of length 1.623.
        let z = deformed_hexagon_2d();
        let a = analyze(&z, 1, &Default::default()).unwrap();
        let recs = cascades(&a).unwrap();
        assert_eq!(recs.len(), 1);
        let lens: Vec<f64> = recs[0]
            .skeleton
            .iter()
            .map(|e| z.dist(e.i as usize, e.j as usize))
            .collect();
        assert!(
            lens.iter().any(|l| (l - 1.623).abs() < 1e-3),
            "cascade skeleton lengths: {lens:?}"
        );
    }

    #[test]
    fn gcs0_equals_mst_on_random_clouds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let n = rng.gen_range(2..60);
            let h = rng.gen_range(1..4);
            let pts: Vec<Vec<f64>> =
                (0..n).map(|_| (0..h).map(|_| rng.gen::<f64>()).collect()).collect();
            let c = PointCloud::new(pts).unwrap();
            let a = analyze(&c, 0, &Default::default()).unwrap();
            let gcs0 = skeleton_gcs(&a, 0).unwrap();
            let mut mst = a.mst_edges.clone();
            mst.sort_unstable();
            assert_eq!(gcs0, mst);
        }
    }

    #[test]
    fn gcs1_without_positive_pairs_is_mst() {
        let c = cloud2(&[(0.0, 0.0), (1.0, 0.0), (2.5, 0.1)]);
        let a = analyze(&c, 1, &Default::default()).unwrap();
        assert!(a.positive1.is_empty());
        let gcs1 = skeleton_gcs(&a, 1).unwrap();
        let mut mst = a.mst_edges.clone();
        mst.sort_unstable();
        assert_eq!(gcs1, mst);
    }

    #[test]
    fn nested_rings_cascade_regression() {
        // Two nested cycles: the outer class's propagation must absorb the
        // stored cascade of the inner pair (its birth edge surfaces as the
        // youngest boundary edge mid-walk). Frozen counts pin the behavior.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for k in 0..20 {
            let t = std::f64::consts::TAU * k as f64 / 20.0;
            let r = 1.0 + 0.02 * rng.gen::<f64>();
            pts.push((r * t.cos(), r * t.sin()));
        }
        for k in 0..44 {
            let t = std::f64::consts::TAU * (k as f64 + 0.3) / 44.0;
            let r = 2.0 + 0.02 * rng.gen::<f64>();
            pts.push((r * t.cos(), r * t.sin()));
        }
        let c = cloud2(&pts);
        let a = analyze(&c, 1, &Default::default()).unwrap();
        let recs = cascades(&a).unwrap();
        // The empty annulus between the rings keeps radial edges lens-free,
        // so ladder cycles join the two ring classes; frozen count.
        assert_eq!(recs.len(), 21);
        let mut order: Vec<usize> = (0..recs.len()).collect();
        order.sort_by(|&i, &j| {
            (recs[j].death - recs[j].birth).total_cmp(&(recs[i].death - recs[i].birth))
        });
        // Dominant class: the outer ring; its generator is the ring itself
        // and its 2-chain has absorbed the cascades it walked through.
        let outer = &recs[order[0]];
        assert_eq!(outer.generator.len(), 44);
        assert_eq!(outer.triangles.len(), 82);
        let inner = &recs[order[1]];
        assert_eq!(inner.triangles.len(), 64);
        let absorbed = recs
            .iter()
            .enumerate()
            .filter(|&(i, r)| {
                i != order[0] && r.triangles.iter().all(|t| outer.triangles.contains(t))
            })
            .count();
        assert_eq!(absorbed, 7, "stored-cascade reuse pattern changed");
    }

    #[test]
    fn boundary_of_boundary_vanishes_on_random_chains() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        for _ in 0..50 {
            let n = rng.gen_range(4..20u32);
            let mut tris: Vec<[u32; 3]> = (0..rng.gen_range(1..30))
                .map(|_| loop {
                    let mut t = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
                    t.sort_unstable();
                    if t[0] < t[1] && t[1] < t[2] {
                        break t;
                    }
                })
                .collect();
            tris.sort_unstable();
            tris.dedup();
            let edges = chain_boundary_edges(&tris);
            assert!(chain_boundary_vertices(&edges).is_empty());
        }
    }
}
