//! Generic Rips persistence for clouds in any dimension, by Z/2 column
//! reduction of the triangle boundary matrix. It serves as the input-side
//! PH1 engine and as the correctness oracle for the planar engine.
//!
//! Dimension 0 is read off the MST merge sequence instead of reducing edge
//! columns (the union-find route makes those columns redundant, in the same
//! way the clearing optimization would).
//!
//! Two equivalent reduction routes produce the canonical pairing:
//!
//! * With the apparent-pairs shortcut (default), the anti-transposed matrix
//!   is reduced: one column per edge, entries are its cofacet triangles,
//!   columns processed youngest-first. An edge whose tie-lens is non-empty
//!   forms an apparent pair with its oldest same-diameter cofacet and costs
//!   no matrix work at all, which covers almost every column; only edges
//!   with empty lenses reduce for real. Anti-transposition preserves the
//!   pairing, so this route returns exactly the simplex pairs of the plain
//!   one.
//!
//! * The plain route reduces boundary columns triangle by triangle in
//!   filtration order. A triangle belongs to the group of its tie-maximal
//!   edge; groups ordered by edge rank and triangles by ascending third
//!   vertex (which for a fixed diameter edge IS ascending colexicographic
//!   order) enumerate the filtration without materializing it. This route
//!   visits all n-choose-3 triangles, so it is only usable on small clouds.
//!
//! Since both remaining edges of a grouped triangle rank strictly lower than
//! the group edge, Kruskal's processing order guarantees a group edge is
//! never an MST edge; MST edge columns are skipped in both routes.

use crate::cloud::PointCloud;
use crate::diagram::{PersistenceDiagram, PersistencePair};
use crate::error::{CoreError, Result};
use std::collections::HashMap;

use crate::order::{colex_cmp_tri, Edge, EdgeKey};

#[derive(Debug, Clone)]
pub struct RipsOptions {
    /// Memory guard: refuse clouds above this size (the full 2-skeleton has
    /// n-choose-3 triangles).
    pub max_points: usize,
    /// Pair the first triangle of each group with its diameter edge without
    /// touching its column. Off switches to the plain reduction path; the
    /// resulting pairing is identical.
    pub apparent_shortcut: bool,
    /// Also emit zero-persistence pairs in the dimension-1 diagram.
    pub keep_zero_pairs: bool,
}

impl Default for RipsOptions {
    fn default() -> Self {
        RipsOptions { max_points: 3000, apparent_shortcut: true, keep_zero_pairs: false }
    }
}

/// A dimension-1 pair with positive persistence.
#[derive(Debug, Clone)]
pub struct PositivePair1 {
    pub birth_edge: Edge,
    /// Tie-maximal edge of the death triangle; its length is the death value.
    pub death_edge: Edge,
    /// The triangle actually paired by the reduction (drives the cascade
    /// propagation).
    pub death_triangle: [u32; 3],
    /// First-in-filtration triangle having `death_edge` as diameter; the
    /// representative reported in diagrams.
    pub canonical_triangle: [u32; 3],
    pub birth: f64,
    pub death: f64,
}

#[derive(Debug)]
pub struct RipsAnalysis {
    pub n: usize,
    /// Dense distance matrix, row-major n*n.
    pub dist: Vec<f64>,
    /// All edges sorted ascending by tie-broken key; the index is the rank.
    pub edge_keys: Vec<EdgeKey>,
    /// Rank lookup, n*n.
    pub edge_rank: Vec<u32>,
    /// Per edge rank: true when the edge belongs to the MST.
    pub mst_flag: Vec<bool>,
    pub mst_edges: Vec<Edge>,
    pub dgm0: PersistenceDiagram,
    pub dgm1: Option<PersistenceDiagram>,
    /// Positive pairs in filtration (ascending death) order.
    pub positive1: Vec<PositivePair1>,
    /// Number of 2-simplices in the full complex.
    pub num_triangles: usize,
}

impl RipsAnalysis {
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn rank_of(&self, e: Edge) -> u32 {
        self.edge_rank[e.i as usize * self.n + e.j as usize]
    }

    pub fn key_of_rank(&self, r: u32) -> EdgeKey {
        self.edge_keys[r as usize]
    }

    /// Third vertices of the triangles whose diameter edge is `e` (tie-broken
    /// strict comparison against `e`'s key on both incident edges).
    pub fn diameter_cofacets(&self, e_rank: u32) -> Vec<u32> {
        let ek = self.edge_keys[e_rank as usize];
        let (i, j) = ek.edge.endpoints();
        let mut out = Vec::new();
        for w in 0..self.n {
            if w == i || w == j {
                continue;
            }
            if self.tie_less(w, i, &ek) && self.tie_less(w, j, &ek) {
                out.push(w as u32);
            }
        }
        out
    }

    #[inline]
    fn tie_less(&self, w: usize, v: usize, against: &EdgeKey) -> bool {
        let d = self.d(w, v);
        d < against.len || (d == against.len && Edge::new(w, v) < against.edge)
    }

    /// First-in-filtration triangle whose diameter edge is `e`, i.e. the
    /// colexicographically smallest cofacet triple.
    pub fn canonical_death_triangle(&self, e_rank: u32) -> Option<[u32; 3]> {
        let e = self.edge_keys[e_rank as usize].edge;
        let mut best: Option<[u32; 3]> = None;
        for w in self.diameter_cofacets(e_rank) {
            let t = crate::order::sorted_triple(e.i as usize, e.j as usize, w as usize);
            best = match best {
                None => Some(t),
                Some(b) if colex_cmp_tri(t, b).is_lt() => Some(t),
                keep => keep,
            };
        }
        best
    }
}

enum PairedCol {
    Reduced(Box<[u32]>),
}

/// Full analysis: distance matrix, tie order, Dgm0 via MST, and (for
/// `max_dim >= 1`) the reduced dimension-1 pairing.
pub fn analyze(cloud: &PointCloud, max_dim: usize, opts: &RipsOptions) -> Result<RipsAnalysis> {
    let n = cloud.len();
    if n > opts.max_points {
        return Err(CoreError::validation(format!(
            "cloud of {n} points exceeds the reduction engine cap of {} \
             (the full 2-skeleton would hold {} triangles); raise max_points \
             or use the planar engine",
            opts.max_points,
            n * (n - 1) * (n - 2) / 6
        )));
    }
    let dist = cloud.distance_matrix();

    let mut edge_keys: Vec<EdgeKey> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edge_keys.push(EdgeKey::new(dist[i * n + j], Edge::new(i, j)));
        }
    }
    edge_keys.sort_unstable();
    let mut edge_rank = vec![0u32; n * n];
    for (r, ek) in edge_keys.iter().enumerate() {
        let (i, j) = ek.edge.endpoints();
        edge_rank[i * n + j] = r as u32;
        edge_rank[j * n + i] = r as u32;
    }

    let (dgm0, mst_edges) = crate::graphs::dgm0_from_sorted_edges(n, edge_keys.iter().copied());
    let mut mst_flag = vec![false; edge_keys.len()];
    for e in &mst_edges {
        mst_flag[edge_rank[e.i as usize * n + e.j as usize] as usize] = true;
    }

    let mut analysis = RipsAnalysis {
        n,
        dist,
        edge_keys,
        edge_rank,
        mst_flag,
        mst_edges,
        dgm0,
        dgm1: None,
        positive1: Vec::new(),
        num_triangles: 0,
    };

    if max_dim >= 1 {
        if opts.apparent_shortcut {
            reduce_dim1_cofacets(&mut analysis, opts)?;
        } else {
            reduce_dim1_plain(&mut analysis, opts)?;
        }
    }
    Ok(analysis)
}

fn reduce_dim1_plain(a: &mut RipsAnalysis, opts: &RipsOptions) -> Result<()> {
    let e_count = a.edge_keys.len();
    let n = a.n;
    let mut paired: Vec<Option<PairedCol>> = Vec::with_capacity(e_count);
    paired.resize_with(e_count, || None);
    let mut positives: Vec<PositivePair1> = Vec::new();
    let mut zero_pairs: Vec<PersistencePair> = Vec::new();
    let mut num_triangles = 0usize;

    let mut col: Vec<u32> = Vec::new();
    let mut tmp: Vec<u32> = Vec::new();

    // For fixed endpoints, ascending third vertex is exactly ascending
    // colexicographic order on the sorted triples, so scanning w upward
    // enumerates each group in filtration order with no sorting.
    for er in 0..e_count {
        if a.mst_flag[er] {
            continue;
        }
        let ek = a.edge_keys[er];
        let (i, j) = ek.edge.endpoints();
        let row_i = &a.edge_rank[i * n..(i + 1) * n];
        let row_j = &a.edge_rank[j * n..(j + 1) * n];
        let er32 = er as u32;
        let mut first: Option<u32> = None;

        for w in 0..n {
            if w == i || w == j || row_i[w] >= er32 || row_j[w] >= er32 {
                continue;
            }
            num_triangles += 1;
            let tri = crate::order::sorted_triple(i, j, w);
            let Some(w1) = first else {
                // Group head: apparent pair with the diameter edge.
                first = Some(w as u32);
                let mut c = [row_i[w], row_j[w], er32];
                c.sort_unstable();
                paired[er] = Some(PairedCol::Reduced(Box::new(c) as Box<[u32]>));
                if opts.keep_zero_pairs {
                    zero_pairs.push(PersistencePair {
                        birth: ek.len,
                        death: ek.len,
                        birth_simplex: vec![ek.edge.i, ek.edge.j],
                        death_simplex: Some(tri.to_vec()),
                    });
                }
                continue;
            };

            // The diameter edge cancels immediately against the group head's
            // column; start from the remaining four edges.
            col.clear();
            col.extend_from_slice(&[
                row_i[w],
                row_j[w],
                row_i[w1 as usize],
                row_j[w1 as usize],
            ]);
            col.sort_unstable();
            loop {
                let Some(&piv) = col.last() else { break };
                match &paired[piv as usize] {
                    None => {
                        let pk = a.edge_keys[piv as usize];
                        debug_assert!(
                            !a.mst_flag[piv as usize],
                            "tree edge surfaced as a reduction pivot"
                        );
                        if pk.len < ek.len {
                            positives.push(PositivePair1 {
                                birth_edge: pk.edge,
                                death_edge: ek.edge,
                                death_triangle: tri,
                                canonical_triangle: crate::order::sorted_triple(
                                    i,
                                    j,
                                    first.expect("group head exists") as usize,
                                ),
                                birth: pk.len,
                                death: ek.len,
                            });
                        } else if opts.keep_zero_pairs {
                            zero_pairs.push(PersistencePair {
                                birth: pk.len,
                                death: ek.len,
                                birth_simplex: vec![pk.edge.i, pk.edge.j],
                                death_simplex: Some(tri.to_vec()),
                            });
                        }
                        paired[piv as usize] = Some(PairedCol::Reduced(col.clone().into()));
                        break;
                    }
                    Some(PairedCol::Reduced(c)) => {
                        sym_diff_into(&col, c, &mut tmp);
                        std::mem::swap(&mut col, &mut tmp);
                    }
                }
            }
        }
    }

    // A Rips filtration taken to the complete complex kills every
    // 1-dimensional class: every non-tree edge must have been paired.
    for er in 0..e_count {
        if !a.mst_flag[er] && paired[er].is_none() {
            return Err(CoreError::internal(format!(
                "unpaired non-tree edge {:?} after reduction",
                a.edge_keys[er].edge
            )));
        }
    }

    positives.sort_by(|x, y| {
        EdgeKey::new(x.death, x.death_edge).cmp(&EdgeKey::new(y.death, y.death_edge))
    });

    let mut pairs: Vec<PersistencePair> = positives
        .iter()
        .map(|p| PersistencePair {
            birth: p.birth,
            death: p.death,
            birth_simplex: vec![p.birth_edge.i, p.birth_edge.j],
            death_simplex: Some(p.canonical_triangle.to_vec()),
        })
        .collect();
    pairs.append(&mut zero_pairs);

    a.dgm1 = Some(PersistenceDiagram::new(1, pairs));
    a.positive1 = positives;
    a.num_triangles = num_triangles;
    Ok(())
}

/// Symmetric difference of two sorted rank lists.
fn sym_diff_into(lhs: &[u32], rhs: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut x, mut y) = (0, 0);
    while x < lhs.len() && y < rhs.len() {
        match lhs[x].cmp(&rhs[y]) {
            std::cmp::Ordering::Less => {
                out.push(lhs[x]);
                x += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(rhs[y]);
                y += 1;
            }
            std::cmp::Ordering::Equal => {
                x += 1;
                y += 1;
            }
        }
    }
    out.extend_from_slice(&lhs[x..]);
    out.extend_from_slice(&rhs[y..]);
}

/// Triangle identifier in the cofacet route: its diameter edge rank plus the
/// opposite vertex. Ordering matches the filtration order on triangles.
type TriKey = (u32, u32);

/// Canonical key of the triangle spanned by edge `e` (rank `er`) and vertex
/// `w`: diameter edge rank plus the vertex opposite that edge.
#[inline]
fn cofacet_key(a: &RipsAnalysis, e: Edge, er: u32, w: usize) -> TriKey {
    let n = a.n;
    let r_iw = a.edge_rank[e.i as usize * n + w];
    let r_jw = a.edge_rank[e.j as usize * n + w];
    if r_iw >= r_jw {
        if r_iw >= er {
            (r_iw, e.j)
        } else {
            (er, w as u32)
        }
    } else if r_jw >= er {
        (r_jw, e.i)
    } else {
        (er, w as u32)
    }
}

fn key_triangle(a: &RipsAnalysis, key: TriKey) -> [u32; 3] {
    let e = a.edge_keys[key.0 as usize].edge;
    crate::order::sorted_triple(e.i as usize, e.j as usize, key.1 as usize)
}

/// Pops the oldest surviving entry of a lazy mod-2 heap (equal keys cancel
/// pairwise).
fn pop_pivot(heap: &mut std::collections::BinaryHeap<std::cmp::Reverse<TriKey>>) -> Option<TriKey> {
    while let Some(std::cmp::Reverse(top)) = heap.pop() {
        if heap.peek() == Some(&std::cmp::Reverse(top)) {
            heap.pop();
            continue;
        }
        return Some(top);
    }
    None
}

/// Fast route: reduce the anti-transposed boundary matrix (one column per
/// edge, youngest edges first). Apparent pairs -- edges whose tie-lens is
/// non-empty -- cost a single scan; the pairing equals the plain route's.
fn reduce_dim1_cofacets(a: &mut RipsAnalysis, opts: &RipsOptions) -> Result<()> {
    let n = a.n;
    let e_count = a.edge_keys.len();
    a.num_triangles = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;

    // Per claimed triangle (by key): the owning edge rank, or the stored
    // reduced column for non-apparent owners.
    let mut claimed: HashMap<TriKey, u32> = HashMap::new();
    let mut stored: HashMap<u32, StoredCol> = HashMap::new();
    let mut positives: Vec<PositivePair1> = Vec::new();
    let mut zero_pairs: Vec<PersistencePair> = Vec::new();
    let mut paired_edge = vec![false; e_count];

    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<TriKey>> =
        std::collections::BinaryHeap::new();

    for er in (0..e_count).rev() {
        if a.mst_flag[er] {
            continue;
        }
        let ek = a.edge_keys[er];
        let e = ek.edge;
        let (i, j) = e.endpoints();

        // Oldest cofacet of the raw column.
        let mut oldest: Option<TriKey> = None;
        for w in 0..n {
            if w == i || w == j {
                continue;
            }
            let k = cofacet_key(a, e, er as u32, w);
            if oldest.map_or(true, |o| k < o) {
                oldest = Some(k);
            }
        }
        let Some(raw_pivot) = oldest else {
            continue; // n = 2: no triangles at all
        };

        if raw_pivot.0 == er as u32 {
            // The edge is the diameter of its oldest cofacet: apparent pair.
            claimed.insert(raw_pivot, er as u32);
            paired_edge[er] = true;
            if opts.keep_zero_pairs {
                zero_pairs.push(PersistencePair {
                    birth: ek.len,
                    death: ek.len,
                    birth_simplex: vec![e.i, e.j],
                    death_simplex: Some(key_triangle(a, raw_pivot).to_vec()),
                });
            }
            continue;
        }

        // Genuine reduction.
        heap.clear();
        for w in 0..n {
            if w != i && w != j {
                heap.push(std::cmp::Reverse(cofacet_key(a, e, er as u32, w)));
            }
        }
        loop {
            let Some(pivot) = pop_pivot(&mut heap) else {
                return Err(CoreError::internal(format!(
                    "coboundary column of non-tree edge {e:?} vanished"
                )));
            };
            match claimed.get(&pivot) {
                None => {
                    claimed.insert(pivot, er as u32);
                    paired_edge[er] = true;
                    let death_key = a.edge_keys[pivot.0 as usize];
                    let tri = key_triangle(a, pivot);
                    if ek.len < death_key.len {
                        positives.push(PositivePair1 {
                            birth_edge: e,
                            death_edge: death_key.edge,
                            death_triangle: tri,
                            canonical_triangle: tri, // placeholder; set below
                            birth: ek.len,
                            death: death_key.len,
                        });
                    } else if opts.keep_zero_pairs {
                        zero_pairs.push(PersistencePair {
                            birth: ek.len,
                            death: death_key.len,
                            birth_simplex: vec![e.i, e.j],
                            death_simplex: Some(tri.to_vec()),
                        });
                    }
                    // Store the remaining column (pivot included) for later
                    // reductions that hit the same pivot.
                    let mut colv: Vec<TriKey> = vec![pivot];
                    while let Some(k) = pop_pivot(&mut heap) {
                        colv.push(k);
                    }
                    stored.insert(er as u32, StoredCol::Reduced(colv.into_boxed_slice()));
                    break;
                }
                Some(&owner) => {
                    heap.push(std::cmp::Reverse(pivot));
                    match stored.get(&owner) {
                        Some(StoredCol::Reduced(colv)) => {
                            for &k in colv.iter() {
                                heap.push(std::cmp::Reverse(k));
                            }
                        }
                        None => {
                            // Apparent owner: replay its raw column.
                            let oe = a.edge_keys[owner as usize].edge;
                            let (oi, oj) = oe.endpoints();
                            for w in 0..n {
                                if w != oi && w != oj {
                                    heap.push(std::cmp::Reverse(cofacet_key(a, oe, owner, w)));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    for er in 0..e_count {
        if !a.mst_flag[er] && !paired_edge[er] && a.n > 2 {
            return Err(CoreError::internal(format!(
                "unpaired non-tree edge {:?} after reduction",
                a.edge_keys[er].edge
            )));
        }
    }

    // Canonical representative: first-in-filtration cofacet of the death edge.
    for p in &mut positives {
        let er = a.edge_rank[p.death_edge.i as usize * n + p.death_edge.j as usize];
        p.canonical_triangle = a
            .canonical_death_triangle(er)
            .expect("death edge has same-diameter cofacets");
    }

    positives.sort_by(|x, y| {
        EdgeKey::new(x.death, x.death_edge).cmp(&EdgeKey::new(y.death, y.death_edge))
    });
    let mut pairs: Vec<PersistencePair> = positives
        .iter()
        .map(|p| PersistencePair {
            birth: p.birth,
            death: p.death,
            birth_simplex: vec![p.birth_edge.i, p.birth_edge.j],
            death_simplex: Some(p.canonical_triangle.to_vec()),
        })
        .collect();
    pairs.append(&mut zero_pairs);
    a.dgm1 = Some(PersistenceDiagram::new(1, pairs));
    a.positive1 = positives;
    Ok(())
}

enum StoredCol {
    Reduced(Box<[TriKey]>),
}

/// Rips persistence diagrams up to `max_dim` (0 or 1). Dimension 0 comes
/// from the MST; dimension 1 from boundary-matrix reduction.
pub fn rips_persistence(
    cloud: &PointCloud,
    max_dim: usize,
    opts: &RipsOptions,
) -> Result<Vec<PersistenceDiagram>> {
    if max_dim > 1 {
        return Err(CoreError::validation("only homology dimensions 0 and 1 are supported"));
    }
    let a = analyze(cloud, max_dim, opts)?;
    let mut out = vec![a.dgm0];
    if max_dim >= 1 {
        out.push(a.dgm1.expect("dimension-1 diagram was just computed"));
    }
    Ok(out)
}

/// The spec'd positive-pair view: dimension-k pairs with birth < death,
/// ascending by death value.
pub fn positive_pairs(cloud: &PointCloud, k: usize, opts: &RipsOptions) -> Result<Vec<PersistencePair>> {
    let diagrams = rips_persistence(cloud, k, opts)?;
    Ok(diagrams[k].positive_pairs().into_iter().cloned().collect())
}

/// Quadratic Prim oracle used by tests to validate Kruskal-based MSTs.
pub fn prim_mst_oracle(cloud: &PointCloud) -> Vec<Edge> {
    let n = cloud.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<EdgeKey> = (0..n)
        .map(|v| EdgeKey::new(if v == 0 { -1.0 } else { f64::INFINITY }, Edge::new(v, (v + 1) % n)))
        .collect();
    let mut best_from = vec![0usize; n];
    let mut edges = Vec::new();
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&x, &y| best[x].cmp(&best[y]))
            .expect("a vertex remains");
        in_tree[v] = true;
        if best[v].len >= 0.0 {
            edges.push(Edge::new(v, best_from[v]));
        }
        for u in 0..n {
            if !in_tree[u] {
                let cand = EdgeKey::new(cloud.dist(u, v), Edge::new(u, v));
                if cand < best[u] {
                    best[u] = cand;
                    best_from[u] = v;
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::cloud::PointCloud;

    /// Planar hexagon with one displaced vertex; its dimension-1 diagram
    /// differs from the lifted sibling below even though all critical edge
    /// lengths agree between the two.
    pub fn deformed_hexagon_2d() -> PointCloud {
        PointCloud::new(vec![
            vec![1.0, 0.0],
            vec![0.5, 0.866],
            vec![-0.48, 0.667],
            vec![-0.98, -0.199],
            vec![-0.48, -1.065],
            vec![0.5, -0.866],
        ])
        .unwrap()
    }

    /// The same hexagon with that vertex rotated out of the plane instead.
    pub fn twisted_hexagon_3d() -> PointCloud {
        PointCloud::new(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.5, 0.866, 0.0],
            vec![-0.48, 0.667, 0.0],
            vec![-0.73, -0.199, 0.433],
            vec![-0.48, -1.065, 0.0],
            vec![0.5, -0.866, 0.0],
        ])
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{deformed_hexagon_2d, twisted_hexagon_3d};
    use super::*;
    use crate::graphs::mst_highdim;

    fn cloud2(points: &[(f64, f64)]) -> PointCloud {
        PointCloud::new(points.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap()
    }

    #[test]
    fn unit_square_diagram() {
        let c = cloud2(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let opts = RipsOptions { keep_zero_pairs: true, ..Default::default() };
        let dgms = rips_persistence(&c, 1, &opts).unwrap();
        let pos = dgms[1].positive_pairs();
        assert_eq!(pos.len(), 1);
        assert!((pos[0].birth - 1.0).abs() < 1e-12);
        assert!((pos[0].death - 2.0_f64.sqrt()).abs() < 1e-12);
        assert_eq!(pos[0].birth_simplex, vec![2, 3]);
        assert_eq!(pos[0].death_simplex, Some(vec![0, 1, 2]));
        // Two zero-persistence pairs: one per diagonal.
        assert_eq!(dgms[1].pairs.len(), 3);
        // Dgm0: three unit deaths plus the essential class.
        let deaths: Vec<f64> =
            dgms[0].pairs.iter().filter(|p| !p.is_essential()).map(|p| p.death).collect();
        assert_eq!(deaths, vec![1.0, 1.0, 1.0]);
        assert_eq!(dgms[0].essential_count(), 1);
    }

    #[test]
    fn regular_hexagon_kills_at_sqrt3() {
        let pts: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let t = std::f64::consts::PI / 3.0 * k as f64;
                (t.cos(), t.sin())
            })
            .collect();
        let dgms = rips_persistence(&cloud2(&pts), 1, &Default::default()).unwrap();
        let pos = dgms[1].positive_pairs();
        assert_eq!(pos.len(), 1);
        assert!((pos[0].birth - 1.0).abs() < 1e-9);
        assert!((pos[0].death - 3.0_f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn hexagon_fixtures_match_reference_values() {
        let x = twisted_hexagon_3d();
        let dgms = rips_persistence(&x, 1, &Default::default()).unwrap();
        let pos = dgms[1].positive_pairs();
        assert_eq!(pos.len(), 1);
        assert!((pos[0].birth - 1.0).abs() < 1e-3);
        assert!((pos[0].death - 1.732).abs() < 1e-3);

        let z = deformed_hexagon_2d();
        let dgms = rips_persistence(&z, 1, &Default::default()).unwrap();
        let pos = dgms[1].positive_pairs();
        assert_eq!(pos.len(), 1);
        assert!((pos[0].birth - 1.0).abs() < 1e-3);
        assert!((pos[0].death - 1.819).abs() < 1e-3);
    }

    #[test]
    fn single_point_and_memory_guard() {
        let c = PointCloud::new(vec![vec![0.0, 0.0]]).unwrap();
        let dgms = rips_persistence(&c, 1, &Default::default()).unwrap();
        assert_eq!(dgms[0].pairs.len(), 1);
        assert!(dgms[1].pairs.is_empty());

        let opts = RipsOptions { max_points: 3, ..Default::default() };
        let big = cloud2(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert!(rips_persistence(&big, 1, &opts).is_err());
    }

    #[test]
    fn shortcut_equivalence_and_permutation_invariance() {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..15 {
            let n = rng.gen_range(4..40);
            let pts: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
            let c = PointCloud::new(pts.clone()).unwrap();
            let plain =
                RipsOptions { apparent_shortcut: false, keep_zero_pairs: true, ..Default::default() };
            let fast = RipsOptions { keep_zero_pairs: true, ..Default::default() };
            let d_plain = rips_persistence(&c, 1, &plain).unwrap();
            let d_fast = rips_persistence(&c, 1, &fast).unwrap();
            assert_eq!(d_plain, d_fast);

            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut rng);
            let cs = PointCloud::new(shuffled).unwrap();
            let d_perm = rips_persistence(&cs, 1, &Default::default()).unwrap();
            let mut v1: Vec<(f64, f64)> = d_fast[1].finite_points(false);
            let mut v2: Vec<(f64, f64)> = d_perm[1].finite_points(false);
            v1.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v2.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(v1, v2, "diagram values must be invariant to point permutations");
        }
    }

    #[test]
    fn kruskal_matches_prim_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let n = rng.gen_range(2..25);
            let pts: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.gen(), rng.gen(), rng.gen(), rng.gen()]).collect();
            let c = PointCloud::new(pts).unwrap();
            let (_, mut kruskal) = mst_highdim(&c);
            kruskal.sort_unstable();
            assert_eq!(kruskal, prim_mst_oracle(&c));
        }
    }
}
