//! Fast exact Rips persistence for planar clouds, with no matrix reduction:
//! dimension 0 falls out of Kruskal on the Urquhart graph; dimension 1 pairs
//! the cycle-creating RNG edges against cycle-killing edges found inside the
//! bounded RNG faces.
//!
//! Per bounded face the killing edge is the longest edge of a minmax-length
//! triangulation of the face. It is located without triangulating: among the
//! face's diagonals with length within [sqrt(3)/2, 1] times the longest
//! deleted Delaunay edge, it is the shortest expandable 2-edge. Births and
//! deaths are then matched by running Kruskal on the dual of the RNG with
//! negated filtration values, which resolves nested cycles.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::delaunay::{DelaunayStructure, OUTER_FACE};
use crate::diagram::{PersistenceDiagram, PersistencePair};
use crate::error::{CoreError, Result};
use crate::graphs::{derive_graphs, NeighborhoodGraphs};
use crate::kdtree::{KdTree2, Side};
use crate::order::{colex_cmp_tri, sorted_triple, Edge, EdgeKey};
use crate::unionfind::UnionFind;

#[derive(Debug, Clone, Default)]
pub struct PlanarOptions {
    /// Run the lens-emptiness and expandability checks data-parallel on the
    /// current rayon pool.
    pub parallel: bool,
}

/// Positive dimension-1 pair as produced by the geometric engine.
#[derive(Debug, Clone)]
pub struct PlanarPair {
    pub birth_edge: Edge,
    pub death_edge: Edge,
    /// Same canonical representative the reduction engine reports.
    pub canonical_triangle: [u32; 3],
    pub birth: f64,
    pub death: f64,
    pub polygon: usize,
}

#[derive(Debug, Clone, Default)]
pub struct PlanarStats {
    pub build_ms: f64,
    pub mml_ms: f64,
    pub pairing_ms: f64,
    pub total_ms: f64,
    /// Polygon diagonals inside the length window / all polygon diagonals.
    pub window_kept: usize,
    pub window_total: usize,
}

impl PlanarStats {
    /// Fraction of polygon diagonals discarded by the length window, when
    /// any polygon exists.
    pub fn discard_fraction(&self) -> Option<f64> {
        (self.window_total > 0)
            .then(|| (self.window_total - self.window_kept) as f64 / self.window_total as f64)
    }
}

#[derive(Debug)]
pub struct PlanarResult {
    pub dgm0: PersistenceDiagram,
    pub dgm1: PersistenceDiagram,
    pub positive1: Vec<PlanarPair>,
    pub graphs: NeighborhoodGraphs,
    /// Per polygon: the killing edge (its length is the polygon's death value).
    pub mml_edges: Vec<EdgeKey>,
    pub stats: PlanarStats,
}

impl PlanarResult {
    /// MST plus birth and death edges of the positive pairs; equals the
    /// reduction engine's critical edge set for d = 1.
    pub fn critical_edges(&self) -> Vec<Edge> {
        let mut edges = self.graphs.mst_edges.clone();
        for p in &self.positive1 {
            edges.push(p.birth_edge);
            edges.push(p.death_edge);
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

pub fn planar_rips_persistence(cloud: &PointCloud, opts: &PlanarOptions) -> Result<PlanarResult> {
    if cloud.dim() != 2 {
        return Err(CoreError::validation(format!(
            "planar engine requires a 2D cloud, got dimension {}",
            cloud.dim()
        )));
    }
    let t0 = std::time::Instant::now();
    let del = DelaunayStructure::build(cloud)?;
    let graphs = derive_graphs(cloud, del, opts.parallel)?;
    let build_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = std::time::Instant::now();
    let (mml_edges, window_kept, window_total) = find_mml_edges(cloud, &graphs, opts)?;
    let mml_ms = t1.elapsed().as_secs_f64() * 1e3;

    let t2 = std::time::Instant::now();
    let positive1 = dual_pairing(cloud, &graphs, &mml_edges)?;
    let pairing_ms = t2.elapsed().as_secs_f64() * 1e3;

    let pairs: Vec<PersistencePair> = positive1
        .iter()
        .filter(|p| p.death > p.birth)
        .map(|p| PersistencePair {
            birth: p.birth,
            death: p.death,
            birth_simplex: vec![p.birth_edge.i, p.birth_edge.j],
            death_simplex: Some(p.canonical_triangle.to_vec()),
        })
        .collect();
    let dgm1 = PersistenceDiagram::new(1, pairs);

    Ok(PlanarResult {
        dgm0: graphs.dgm0.clone(),
        dgm1,
        positive1,
        mml_edges,
        stats: PlanarStats {
            build_ms,
            mml_ms,
            pairing_ms,
            total_ms: t0.elapsed().as_secs_f64() * 1e3,
            window_kept,
            window_total,
        },
        graphs,
    })
}

/// A killing-edge candidate of one bounded RNG face.
#[derive(Debug, Clone)]
pub struct MmlCandidate {
    pub edge: Edge,
    pub len: f64,
    pub polygon: usize,
    pub expandable: bool,
}

/// Killing edge of a single bounded RNG face: the shortest expandable
/// 2-edge among the face's diagonals inside the tie-ordered length window
/// `[sqrt(3)/2 * len(deleted), deleted]`.
pub fn find_mml_edge(
    cloud: &PointCloud,
    graphs: &NeighborhoodGraphs,
    polygon: usize,
) -> Result<(EdgeKey, Vec<MmlCandidate>)> {
    let poly = graphs
        .polygons
        .get(polygon)
        .ok_or_else(|| CoreError::validation(format!("no polygon {polygon}")))?;
    let rng_set: std::collections::HashSet<Edge> = graphs.rng_edges().into_iter().collect();
    let tree = KdTree2::build(cloud.coords(), poly.vertices.iter().copied());
    let lo = 3.0_f64.sqrt() / 2.0 * poly.deleted.len;
    let mut candidates = Vec::new();
    for (ai, &u) in poly.vertices.iter().enumerate() {
        for &v in &poly.vertices[ai + 1..] {
            let edge = Edge::new(u as usize, v as usize);
            if rng_set.contains(&edge) {
                continue;
            }
            let len = cloud.dist(u as usize, v as usize);
            if len >= lo && EdgeKey::new(len, edge) <= poly.deleted {
                let expandable = expandable_2edge(cloud, &tree, edge, len);
                candidates.push(MmlCandidate { edge, len, polygon, expandable });
            }
        }
    }
    let best = candidates
        .iter()
        .filter(|c| c.expandable)
        .map(|c| EdgeKey::new(c.len, c.edge))
        .min()
        .ok_or_else(|| {
            CoreError::internal(format!(
                "no expandable 2-edge found in the length window of polygon {polygon}; \
                 geometric invariant violated"
            ))
        })?;
    Ok((best, candidates))
}

/// Searches the killing edge of every bounded RNG face. Returns one edge per
/// polygon plus the window statistics.
fn find_mml_edges(
    cloud: &PointCloud,
    graphs: &NeighborhoodGraphs,
    opts: &PlanarOptions,
) -> Result<(Vec<EdgeKey>, usize, usize)> {
    let rng_set: std::collections::HashSet<Edge> = graphs.rng_edges().into_iter().collect();

    struct Candidate {
        polygon: u32,
        edge: Edge,
        len: f64,
    }

    // Per-polygon spatial index over its own vertices.
    let trees: Vec<KdTree2> = graphs
        .polygons
        .iter()
        .map(|poly| KdTree2::build(cloud.coords(), poly.vertices.iter().copied()))
        .collect();

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut window_total = 0usize;
    for (pid, poly) in graphs.polygons.iter().enumerate() {
        let lo = 3.0_f64.sqrt() / 2.0 * poly.deleted.len;
        for (ai, &u) in poly.vertices.iter().enumerate() {
            for &v in &poly.vertices[ai + 1..] {
                let edge = Edge::new(u as usize, v as usize);
                if rng_set.contains(&edge) {
                    continue; // face boundary, not a diagonal
                }
                window_total += 1;
                let len = cloud.dist(u as usize, v as usize);
                if len >= lo && EdgeKey::new(len, edge) <= poly.deleted {
                    candidates.push(Candidate { polygon: pid as u32, edge, len });
                }
            }
        }
    }
    let window_kept = candidates.len();

    let verify =
        |c: &Candidate| -> bool { expandable_2edge(cloud, &trees[c.polygon as usize], c.edge, c.len) };
    let verdicts: Vec<bool> = if opts.parallel {
        candidates.par_iter().map(verify).collect()
    } else {
        candidates.iter().map(verify).collect()
    };

    let mut best: Vec<Option<EdgeKey>> = vec![None; graphs.polygons.len()];
    for (c, &ok) in candidates.iter().zip(&verdicts) {
        if !ok {
            continue;
        }
        let key = EdgeKey::new(c.len, c.edge);
        let slot = &mut best[c.polygon as usize];
        if slot.map_or(true, |b| key < b) {
            *slot = Some(key);
        }
    }
    let mml: Vec<EdgeKey> = best
        .into_iter()
        .enumerate()
        .map(|(pid, b)| {
            b.ok_or_else(|| {
                CoreError::internal(format!(
                    "no expandable 2-edge found in the length window of polygon {pid}; \
                     geometric invariant violated"
                ))
            })
        })
        .collect::<Result<_>>()?;
    Ok((mml, window_kept, window_total))
}

/// A 2-edge has points of the polygon strictly inside both half-lenses; it is
/// expandable when flanking vertices exist whose four inner half-lenses are
/// empty, which certifies a triangulation of the polygon with this edge as
/// its unique longest edge.
fn expandable_2edge(cloud: &PointCloud, tree: &KdTree2, e: Edge, len: f64) -> bool {
    let (u, v) = e.endpoints();
    let a = pt(cloud, u);
    let b = pt(cloud, v);
    let left = tree.lens_points(a, b, len, Side::Left, (e.i, e.j));
    if left.is_empty() {
        return false;
    }
    let right = tree.lens_points(a, b, len, Side::Right, (e.i, e.j));
    if right.is_empty() {
        return false;
    }
    let left_ok = left
        .iter()
        .any(|&x| rlens_empty(cloud, tree, u, x as usize) && rlens_empty(cloud, tree, x as usize, v));
    if !left_ok {
        return false;
    }
    right
        .iter()
        .any(|&y| rlens_empty(cloud, tree, v, y as usize) && rlens_empty(cloud, tree, y as usize, u))
}

fn rlens_empty(cloud: &PointCloud, tree: &KdTree2, from: usize, to: usize) -> bool {
    !tree.lens_occupied(
        pt(cloud, from),
        pt(cloud, to),
        cloud.dist(from, to),
        Side::Right,
        (from as u32, to as u32),
    )
}

fn pt(cloud: &PointCloud, i: usize) -> (f64, f64) {
    let p = cloud.point(i);
    (p[0], p[1])
}

/// Kruskal on the dual of the RNG: nodes are bounded faces valued by their
/// killing edge (negated), dual edges are the cycle-creating RNG edges
/// (negated lengths), the outer face is an always-elder sentinel. Each merge
/// pairs the dual edge with the largest killing edge of the dying component.
fn dual_pairing(
    cloud: &PointCloud,
    graphs: &NeighborhoodGraphs,
    mml_edges: &[EdgeKey],
) -> Result<Vec<PlanarPair>> {
    let npoly = graphs.polygons.len();
    let outer = npoly;
    let mut dual_edges: Vec<(EdgeKey, usize, usize)> = Vec::new();
    for eid in graphs.rng_nonmst_ids() {
        let e = graphs.del.edges[eid as usize];
        let [f0, f1] = graphs.del.edge_faces[eid as usize];
        let side = |f: i32| -> usize {
            if f == OUTER_FACE {
                return outer;
            }
            match graphs.polygon_of_triangle[f as usize] {
                -1 => outer,
                p => p as usize,
            }
        };
        let (s0, s1) = (side(f0), side(f1));
        if s0 == outer && s1 == outer {
            return Err(CoreError::internal(format!(
                "cycle-creating edge {e:?} borders no bounded face"
            )));
        }
        dual_edges.push((EdgeKey::new(graphs.edge_len[eid as usize], e), s0, s1));
    }
    // Descending edge order realizes the negated (superlevel) filtration.
    dual_edges.sort_unstable_by(|a, b| b.0.cmp(&a.0));

    let mut uf = UnionFind::new(npoly + 1);
    // Component payload: its largest killing edge; the outer face dominates.
    let inf = EdgeKey::new(f64::INFINITY, Edge::new(usize::MAX - 1, usize::MAX));
    let mut payload: Vec<EdgeKey> = mml_edges.to_vec();
    payload.push(inf);

    let mut pairs = Vec::with_capacity(npoly);
    for (key, s0, s1) in dual_edges {
        let r0 = uf.find(s0);
        let r1 = uf.find(s1);
        if r0 == r1 {
            return Err(CoreError::internal(format!(
                "dual cycle at edge {:?}: the cycle-creating edges must form a tree \
                 over the RNG faces",
                key.edge
            )));
        }
        let (p0, p1) = (payload[r0], payload[r1]);
        let (dying, surviving) = if p0 < p1 { (p0, p1) } else { (p1, p0) };
        let root = uf.union(r0, r1).expect("distinct roots");
        payload[root] = surviving;
        let canonical = canonical_death_triangle(cloud, &graphs.kdtree, dying.edge, dying.len)
            .ok_or_else(|| {
                CoreError::internal(format!("killing edge {:?} has no cofacet", dying.edge))
            })?;
        pairs.push(PlanarPair {
            birth_edge: key.edge,
            death_edge: dying.edge,
            canonical_triangle: canonical,
            birth: key.len,
            death: dying.len,
            polygon: mml_edges.iter().position(|m| *m == dying).expect("killing edge is unique"),
        });
    }
    if pairs.len() != npoly {
        return Err(CoreError::internal(format!(
            "dual pairing produced {} pairs for {} bounded faces",
            pairs.len(),
            npoly
        )));
    }
    pairs.sort_unstable_by(|a, b| {
        EdgeKey::new(a.death, a.death_edge).cmp(&EdgeKey::new(b.death, b.death_edge))
    });
    Ok(pairs)
}

/// First-in-filtration triangle whose diameter edge is `e`: scan the tie
/// lens through the global spatial index (slightly inflated radius, exact
/// tie-broken filter) and take the colexicographically smallest triple.
fn canonical_death_triangle(
    cloud: &PointCloud,
    kdtree: &KdTree2,
    e: Edge,
    len: f64,
) -> Option<[u32; 3]> {
    let (u, v) = e.endpoints();
    let a = pt(cloud, u);
    let r = len * (1.0 + 1e-9);
    let mut best: Option<[u32; 3]> = None;
    kdtree.visit_disk(a, r, |w, _, _| {
        let wi = w as usize;
        if wi != u && wi != v && tie_less(cloud, wi, u, len, e) && tie_less(cloud, wi, v, len, e) {
            let t = sorted_triple(u, v, wi);
            let better = best.map_or(true, |bst| colex_cmp_tri(t, bst).is_lt());
            if better {
                best = Some(t);
            }
        }
        false
    });
    best
}

#[inline]
fn tie_less(cloud: &PointCloud, w: usize, end: usize, len: f64, e: Edge) -> bool {
    let d = cloud.dist(w, end);
    d < len || (d == len && Edge::new(w, end) < e)
}

/// Fraction of polygon diagonals excluded by the length window, or None when
/// the cloud has no bounded RNG faces.
pub fn window_discard_stats(cloud: &PointCloud, opts: &PlanarOptions) -> Result<Option<f64>> {
    Ok(planar_rips_persistence(cloud, opts)?.stats.discard_fraction())
}
