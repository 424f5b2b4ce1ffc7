//! Planar neighborhood graphs derived from the Delaunay triangulation:
//! Urquhart graph, minimum spanning tree (with the dimension-0 diagram read
//! off its merge sequence), relative neighborhood graph, and the
//! decomposition of the RNG's bounded faces into classes of Delaunay
//! triangles.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::delaunay::{DelaunayStructure, OUTER_FACE};
use crate::diagram::{PersistenceDiagram, PersistencePair};
use crate::error::{CoreError, Result};
use crate::kdtree::{KdTree2, Side};
use crate::order::{Edge, EdgeKey};
use crate::unionfind::UnionFind;

/// Lens of the segment a-b: the points strictly closer than |ab| to both
/// endpoints. Distances are compared in squared form.
pub fn lens(cloud: &PointCloud, a: usize, b: usize) -> Result<Vec<usize>> {
    half_lens(cloud, a, b, Side::Both)
}

/// Half-lens of the oriented segment a->b. `Side::Left` keeps points with
/// positive (counterclockwise) orientation, `Side::Right` negative; points
/// exactly on the line belong to neither half. Requires a 2D cloud unless
/// `Side::Both` is asked.
pub fn half_lens(cloud: &PointCloud, a: usize, b: usize, side: Side) -> Result<Vec<usize>> {
    cloud.check_index(a)?;
    cloud.check_index(b)?;
    if a == b {
        return Err(CoreError::validation("lens endpoints must differ"));
    }
    if side != Side::Both && cloud.dim() != 2 {
        return Err(CoreError::validation("half-lens queries require a 2D cloud"));
    }
    let d2ab = cloud.dist2(a, b);
    let mut out = Vec::new();
    for x in 0..cloud.len() {
        if x == a || x == b {
            continue;
        }
        if cloud.dist2(x, a) < d2ab && cloud.dist2(x, b) < d2ab {
            let keep = match side {
                Side::Both => true,
                Side::Left | Side::Right => {
                    let o = orient(cloud.point(a), cloud.point(b), cloud.point(x));
                    (side == Side::Left && o > 0.0) || (side == Side::Right && o < 0.0)
                }
            };
            if keep {
                out.push(x);
            }
        }
    }
    Ok(out)
}

fn orient(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    robust::orient2d(
        robust::Coord { x: a[0], y: a[1] },
        robust::Coord { x: b[0], y: b[1] },
        robust::Coord { x: c[0], y: c[1] },
    )
}

/// Kruskal over edges already sorted ascending by `EdgeKey`; reads off the
/// dimension-0 persistence diagram via the elder rule (components are
/// represented by their smallest vertex index, which is the oldest vertex in
/// the filtration's tie order).
///
/// Returns the diagram and the tree edges in insertion order. The diagram
/// contains one essential pair per connected component of the edge set.
pub fn dgm0_from_sorted_edges(
    n: usize,
    edges: impl Iterator<Item = EdgeKey>,
) -> (PersistenceDiagram, Vec<Edge>) {
    let mut uf = UnionFind::new(n);
    let mut birth: Vec<u32> = (0..n as u32).collect();
    let mut pairs = Vec::new();
    let mut mst = Vec::new();
    for ek in edges {
        let (i, j) = ek.edge.endpoints();
        let ri = uf.find(i);
        let rj = uf.find(j);
        if ri == rj {
            continue;
        }
        let (bi, bj) = (birth[ri], birth[rj]);
        let dying = bi.max(bj);
        let surviving = bi.min(bj);
        let root = uf.union(ri, rj).expect("distinct roots merge");
        birth[root] = surviving;
        pairs.push(PersistencePair {
            birth: 0.0,
            death: ek.len,
            birth_simplex: vec![dying],
            death_simplex: Some(vec![ek.edge.i, ek.edge.j]),
        });
        mst.push(ek.edge);
    }
    let mut seen_roots = std::collections::HashSet::new();
    for v in 0..n {
        let r = uf.find(v);
        if seen_roots.insert(r) {
            pairs.push(PersistencePair {
                birth: 0.0,
                death: f64::INFINITY,
                birth_simplex: vec![birth[r]],
                death_simplex: None,
            });
        }
    }
    (PersistenceDiagram::new(0, pairs), mst)
}

/// Exact Euclidean MST in any dimension: Kruskal over all pairs under the
/// tie-broken length order. Returns the tree edges in insertion order and
/// the dimension-0 diagram.
pub fn mst_highdim(cloud: &PointCloud) -> (PersistenceDiagram, Vec<Edge>) {
    let n = cloud.len();
    let mut keys: Vec<EdgeKey> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            keys.push(EdgeKey::new(cloud.dist(i, j), Edge::new(i, j)));
        }
    }
    keys.sort_unstable();
    dgm0_from_sorted_edges(n, keys.into_iter())
}

/// A bounded face of the RNG, as the class of Delaunay triangles connected
/// through non-RNG Delaunay edges.
#[derive(Debug, Clone)]
pub struct RngPolygon {
    pub triangles: Vec<u32>,
    /// Sorted vertex set of the face.
    pub vertices: Vec<u32>,
    /// Longest deleted Delaunay edge interior to the face.
    pub deleted: EdgeKey,
}

#[derive(Debug)]
pub struct NeighborhoodGraphs {
    pub del: DelaunayStructure,
    pub kdtree: KdTree2,
    /// Per-Delaunay-edge length.
    pub edge_len: Vec<f64>,
    pub in_ug: Vec<bool>,
    pub in_rng: Vec<bool>,
    pub in_mst: Vec<bool>,
    /// MST edges in Kruskal insertion order.
    pub mst_edges: Vec<Edge>,
    pub dgm0: PersistenceDiagram,
    pub polygons: Vec<RngPolygon>,
    /// Per-triangle polygon id, -1 for triangles merged with the outer face.
    pub polygon_of_triangle: Vec<i32>,
}

impl NeighborhoodGraphs {
    pub fn edges_where(&self, flags: &[bool]) -> Vec<Edge> {
        self.del
            .edges
            .iter()
            .zip(flags)
            .filter_map(|(&e, &f)| f.then_some(e))
            .collect()
    }

    pub fn ug_edges(&self) -> Vec<Edge> {
        self.edges_where(&self.in_ug)
    }

    pub fn rng_edges(&self) -> Vec<Edge> {
        self.edges_where(&self.in_rng)
    }

    /// Edges of RNG \ MST (the creators of positive 1-dimensional classes),
    /// as Delaunay edge ids.
    pub fn rng_nonmst_ids(&self) -> Vec<u32> {
        (0..self.del.num_edges() as u32)
            .filter(|&e| self.in_rng[e as usize] && !self.in_mst[e as usize])
            .collect()
    }
}

/// Derives UG, MST (with diagram), RNG and the RNG-polygon decomposition
/// from a Delaunay triangulation. Lens-emptiness checks run data-parallel
/// when `parallel` is set.
pub fn derive_graphs(
    cloud: &PointCloud,
    del: DelaunayStructure,
    parallel: bool,
) -> Result<NeighborhoodGraphs> {
    let ne = del.num_edges();
    let nt = del.num_triangles();
    let edge_ids = del.edge_ids();
    let edge_len: Vec<f64> = del.edges.iter().map(|e| cloud.dist(e.i as usize, e.j as usize)).collect();
    let key = |eid: usize| EdgeKey::new(edge_len[eid], del.edges[eid]);

    // Urquhart graph: drop the longest edge of every triangle.
    let mut in_ug = vec![true; ne];
    for t in 0..nt {
        let longest = del
            .triangle_edges(t)
            .into_iter()
            .map(|e| edge_ids[&e] as usize)
            .max_by_key(|&eid| key(eid))
            .expect("triangle has edges");
        in_ug[longest] = false;
    }

    // Kruskal on the UG yields the MST and the dimension-0 diagram.
    let mut ug_sorted: Vec<usize> = (0..ne).filter(|&e| in_ug[e]).collect();
    ug_sorted.sort_unstable_by_key(|&e| key(e));
    let (dgm0, mst_edges) = dgm0_from_sorted_edges(cloud.len(), ug_sorted.iter().map(|&e| key(e)));
    let mut in_mst = vec![false; ne];
    for e in &mst_edges {
        in_mst[edge_ids[e] as usize] = true;
    }

    // RNG: keep UG \ MST edges with an empty lens (MST edges always qualify).
    let kdtree = KdTree2::build_all(cloud.coords());
    let candidates: Vec<usize> = (0..ne).filter(|&e| in_ug[e] && !in_mst[e]).collect();
    let occupied: Vec<bool> = {
        let check = |&eid: &usize| {
            let e = del.edges[eid];
            let a = cloud.point(e.i as usize);
            let b = cloud.point(e.j as usize);
            kdtree.lens_occupied((a[0], a[1]), (b[0], b[1]), edge_len[eid], Side::Both, (e.i, e.j))
        };
        if parallel {
            candidates.par_iter().map(check).collect()
        } else {
            candidates.iter().map(check).collect()
        }
    };
    let mut in_rng = in_mst.clone();
    for (&eid, &occ) in candidates.iter().zip(&occupied) {
        in_rng[eid] = !occ;
    }

    // Polygon decomposition: union Delaunay triangles across every non-RNG
    // edge, tracking the longest deleted edge per class. The virtual node
    // `nt` stands for the outer face.
    let outer = nt;
    let mut uf = UnionFind::new(nt + 1);
    let mut deleted: Vec<Option<EdgeKey>> = vec![None; nt + 1];
    let mut has_outer = vec![false; nt + 1];
    has_outer[outer] = true;
    for eid in 0..ne {
        if in_rng[eid] {
            continue;
        }
        let [f0, f1] = del.edge_faces[eid];
        let a = if f0 == OUTER_FACE { outer } else { f0 as usize };
        let b = if f1 == OUTER_FACE { outer } else { f1 as usize };
        let ra = uf.find(a);
        let rb = uf.find(b);
        let mut best = Some(key(eid));
        best = best.max(deleted[ra]);
        best = best.max(deleted[rb]);
        let outer_flag = has_outer[ra] || has_outer[rb];
        let root = if ra == rb { ra } else { uf.union(ra, rb).expect("distinct") };
        deleted[root] = best;
        has_outer[root] = outer_flag;
    }

    let mut polygon_of_triangle = vec![-1i32; nt];
    let mut root_to_poly: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut polygons: Vec<RngPolygon> = Vec::new();
    for t in 0..nt {
        let r = uf.find(t);
        if has_outer[r] {
            continue;
        }
        let pid = *root_to_poly.entry(r).or_insert_with(|| {
            let deleted = deleted[r].expect("bounded class contains a deleted edge");
            polygons.push(RngPolygon { triangles: Vec::new(), vertices: Vec::new(), deleted });
            polygons.len() - 1
        });
        polygons[pid].triangles.push(t as u32);
        polygon_of_triangle[t] = pid as i32;
    }
    for poly in &mut polygons {
        let mut vs: Vec<u32> = poly.triangles.iter().flat_map(|&t| del.triangles[t as usize]).collect();
        vs.sort_unstable();
        vs.dedup();
        poly.vertices = vs;
    }

    Ok(NeighborhoodGraphs {
        del,
        kdtree,
        edge_len,
        in_ug,
        in_rng,
        in_mst,
        mst_edges,
        dgm0,
        polygons,
        polygon_of_triangle,
    })
}
