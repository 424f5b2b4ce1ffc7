//! Delaunay triangulation of a planar cloud with edge/triangle adjacency.
//!
//! Construction is delegated to `spade` (exact orientation and incircle
//! predicates); this module reshapes the result into flat index-based
//! structures the graph derivations work on.

use std::collections::HashMap;

use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use crate::cloud::PointCloud;
use crate::error::{CoreError, Result};
use crate::order::Edge;

pub const OUTER_FACE: i32 = -1;

#[derive(Debug, Clone)]
pub struct DelaunayStructure {
    /// Vertex triples, sorted ascending within each triangle.
    pub triangles: Vec<[u32; 3]>,
    /// Every Delaunay edge, endpoints sorted.
    pub edges: Vec<Edge>,
    /// Per edge: the (at most two) incident triangles; `OUTER_FACE` marks the
    /// unbounded side. Internal edges have two triangle ids, hull edges one.
    pub edge_faces: Vec<[i32; 2]>,
    /// Per edge: true when the edge lies on the convex hull.
    pub hull: Vec<bool>,
}

struct IndexedPoint {
    pos: Point2<f64>,
    index: u32,
}

impl HasPosition for IndexedPoint {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

impl DelaunayStructure {
    /// Triangulates a validated 2D cloud. Collinear inputs yield zero
    /// triangles and the chain of edges along the line; n < 3 degenerates to
    /// the trivial graphs.
    pub fn build(cloud: &PointCloud) -> Result<DelaunayStructure> {
        if cloud.dim() != 2 {
            return Err(CoreError::validation(format!(
                "Delaunay triangulation requires a 2D cloud, got dimension {}",
                cloud.dim()
            )));
        }
        let pts: Vec<IndexedPoint> = (0..cloud.len())
            .map(|i| {
                let p = cloud.point(i);
                IndexedPoint { pos: Point2::new(p[0], p[1]), index: i as u32 }
            })
            .collect();
        let tri: DelaunayTriangulation<IndexedPoint> =
            DelaunayTriangulation::bulk_load_stable(pts).map_err(|e| {
                CoreError::validation(format!("triangulation rejected the input: {e:?}"))
            })?;
        if tri.num_vertices() != cloud.len() {
            return Err(CoreError::internal(
                "triangulation dropped vertices (duplicate points should have been rejected)",
            ));
        }

        let mut triangles = Vec::with_capacity(tri.num_inner_faces());
        let mut face_to_tri: HashMap<usize, i32> = HashMap::new();
        for face in tri.inner_faces() {
            let vs = face.vertices();
            let mut t = [
                vs[0].data().index,
                vs[1].data().index,
                vs[2].data().index,
            ];
            t.sort_unstable();
            face_to_tri.insert(face.index(), triangles.len() as i32);
            triangles.push(t);
        }

        let mut edges = Vec::with_capacity(tri.num_undirected_edges());
        let mut edge_faces = Vec::with_capacity(tri.num_undirected_edges());
        let mut hull = Vec::with_capacity(tri.num_undirected_edges());
        for edge in tri.undirected_edges() {
            let [a, b] = edge.vertices();
            edges.push(Edge::new(a.data().index as usize, b.data().index as usize));
            let dir = edge.as_directed();
            let f0 = dir.face();
            let f1 = dir.rev().face();
            let id0 = if f0.is_outer() { OUTER_FACE } else { face_to_tri[&f0.index()] };
            let id1 = if f1.is_outer() { OUTER_FACE } else { face_to_tri[&f1.index()] };
            edge_faces.push([id0, id1]);
            hull.push(edge.is_part_of_convex_hull());
        }

        Ok(DelaunayStructure { triangles, edges, edge_faces, hull })
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Map from edge to its id in `edges`.
    pub fn edge_ids(&self) -> HashMap<Edge, u32> {
        self.edges.iter().enumerate().map(|(i, &e)| (e, i as u32)).collect()
    }

    /// The three edges of triangle `t`.
    pub fn triangle_edges(&self, t: usize) -> [Edge; 3] {
        let [a, b, c] = self.triangles[t];
        [
            Edge::new(a as usize, b as usize),
            Edge::new(a as usize, c as usize),
            Edge::new(b as usize, c as usize),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[(f64, f64)]) -> PointCloud {
        PointCloud::new(points.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap()
    }

    #[test]
    fn unit_square_has_two_triangles_sharing_a_diagonal() {
        let c = cloud(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let del = DelaunayStructure::build(&c).unwrap();
        assert_eq!(del.num_triangles(), 2);
        assert_eq!(del.num_edges(), 5);
        let internal: Vec<_> = (0..del.num_edges())
            .filter(|&e| del.edge_faces[e].iter().all(|&f| f != OUTER_FACE))
            .collect();
        assert_eq!(internal.len(), 1);
        assert_eq!(del.hull.iter().filter(|&&h| h).count(), 4);
    }

    #[test]
    fn triangle_and_degenerate_inputs() {
        let c = cloud(&[(0.0, 0.0), (1.0, 0.0), (0.5, 1.0)]);
        let del = DelaunayStructure::build(&c).unwrap();
        assert_eq!(del.num_triangles(), 1);
        assert_eq!(del.num_edges(), 3);

        // Collinear: no triangles, a chain of edges along the line.
        let c = cloud(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let del = DelaunayStructure::build(&c).unwrap();
        assert_eq!(del.num_triangles(), 0);
        assert_eq!(del.num_edges(), 3);
        for e in 0..3 {
            assert_eq!(del.edge_faces[e], [OUTER_FACE, OUTER_FACE]);
        }

        let c = cloud(&[(0.0, 0.0), (1.0, 0.0)]);
        let del = DelaunayStructure::build(&c).unwrap();
        assert_eq!(del.num_edges(), 1);
        assert_eq!(del.num_triangles(), 0);

        let c = cloud(&[(0.5, 0.5)]);
        let del = DelaunayStructure::build(&c).unwrap();
        assert_eq!(del.num_edges(), 0);
    }

    #[test]
    fn euler_count_on_random_cloud() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<(f64, f64)> = (0..200).map(|_| (rng.gen(), rng.gen())).collect();
        let c = cloud(&pts);
        let del = DelaunayStructure::build(&c).unwrap();
        let hull_edges = del.hull.iter().filter(|&&h| h).count();
        // Triangle count 2n - 2 - b for n points with b on the hull.
        assert_eq!(del.num_triangles(), 2 * c.len() - 2 - hull_edges);
        // Internal edges carry exactly two incident triangles, hull edges one.
        for e in 0..del.num_edges() {
            let faces = del.edge_faces[e];
            let inner = faces.iter().filter(|&&f| f != OUTER_FACE).count();
            assert_eq!(inner, if del.hull[e] { 1 } else { 2 });
        }
    }
}
