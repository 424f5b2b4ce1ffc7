//! The total order on edges that enforces general position.
//!
//! Lengths alone are not a total order (synthetic inputs such as grids carry
//! many exact ties), so every length comparison between *edges* goes through
//! the key `(length, min index, max index)`. Coordinates are never perturbed.
//!
//! Lens membership is the exception: it is a strict metric predicate
//! (`d < length`, plain floats), so that e.g. the third vertex of an
//! equilateral triangle lies in no edge's lens.

use std::cmp::Ordering;

/// Undirected edge, endpoints stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub i: u32,
    pub j: u32,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Edge {
        debug_assert!(a != b);
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        Edge { i: i as u32, j: j as u32 }
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.i as usize, self.j as usize)
    }

    pub fn contains(&self, v: usize) -> bool {
        self.i as usize == v || self.j as usize == v
    }

    pub fn other(&self, v: usize) -> usize {
        if self.i as usize == v {
            self.j as usize
        } else {
            self.i as usize
        }
    }
}

/// Tie-broken comparison key of an edge: `(length, i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeKey {
    pub len: f64,
    pub edge: Edge,
}

impl EdgeKey {
    pub fn new(len: f64, edge: Edge) -> EdgeKey {
        EdgeKey { len, edge }
    }
}

impl Eq for EdgeKey {}

impl PartialOrd for EdgeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EdgeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .partial_cmp(&other.len)
            .expect("edge lengths are finite")
            .then_with(|| self.edge.cmp(&other.edge))
    }
}

/// Colexicographic comparison of sorted vertex triples: compare the largest
/// vertices first. Used to refine the filtration order among triangles that
/// share their diameter edge.
pub fn colex_cmp_tri(a: [u32; 3], b: [u32; 3]) -> Ordering {
    debug_assert!(a[0] < a[1] && a[1] < a[2]);
    debug_assert!(b[0] < b[1] && b[1] < b[2]);
    a[2].cmp(&b[2]).then(a[1].cmp(&b[1])).then(a[0].cmp(&b[0]))
}

pub fn sorted_triple(a: usize, b: usize, c: usize) -> [u32; 3] {
    let mut t = [a as u32, b as u32, c as u32];
    t.sort_unstable();
    t
}
