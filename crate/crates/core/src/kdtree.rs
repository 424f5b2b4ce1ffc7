//! Static planar k-d tree supporting early-exit disk queries; backs the
//! lens-emptiness tests of the RNG refinement and the expandability checks
//! of the minmax-edge search.

/// Which side of the oriented line a->b a query should keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone)]
pub struct KdTree2 {
    /// (x, y, original index), kd-ordered: each subtree range is median-split
    /// on the axis given by its recursion depth.
    pts: Vec<(f64, f64, u32)>,
}

impl KdTree2 {
    /// Builds a tree over `indices`, reading coordinates from `coords`
    /// (flat xy pairs of the owning cloud).
    pub fn build(coords: &[f64], indices: impl IntoIterator<Item = u32>) -> KdTree2 {
        let mut pts: Vec<(f64, f64, u32)> = indices
            .into_iter()
            .map(|i| (coords[2 * i as usize], coords[2 * i as usize + 1], i))
            .collect();
        build_rec(&mut pts, 0);
        KdTree2 { pts }
    }

    pub fn build_all(coords: &[f64]) -> KdTree2 {
        KdTree2::build(coords, 0..(coords.len() / 2) as u32)
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Visits every stored point within (strict) distance `r` of `center`.
    /// The visitor returns `true` to stop the traversal early; the call
    /// returns whether it was stopped.
    pub fn visit_disk(&self, center: (f64, f64), r: f64, mut f: impl FnMut(u32, f64, f64) -> bool) -> bool {
        if self.pts.is_empty() {
            return false;
        }
        self.visit_rec(0..self.pts.len(), 0, center, r, &mut f)
    }

    fn visit_rec(
        &self,
        range: std::ops::Range<usize>,
        axis: usize,
        center: (f64, f64),
        r: f64,
        f: &mut impl FnMut(u32, f64, f64) -> bool,
    ) -> bool {
        if range.is_empty() {
            return false;
        }
        let mid = range.start + range.len() / 2;
        let (px, py, idx) = self.pts[mid];
        let dx = px - center.0;
        let dy = py - center.1;
        if dx * dx + dy * dy < r * r && f(idx, px, py) {
            return true;
        }
        let split = if axis == 0 { px } else { py };
        let c = if axis == 0 { center.0 } else { center.1 };
        let (near, far) = if c < split {
            (range.start..mid, mid + 1..range.end)
        } else {
            (mid + 1..range.end, range.start..mid)
        };
        if self.visit_rec(near, axis ^ 1, center, r, f) {
            return true;
        }
        // The far side can only contain hits if the disk crosses the split.
        if (c - split).abs() < r && self.visit_rec(far, axis ^ 1, center, r, f) {
            return true;
        }
        false
    }

    /// True when some stored point other than the endpoints lies strictly
    /// inside the lens of segment a-b (distance < `len` from both ends), on
    /// the requested side of the oriented line a->b.
    pub fn lens_occupied(&self, a: (f64, f64), b: (f64, f64), len: f64, side: Side, skip: (u32, u32)) -> bool {
        self.visit_disk(a, len, |idx, px, py| {
            if idx == skip.0 || idx == skip.1 {
                return false;
            }
            let dbx = px - b.0;
            let dby = py - b.1;
            if dbx * dbx + dby * dby >= len * len {
                return false;
            }
            side_matches(a, b, (px, py), side)
        })
    }

    /// Collects the lens points of segment a-b on the requested side.
    pub fn lens_points(&self, a: (f64, f64), b: (f64, f64), len: f64, side: Side, skip: (u32, u32)) -> Vec<u32> {
        let mut out = Vec::new();
        self.visit_disk(a, len, |idx, px, py| {
            if idx != skip.0 && idx != skip.1 {
                let dbx = px - b.0;
                let dby = py - b.1;
                if dbx * dbx + dby * dby < len * len && side_matches(a, b, (px, py), side) {
                    out.push(idx);
                }
            }
            false
        });
        out.sort_unstable();
        out
    }
}

fn build_rec(pts: &mut [(f64, f64, u32)], axis: usize) {
    if pts.len() <= 1 {
        return;
    }
    let mid = pts.len() / 2;
    if axis == 0 {
        pts.select_nth_unstable_by(mid, |a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    } else {
        pts.select_nth_unstable_by(mid, |a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
    }
    let (lo, rest) = pts.split_at_mut(mid);
    build_rec(lo, axis ^ 1);
    build_rec(&mut rest[1..], axis ^ 1);
}

/// Exact side test; points exactly on the line a-b belong to neither half.
fn side_matches(a: (f64, f64), b: (f64, f64), p: (f64, f64), side: Side) -> bool {
    if side == Side::Both {
        return true;
    }
    let o = robust::orient2d(
        robust::Coord { x: a.0, y: a.1 },
        robust::Coord { x: b.0, y: b.1 },
        robust::Coord { x: p.0, y: p.1 },
    );
    match side {
        Side::Left => o > 0.0,
        Side::Right => o < 0.0,
        Side::Both => unreachable!(),
    }
}
