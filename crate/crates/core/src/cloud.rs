use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};

/// An ordered list of points in `R^h`. Row order defines point indices and
/// is preserved by every operation in this crate.
///
/// Duplicate points are rejected at construction: zero-length edges break the
/// total order on distances that the persistence engines depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(CoreError::validation("point cloud must contain at least one point"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(CoreError::validation("points must have dimension >= 1"));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(CoreError::validation(format!(
                    "point {i} has dimension {} but point 0 has dimension {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(CoreError::validation(format!("point {i} has a non-finite coordinate")));
            }
            coords.extend_from_slice(p);
        }
        let cloud = PointCloud { coords, dim };
        cloud.check_duplicates()?;
        Ok(cloud)
    }

    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(CoreError::validation("flat coordinate buffer does not match dimension"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::validation("non-finite coordinate"));
        }
        let cloud = PointCloud { coords, dim };
        cloud.check_duplicates()?;
        Ok(cloud)
    }

    fn check_duplicates(&self) -> Result<()> {
        let n = self.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_unstable_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .find_map(|(x, y)| x.partial_cmp(y).filter(|o| o.is_ne()))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in idx.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                return Err(CoreError::validation(format!(
                    "duplicate points at indices {} and {} (deduplicate the input first)",
                    w[0].min(w[1]),
                    w[0].max(w[1])
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees n >= 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(CoreError::IndexOutOfRange { index: i, len: self.len() });
        }
        Ok(())
    }

    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        let a = self.point(i);
        let b = self.point(j);
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist2(i, j).sqrt()
    }

    /// Dense pairwise distance matrix (row-major, n*n).
    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist(i, j);
                m[i * n + j] = d;
                m[j * n + i] = d;
            }
        }
        m
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    /// Reads a point-cloud CSV: one row per point, comma-separated decimal
    /// floats. A single header row is tolerated and auto-detected (a first
    /// row whose fields are not all numeric).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let reader = BufReader::new(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut first = true;
        for line in reader.lines() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                trimmed.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(e) => {
                    if first {
                        // header row
                    } else {
                        return Err(CoreError::validation(format!("bad CSV row {trimmed:?}: {e}")));
                    }
                }
            }
            first = false;
        }
        PointCloud::new(rows)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        for p in self.iter_points() {
            let row: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
            writeln!(writer, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_mixed_dims() {
        assert!(PointCloud::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(PointCloud::new(vec![vec![0.0], vec![0.0, 1.0]]).is_err());
        assert!(PointCloud::new(vec![vec![f64::NAN]]).is_err());
        assert!(PointCloud::new(vec![]).is_err());
    }

    #[test]
    fn csv_roundtrip_with_header() {
        let csv = "x,y\n0.0,0.5\n1.25,-3.0\n";
        let cloud = PointCloud::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.point(1), &[1.25, -3.0]);

        let mut out = Vec::new();
        cloud.write_csv(&mut out).unwrap();
        let back = PointCloud::read_csv(out.as_slice()).unwrap();
        assert_eq!(back, cloud);
    }

    #[test]
    fn distances() {
        let cloud = PointCloud::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(cloud.dist(0, 1), 5.0);
        let m = cloud.distance_matrix();
        assert_eq!(m[1], 5.0);
        assert_eq!(m[2], 5.0);
    }
}
