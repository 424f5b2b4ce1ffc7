//! Linear baselines for comparison: principal component projection and
//! classical metric MDS, both via symmetric eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};

use topodr_core::error::{CoreError, Result};
use topodr_core::PointCloud;

/// Projection onto the top two principal components (covariance route when
/// the ambient dimension is small, Gram route otherwise).
pub fn pca_2d(x: &PointCloud) -> Result<PointCloud> {
    let n = x.len();
    let h = x.dim();
    if n < 2 {
        return Err(CoreError::validation("need at least two points"));
    }
    let mut mean = vec![0.0; h];
    for p in x.iter_points() {
        for (m, c) in mean.iter_mut().zip(p) {
            *m += c;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, h, |r, c| x.point(r)[c] - mean[c]);

    let coords: Vec<f64> = if h <= n {
        let cov = centered.transpose() * &centered / n as f64;
        let eig = SymmetricEigen::new(cov);
        let order = top2(&eig.eigenvalues.as_slice().to_vec());
        let mut out = Vec::with_capacity(n * 2);
        for r in 0..n {
            for &c in &order {
                out.push(centered.row(r).dot(&eig.eigenvectors.column(c).transpose()));
            }
        }
        out
    } else {
        // Gram trick: eigenvectors of X X^T give the scores directly.
        let gram = &centered * centered.transpose();
        let eig = SymmetricEigen::new(gram);
        let order = top2(&eig.eigenvalues.as_slice().to_vec());
        let mut out = Vec::with_capacity(n * 2);
        for r in 0..n {
            for &c in &order {
                let lambda = eig.eigenvalues[c].max(0.0);
                out.push(eig.eigenvectors[(r, c)] * lambda.sqrt());
            }
        }
        out
    };
    PointCloud::from_flat(coords, 2)
        .map_err(|e| CoreError::validation(format!("degenerate projection: {e}")))
}

/// Classical MDS: double-centered squared-distance Gram matrix, top-2
/// spectral embedding.
pub fn mds_2d(x: &PointCloud) -> Result<PointCloud> {
    let n = x.len();
    if n < 2 {
        return Err(CoreError::validation("need at least two points"));
    }
    let d2 = DMatrix::from_fn(n, n, |i, j| x.dist2(i, j));
    let row_mean: Vec<f64> = (0..n).map(|i| d2.row(i).sum() / n as f64).collect();
    let total_mean: f64 = row_mean.iter().sum::<f64>() / n as f64;
    let gram = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (d2[(i, j)] - row_mean[i] - row_mean[j] + total_mean)
    });
    let eig = SymmetricEigen::new(gram);
    let order = top2(&eig.eigenvalues.as_slice().to_vec());
    let mut out = Vec::with_capacity(n * 2);
    for r in 0..n {
        for &c in &order {
            let lambda = eig.eigenvalues[c].max(0.0);
            out.push(eig.eigenvectors[(r, c)] * lambda.sqrt());
        }
    }
    PointCloud::from_flat(out, 2)
        .map_err(|e| CoreError::validation(format!("degenerate embedding: {e}")))
}

fn top2(eigenvalues: &[f64]) -> [usize; 2] {
    let mut idx: Vec<usize> = (0..eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    [idx[0], idx[1]]
}
