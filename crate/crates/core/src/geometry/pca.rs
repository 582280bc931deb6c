//! Principal component analysis over 2D and 3D point sets.
//!
//! Results are deterministic: eigenvalues sorted descending, eigenvectors
//! orthonormal, and each eigenvector's sign fixed so its first component of
//! magnitude above 1e-12 is positive. Rank-deficient input is fine; the
//! missing directions come back with zero variance.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Point3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca2 {
    pub mean: [f64; 2],
    /// Variances along the principal axes, descending, mm^2.
    pub eigenvalues: [f64; 2],
    /// Row i is the i-th principal axis (unit length).
    pub axes: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca3 {
    pub mean: [f64; 3],
    pub eigenvalues: [f64; 3],
    pub axes: [[f64; 3];3],
}

fn fix_sign(v: &mut [f64]) {
    for &c in v.iter() {
        if c.abs() > 1e-12 {
            if c < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
            return;
        }
    }
}

pub fn pca2(points: &[(f64, f64)]) -> Result<Pca2> {
    if points.is_empty() {
        return Err(Error::EmptyPca);
    }
    let n = points.len() as f64;
    let mut mean = Vector2::zeros();
    for p in points {
        mean += Vector2::new(p.0, p.1);
    }
    mean /= n;
    let denom = (n - 1.0).max(1.0);
    let mut cov = Matrix2::zeros();
    for p in points {
        let d = Vector2::new(p.0, p.1) - mean;
        cov += d * d.transpose();
    }
    cov /= denom;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1];
    if eig.eigenvalues[1] > eig.eigenvalues[0] {
        order = [1, 0];
    }
    let mut eigenvalues = [0.0; 2];
    let mut axes = [[0.0; 2]; 2];
    for (i, &j) in order.iter().enumerate() {
        eigenvalues[i] = eig.eigenvalues[j].max(0.0);
        axes[i] = [eig.eigenvectors[(0, j)], eig.eigenvectors[(1, j)]];
        fix_sign(&mut axes[i]);
    }
    Ok(Pca2 {
        mean: [mean.x, mean.y],
        eigenvalues,
        axes,
    })
}

pub fn pca3(points: &[Point3]) -> Result<Pca3> {
    if points.is_empty() {
        return Err(Error::EmptyPca);
    }
    let n = points.len() as f64;
    let mut mean = Vector3::zeros();
    for p in points {
        mean += Vector3::new(p.x, p.y, p.z);
    }
    mean /= n;
    let denom = (n - 1.0).max(1.0);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::new(p.x, p.y, p.z) - mean;
        cov += d * d.transpose();
    }
    cov /= denom;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut eigenvalues = [0.0; 3];
    let mut axes = [[0.0; 3]; 3];
    for (i, &j) in order.iter().enumerate() {
        eigenvalues[i] = eig.eigenvalues[j].max(0.0);
        axes[i] = [
            eig.eigenvectors[(0, j)],
            eig.eigenvectors[(1, j)],
            eig.eigenvectors[(2, j)],
        ];
        fix_sign(&mut axes[i]);
    }
    Ok(Pca3 {
        mean: [mean.x, mean.y, mean.z],
        eigenvalues,
        axes,
    })
}
