use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::spatial::VoxelGrid;

/// Unit normals oriented toward the camera origin, with the surface variation
/// `λ_min / (λ_0 + λ_1 + λ_2)` of each neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct Normals {
    pub vectors: Vec<Vector3<f64>>,
    pub curvature: Vec<f64>,
}

impl Normals {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Zero curvature everywhere; for callers supplying analytic normals.
    pub fn from_vectors(vectors: Vec<Vector3<f64>>) -> Self {
        let curvature = vec![0.0; vectors.len()];
        Self { vectors, curvature }
    }
}

/// PCA normal of each point's `k` nearest neighbors (the point included).
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<Normals> {
    if k < 3 {
        return Err(Error::config(format!("normal estimation needs k >= 3, got {k}")));
    }
    if cloud.len() < k {
        return Err(Error::config(format!(
            "normal estimation with k = {k} needs at least {k} points, cloud has {}",
            cloud.len()
        )));
    }
    let points = cloud.points();
    let grid = VoxelGrid::new(points, VoxelGrid::surface_cell_size(points, k));
    let (vectors, curvature): (Vec<_>, Vec<_>) = points
        .par_iter()
        .map(|p| {
            let nbrs = grid.nearest(p, k);
            let mean = nbrs.iter().map(|&i| points[i].coords).sum::<Vector3<f64>>()
                / nbrs.len() as f64;
            let mut cov = Matrix3::zeros();
            for &i in &nbrs {
                let d = points[i].coords - mean;
                cov += d * d.transpose();
            }
            let eig = cov.symmetric_eigen();
            let (imin, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("3 eigenvalues");
            let mut n: Vector3<f64> = eig.eigenvectors.column(imin).normalize();
            if n.dot(&p.coords) > 0.0 {
                n = -n;
            }
            let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
            let curv = if total > 0.0 {
                eig.eigenvalues[imin].max(0.0) / total
            } else {
                0.0
            };
            (n, curv)
        })
        .unzip();
    Ok(Normals { vectors, curvature })
}
