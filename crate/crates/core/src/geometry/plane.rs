use nalgebra::SymmetricEigen;

use super::transform::{RigidTransform, Vec3};
use crate::error::{Error, Result};

/// Plane through `point` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    pub fn new(point: Vec3, normal: Vec3) -> Self {
        Self {
            point,
            normal: normal.normalize(),
        }
    }

    /// Total least-squares plane through at least three non-collinear points.
    pub fn fit(points: &[Vec3]) -> Result<Plane> {
        if points.len() < 3 {
            return Err(Error::DegeneratePart(format!(
                "plane fit needs 3 points, got {}",
                points.len()
            )));
        }
        let mean = points.iter().sum::<Vec3>() / points.len() as f64;
        let mut cov = nalgebra::Matrix3::zeros();
        for p in points {
            let d = p - mean;
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        if eig.eigenvalues[idx[1]] <= 1e-12 * eig.eigenvalues[idx[2]].max(1e-300) {
            return Err(Error::DegeneratePart("plane fit points are collinear".into()));
        }
        Ok(Plane::new(mean, eig.eigenvectors.column(idx[0]).into()))
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.signed_distance(p) * self.normal
    }

    pub fn transformed(&self, t: &RigidTransform) -> Plane {
        Plane {
            point: t.apply(&self.point),
            normal: t.apply_vector(&self.normal),
        }
    }

    /// Crossing of the closed segment `a -> b`, as the segment parameter in [0, 1].
    pub fn intersect_segment(&self, a: &Vec3, b: &Vec3) -> Option<f64> {
        let da = self.signed_distance(a);
        let db = self.signed_distance(b);
        if da == 0.0 {
            return Some(0.0);
        }
        if db == 0.0 {
            return Some(1.0);
        }
        if (da > 0.0) == (db > 0.0) {
            return None;
        }
        Some(da / (da - db))
    }
}
