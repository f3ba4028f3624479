//! Input point clouds.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// A 3D point cloud in meters, with optional per-point unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
    normals: Option<Vec<Vector3<f64>>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>) -> Result<Self> {
        Self::with_normals(points, None)
    }

    pub fn with_normals(
        points: Vec<Point3<f64>>,
        normals: Option<Vec<Vector3<f64>>>,
    ) -> Result<Self> {
        if points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite("point cloud coordinate".into()));
        }
        if let Some(n) = &normals {
            if n.len() != points.len() {
                return Err(Error::LengthMismatch(format!(
                    "{} normals for {} points",
                    n.len(),
                    points.len()
                )));
            }
            if n.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
                return Err(Error::NonFinite("point cloud normal".into()));
            }
        }
        Ok(Self { points, normals })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vector3<f64>]> {
        self.normals.as_deref()
    }

    pub fn centroid(&self) -> Result<Point3<f64>> {
        if self.points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let sum: Vector3<f64> = self.points.iter().map(|p| p.coords).sum();
        Ok(Point3::from(sum / self.points.len() as f64))
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounding_box(&self) -> Result<(Point3<f64>, Point3<f64>)> {
        if self.points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        Ok((lo, hi))
    }

    /// Cloud translated by `delta`; normals unchanged.
    pub fn translated(&self, delta: Vector3<f64>) -> Self {
        Self {
            points: self.points.iter().map(|p| p + delta).collect(),
            normals: self.normals.clone(),
        }
    }
}
