use nalgebra::Point3;

use super::frame::Rgb;
use super::intrinsics::CameraTag;
use super::transform::RigidTransform;
use crate::error::{Error, Result};

/// Camera-space points with the color and source pixel `(u, v)` of each.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
    colors: Vec<Rgb>,
    pixels: Vec<[u32; 2]>,
    source: CameraTag,
    /// Size of the frame the pixel coordinates refer to.
    source_dims: (usize, usize),
}

impl PointCloud {
    pub fn new(
        points: Vec<Point3<f64>>,
        colors: Vec<Rgb>,
        pixels: Vec<[u32; 2]>,
        source: CameraTag,
        source_dims: (usize, usize),
    ) -> Result<Self> {
        if points.len() != colors.len() || points.len() != pixels.len() {
            return Err(Error::config(format!(
                "point cloud lists differ in length ({} points, {} colors, {} pixels)",
                points.len(),
                colors.len(),
                pixels.len()
            )));
        }
        let (w, h) = source_dims;
        if let Some(px) = pixels
            .iter()
            .find(|[u, v]| *u as usize >= w || *v as usize >= h)
        {
            return Err(Error::config(format!(
                "source pixel {:?} outside {}x{} frame",
                px, w, h
            )));
        }
        Ok(Self {
            points,
            colors,
            pixels,
            source,
            source_dims,
        })
    }

    pub fn empty(source: CameraTag, source_dims: (usize, usize)) -> Self {
        Self {
            points: Vec::new(),
            colors: Vec::new(),
            pixels: Vec::new(),
            source,
            source_dims,
        }
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

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }

    pub fn pixels(&self) -> &[[u32; 2]] {
        &self.pixels
    }

    pub fn source(&self) -> CameraTag {
        self.source
    }

    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    /// Every point replaced by `R p + t`; colors and provenance are kept.
    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            colors: self.colors.clone(),
            pixels: self.pixels.clone(),
            source: self.source,
            source_dims: self.source_dims,
        }
    }

    /// Keeps the points for which `keep(index)` is true, preserving order.
    pub fn select(&self, mut keep: impl FnMut(usize) -> bool) -> PointCloud {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        self.subset(&idx)
    }

    /// Points at the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: indices.iter().map(|&i| self.colors[i]).collect(),
            pixels: indices.iter().map(|&i| self.pixels[i]).collect(),
            source: self.source,
            source_dims: self.source_dims,
        }
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        centroid(self.points.iter())
    }
}

pub fn centroid<'a>(points: impl Iterator<Item = &'a Point3<f64>>) -> Option<Point3<f64>> {
    let mut n = 0usize;
    let mut sum = nalgebra::Vector3::zeros();
    for p in points {
        sum += p.coords;
        n += 1;
    }
    (n > 0).then(|| Point3::from(sum / n as f64))
}

/// Applies `t` to every point of `cloud`.
pub fn apply_transform(cloud: &PointCloud, t: &RigidTransform) -> PointCloud {
    cloud.transformed(t)
}
