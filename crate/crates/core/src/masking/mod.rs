//! Object masks for aligned tuples.
//!
//! The HQ cloud is cropped to the work area, split into smooth surfaces by
//! normal-based region growing, stripped of the support surface identified by
//! anchor points, and cleaned with density-based clustering. The LQ points under
//! that mask go through the same density stage. The final mask is the
//! intersection of both pixel sets, optionally closed with a 3×3 structuring
//! element.

mod clustering;
mod labels;
mod morphology;
mod normals;

use std::cmp::Ordering;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

pub use clustering::{dbscan, filter_clusters, reject_surface_clusters, region_grow, RegionGrowParams};
pub use labels::{ClusterLabeling, NOISE};
pub use morphology::close3x3;
pub use normals::{estimate_normals, Normals};

use crate::dataset::FrameTuple;
use crate::error::{Error, Result};
use crate::geometry::{unproject, Intrinsics, Mask, PointCloud};

/// Axis-aligned box in LQ camera space (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl CropBox {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        let b = Self { min, max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if (0..3).all(|a| self.min[a] < self.max[a]) {
            Ok(())
        } else {
            Err(Error::config(format!(
                "crop box min {:?} must be below max {:?} on every axis",
                self.min, self.max
            )))
        }
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn crop(&self, cloud: &PointCloud) -> PointCloud {
        cloud.select(|i| self.contains(&cloud.points()[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskParams {
    pub crop_min: [f64; 3],
    pub crop_max: [f64; 3],
    /// Neighbors per normal estimate.
    pub normal_k: usize,
    pub angle_thresh_deg: f64,
    pub seed_radius_m: f64,
    /// Surface variation above which a point stops extending its region; negative disables.
    pub max_seed_curvature: f64,
    /// Known points on the support surface, LQ camera space.
    pub anchors: Vec<[f64; 3]>,
    pub reject_dist_m: f64,
    pub reject_near_anchors: bool,
    pub eps_m: f64,
    pub min_pts: usize,
    pub min_size: usize,
    pub max_gap_m: f64,
    pub closing: bool,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            crop_min: [-1.0, -1.0, 0.1],
            crop_max: [1.0, 1.0, 2.0],
            normal_k: 30,
            angle_thresh_deg: 15.0,
            seed_radius_m: 0.01,
            max_seed_curvature: 0.05,
            anchors: Vec::new(),
            reject_dist_m: 0.05,
            reject_near_anchors: true,
            eps_m: 0.02,
            min_pts: 10,
            min_size: 200,
            max_gap_m: 0.5,
            closing: true,
        }
    }
}

impl MaskParams {
    pub fn crop_box(&self) -> Result<CropBox> {
        CropBox::new(self.crop_min, self.crop_max)
    }

    pub fn region_grow(&self) -> RegionGrowParams {
        RegionGrowParams {
            angle_thresh_deg: self.angle_thresh_deg,
            seed_radius_m: self.seed_radius_m,
            max_seed_curvature: (self.max_seed_curvature >= 0.0).then_some(self.max_seed_curvature),
        }
    }

    pub fn anchor_points(&self) -> Vec<Point3<f64>> {
        self.anchors.iter().map(|a| Point3::from(*a)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.crop_box()?;
        if self.normal_k < 3 {
            return Err(Error::config("masking.normal_k must be at least 3"));
        }
        if !(self.angle_thresh_deg > 0.0 && self.angle_thresh_deg <= 180.0) {
            return Err(Error::config("masking.angle_thresh_deg must lie in (0, 180]"));
        }
        for (name, v) in [
            ("seed_radius_m", self.seed_radius_m),
            ("eps_m", self.eps_m),
            ("reject_dist_m", self.reject_dist_m),
            ("max_gap_m", self.max_gap_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("masking.{name} must be positive")));
            }
        }
        if self.min_pts == 0 {
            return Err(Error::config("masking.min_pts must be at least 1"));
        }
        if self.anchors.is_empty() {
            return Err(Error::config("masking.anchors must list at least one point"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskOutcome {
    pub mask: Mask,
    pub mask_hq: Mask,
    pub mask_lq: Mask,
}

impl MaskOutcome {
    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }
}

/// Reorders a cloud by source pixel (row-major), then by coordinates.
///
/// Every later stage sees the same sequence regardless of the input order.
pub fn canonical_order(cloud: &PointCloud) -> PointCloud {
    let mut idx: Vec<usize> = (0..cloud.len()).collect();
    let px = cloud.pixels();
    let pts = cloud.points();
    idx.sort_by(|&a, &b| {
        (px[a][1], px[a][0])
            .cmp(&(px[b][1], px[b][0]))
            .then_with(|| {
                pts[a].x.total_cmp(&pts[b].x)
                    .then(pts[a].y.total_cmp(&pts[b].y))
                    .then(pts[a].z.total_cmp(&pts[b].z))
            })
            .then(Ordering::Equal)
    });
    cloud.subset(&idx)
}

fn mask_of(cloud: &PointCloud, indices: &[usize], dims: (usize, usize)) -> Mask {
    let mut m = Mask::empty(dims.0, dims.1);
    for &i in indices {
        let [u, v] = cloud.pixels()[i];
        m.set(u as usize, v as usize, true);
    }
    m
}

/// Object pixels from the aligned HQ cloud: crop, region growing, support
/// rejection, density filtering.
pub fn hq_object_points(cloud: &PointCloud, params: &MaskParams) -> Result<(PointCloud, Vec<usize>)> {
    let cropped = params.crop_box()?.crop(&canonical_order(cloud));
    if cropped.len() < params.normal_k {
        return Ok((cropped, Vec::new()));
    }
    let normals = estimate_normals(&cropped, params.normal_k)?;
    let regions = region_grow(&cropped, &normals, &params.region_grow())?;
    let kept = reject_surface_clusters(
        &regions,
        &cropped,
        &params.anchor_points(),
        params.reject_dist_m,
        params.reject_near_anchors,
    )?;
    let remaining = cropped.subset(&kept.clustered());
    let survivors = density_survivors(&remaining, params)?;
    Ok((remaining, survivors))
}

fn density_survivors(cloud: &PointCloud, params: &MaskParams) -> Result<Vec<usize>> {
    let labels = dbscan(cloud.points(), params.eps_m, params.min_pts)?;
    Ok(filter_clusters(&labels, cloud, params.min_size, params.max_gap_m).clustered())
}

/// Intersection of the two partial masks, optionally closed.
pub fn combine_masks(mask_hq: &Mask, mask_lq: &Mask, closing: bool) -> Result<Mask> {
    let mask = mask_hq.and(mask_lq)?;
    Ok(if closing { close3x3(&mask) } else { mask })
}

/// Builds the object mask from the aligned HQ cloud and the LQ cloud, both
/// carrying pixel provenance on the LQ grid of size `dims`.
pub fn mask_from_clouds(
    hq: &PointCloud,
    lq: &PointCloud,
    dims: (usize, usize),
    params: &MaskParams,
) -> Result<MaskOutcome> {
    params.validate()?;
    if hq.source_dims() != dims || lq.source_dims() != dims {
        return Err(Error::config("clouds do not refer to the LQ image grid"));
    }
    let (hq_remaining, hq_survivors) = hq_object_points(hq, params)?;
    let mask_hq = mask_of(&hq_remaining, &hq_survivors, dims);

    // LQ points under the HQ mask; the density stage drops the ones that do not
    // belong to the objects (background seen past a silhouette, outliers).
    let lq_sorted = canonical_order(lq);
    let lq_under = lq_sorted.select(|i| {
        let [u, v] = lq_sorted.pixels()[i];
        mask_hq.get(u as usize, v as usize)
    });
    let lq_survivors = density_survivors(&lq_under, params)?;
    let mask_lq = mask_of(&lq_under, &lq_survivors, dims);

    let mask = combine_masks(&mask_hq, &mask_lq, params.closing)?;
    Ok(MaskOutcome {
        mask,
        mask_hq,
        mask_lq,
    })
}

pub fn build_mask(tuple: &FrameTuple, intr_lq: &Intrinsics, params: &MaskParams) -> Result<MaskOutcome> {
    if !tuple.state.aligned {
        return Err(Error::config(format!("tuple {} must be aligned before masking", tuple.id)));
    }
    let hq = unproject(&tuple.color_hq, &tuple.depth_hq, intr_lq)?;
    let lq = unproject(&tuple.color_lq, &tuple.depth_lq, intr_lq)?;
    mask_from_clouds(&hq, &lq, intr_lq.dims(), params)
}

/// Attaches the mask to a copy of the tuple, recording an empty result in its metadata.
pub fn mask_tuple(tuple: &FrameTuple, intr_lq: &Intrinsics, params: &MaskParams) -> Result<FrameTuple> {
    let outcome = build_mask(tuple, intr_lq, params)?;
    let mut out = tuple.clone();
    out.mask_empty = outcome.is_empty();
    out.mask = Some(outcome.mask);
    out.state.masked = true;
    Ok(out)
}
