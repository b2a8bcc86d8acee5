//! Rigid-motion augmentation of masked tuples.
//!
//! Both clouds of a tuple are moved by one random transform and reprojected
//! onto the LQ grid. Sampling is keyed by `(seed, tuple index, sample index)`
//! so results do not depend on evaluation order.

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{FrameTuple, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{
    centroid, frames_from_winners, project_winners, unproject, Intrinsics, Mask, PointCloud,
    RigidTransform,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pivot {
    /// Rotate about the centroid of the masked HQ points.
    Centroid,
    /// Rotate about the LQ camera center.
    Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentPolicy {
    /// Augmented copies per source tuple.
    pub k: u32,
    pub max_translation_m: f64,
    pub max_rotation_deg: f64,
    pub rng_seed: u64,
    pub pivot: Pivot,
    /// Copies with fewer object pixels than this are dropped.
    pub min_object_pixels: usize,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        Self {
            k: 49,
            max_translation_m: 0.10,
            max_rotation_deg: 5.0,
            rng_seed: 0,
            pivot: Pivot::Centroid,
            min_object_pixels: 50,
        }
    }
}

impl AugmentPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_translation_m >= 0.0 && self.max_translation_m.is_finite()) {
            return Err(Error::config("augment.max_translation_m must be finite and >= 0"));
        }
        if !(0.0..=180.0).contains(&self.max_rotation_deg) {
            return Err(Error::config("augment.max_rotation_deg must lie in [0, 180]"));
        }
        Ok(())
    }
}

fn stream(seed: u64, tuple_index: u64, sample_index: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tuple_index.to_le_bytes());
    key[16..20].copy_from_slice(&sample_index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Random motion about the camera origin: axis uniform on the sphere, angle
/// uniform in `[0, max_rotation]`, translation uniform in the cube of half-width
/// `max_translation`.
pub fn sample_transform(policy: &AugmentPolicy, tuple_index: u64, sample_index: u32) -> RigidTransform {
    let mut rng = stream(policy.rng_seed, tuple_index, sample_index);
    let axis: [f64; 3] = UnitSphere.sample(&mut rng);
    let angle = rng.random_range(0.0..=policy.max_rotation_deg.to_radians());
    let t = policy.max_translation_m;
    let translation = Vector3::from_fn(|_, _| rng.random_range(-t..=t));
    RigidTransform::from_axis_angle(&Vector3::from(axis), angle, translation)
}

/// `x ↦ R (x − c) + c + t` for a sampled `(R, t)` and pivot `c`.
pub fn about_pivot(sample: &RigidTransform, pivot: &Point3<f64>) -> RigidTransform {
    let r = sample.rotation();
    let translation = pivot.coords - r * pivot.coords + sample.translation();
    RigidTransform::new(*r, translation).expect("rotation already orthonormal")
}

#[derive(Debug, Clone)]
pub struct Augmented {
    /// The source tuple followed by the kept copies in sample order.
    pub tuples: Vec<FrameTuple>,
    pub dropped: usize,
}

pub fn augmented_id(source: &str, index: u32, k: u32) -> String {
    let width = k.to_string().len().max(2);
    format!("{source}_a{index:0width$}")
}

/// The source tuple plus up to `k` rigidly moved copies.
///
/// The mask of a copy is the set of pixels where the visible HQ point and the
/// visible LQ point both come from masked pixels. Copies with fewer than
/// `min_object_pixels` such pixels are dropped.
pub fn augment_tuple(
    tuple: &FrameTuple,
    policy: &AugmentPolicy,
    intr_lq: &Intrinsics,
    tuple_index: u64,
) -> Result<Augmented> {
    policy.validate()?;
    let mask = match (&tuple.mask, tuple.state.masked) {
        (Some(m), true) => m,
        _ => {
            return Err(Error::config(format!(
                "tuple {} must be masked before augmentation",
                tuple.id
            )))
        }
    };
    if tuple.provenance.aug_index != 0 {
        return Err(Error::config(format!("tuple {} is already an augmented copy", tuple.id)));
    }
    let hq = unproject(&tuple.color_hq, &tuple.depth_hq, intr_lq)?;
    let lq = unproject(&tuple.color_lq, &tuple.depth_lq, intr_lq)?;
    let in_mask = |cloud: &PointCloud| -> Vec<bool> {
        cloud.pixels().iter().map(|&[u, v]| mask.get(u as usize, v as usize)).collect()
    };
    let (hq_obj, lq_obj) = (in_mask(&hq), in_mask(&lq));

    let pivot = match policy.pivot {
        Pivot::Origin => Some(Point3::origin()),
        Pivot::Centroid => centroid(hq.points().iter().zip(&hq_obj).filter(|p| *p.1).map(|p| p.0)),
    };
    let mut tuples = vec![tuple.clone()];
    let Some(pivot) = pivot else {
        return Ok(Augmented {
            tuples,
            dropped: policy.k as usize,
        });
    };

    let copies: Vec<Option<FrameTuple>> = (1..=policy.k)
        .into_par_iter()
        .map(|s| {
            let t_rand = about_pivot(&sample_transform(policy, tuple_index, s), &pivot);
            let moved_hq = render(&hq, &hq_obj, &t_rand, intr_lq)?;
            let moved_lq = render(&lq, &lq_obj, &t_rand, intr_lq)?;
            let (w, h) = intr_lq.dims();
            let both = moved_hq.2.iter().zip(&moved_lq.2).map(|(a, b)| *a && *b).collect();
            let out_mask = Mask::new(w, h, both)?;
            if out_mask.count() < policy.min_object_pixels {
                return Ok(None);
            }
            Ok(Some(FrameTuple {
                id: augmented_id(&tuple.id, s, policy.k),
                color_lq: moved_lq.0,
                depth_lq: moved_lq.1,
                color_hq: moved_hq.0,
                depth_hq: moved_hq.1,
                mask: Some(out_mask),
                state: crate::dataset::TupleState {
                    aligned: true,
                    masked: true,
                    augmented: true,
                },
                mask_empty: false,
                provenance: Provenance {
                    source_id: tuple.provenance.source_id.clone(),
                    aug_index: s,
                    t_rand: Some(t_rand),
                },
            }))
        })
        .collect::<Result<_>>()?;
    let dropped = copies.iter().filter(|c| c.is_none()).count();
    tuples.extend(copies.into_iter().flatten());
    Ok(Augmented { tuples, dropped })
}

/// Moves a cloud, renders it, and flags the pixels whose visible point is an object point.
fn render(
    cloud: &PointCloud,
    object: &[bool],
    t: &RigidTransform,
    intr: &Intrinsics,
) -> Result<(crate::geometry::ColorFrame, crate::geometry::DepthFrame, Vec<bool>)> {
    let moved = cloud.transformed(t);
    let front: Vec<usize> = (0..moved.len()).filter(|&i| moved.points()[i].z > 0.0).collect();
    let moved = moved.subset(&front);
    let winners = project_winners(&moved, intr)?;
    let (color, depth) = frames_from_winners(&moved, intr, &winners);
    let flags = winners.iter().map(|w| w.is_some_and(|i| object[front[i]])).collect();
    Ok((color, depth, flags))
}
