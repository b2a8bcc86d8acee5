//! Pinhole camera model, image rasters, point clouds and rigid transforms.

mod cloud;
mod frame;
mod intrinsics;
mod projection;
mod transform;

pub use cloud::{apply_transform, centroid, PointCloud};
pub use frame::{ColorFrame, DepthFrame, Mask, Rgb};
pub use intrinsics::{CameraTag, Intrinsics};
pub use projection::{project_point, project_winners, reproject, unproject};
pub(crate) use projection::frames_from_winners;
pub use transform::{rotation_rows, RigidTransform};

/// Composition `a ∘ b`: applies `b` first, then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}
