//! Lifting depth pixels into camera space and projecting points back onto a
//! pixel grid.

use nalgebra::Point3;

use super::cloud::PointCloud;
use super::frame::{ColorFrame, DepthFrame};
use super::intrinsics::Intrinsics;
use crate::error::{Error, Result};

/// One point per valid pixel, emitted in row-major pixel order.
pub fn unproject(color: &ColorFrame, depth: &DepthFrame, intr: &Intrinsics) -> Result<PointCloud> {
    if color.dims() != depth.dims() || depth.dims() != intr.dims() {
        return Err(Error::config(format!(
            "frame sizes {:?} (color) / {:?} (depth) do not match {} intrinsics {:?}",
            color.dims(),
            depth.dims(),
            intr.camera,
            intr.dims()
        )));
    }
    let (w, h) = depth.dims();
    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut pixels = Vec::new();
    for v in 0..h {
        for u in 0..w {
            let idx = v * w + u;
            if !depth.is_valid_at(idx) {
                continue;
            }
            let z = depth.data()[idx] as f64 * intr.d_scale;
            let x = (u as f64 - intr.cx) * z / intr.fx;
            let y = (v as f64 - intr.cy) * z / intr.fy;
            points.push(Point3::new(x, y, z));
            colors.push(color.data()[idx]);
            pixels.push([u as u32, v as u32]);
        }
    }
    PointCloud::new(points, colors, pixels, intr.camera, (w, h))
}

/// Nearest-integer pixel of a camera-space point, if it lands inside the image.
#[inline]
pub fn project_point(p: &Point3<f64>, intr: &Intrinsics) -> Option<(usize, usize)> {
    let u = (p.x * intr.fx / p.z + intr.cx).round();
    let v = (p.y * intr.fy / p.z + intr.cy).round();
    if u >= 0.0 && v >= 0.0 && u < intr.width as f64 && v < intr.height as f64 {
        Some((u as usize, v as usize))
    } else {
        None
    }
}

/// Z-buffer: for each pixel of the target grid, the index of the nearest point
/// projecting onto it. Ties keep the earlier point.
pub fn project_winners(cloud: &PointCloud, intr: &Intrinsics) -> Result<Vec<Option<usize>>> {
    let mut winners: Vec<Option<usize>> = vec![None; intr.width * intr.height];
    for (i, p) in cloud.points().iter().enumerate() {
        if !(p.z > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "point {i} at z = {} cannot be projected",
                p.z
            )));
        }
        let Some((u, v)) = project_point(p, intr) else {
            continue;
        };
        let slot = &mut winners[v * intr.width + u];
        match *slot {
            Some(j) if cloud.points()[j].z <= p.z => {}
            _ => *slot = Some(i),
        }
    }
    Ok(winners)
}

/// Renders a cloud into color and depth frames on the grid of `intr`.
///
/// Pixels no point lands on are black with invalid depth.
pub fn reproject(cloud: &PointCloud, intr: &Intrinsics) -> Result<(ColorFrame, DepthFrame)> {
    let winners = project_winners(cloud, intr)?;
    Ok(frames_from_winners(cloud, intr, &winners))
}

pub(crate) fn frames_from_winners(
    cloud: &PointCloud,
    intr: &Intrinsics,
    winners: &[Option<usize>],
) -> (ColorFrame, DepthFrame) {
    let (w, h) = intr.dims();
    let mut color = ColorFrame::filled(w, h, [0, 0, 0]);
    let mut depth = DepthFrame::invalid(w, h, intr.d_scale as f32);
    for (idx, winner) in winners.iter().enumerate() {
        if let Some(i) = *winner {
            let (u, v) = (idx % w, idx / w);
            color.set(u, v, cloud.colors()[i]);
            depth.set(u, v, (cloud.points()[i].z / intr.d_scale) as f32);
        }
    }
    (color, depth)
}
