//! Ray-cast tabletop scenes seen by a simulated LQ/HQ camera pair.
//!
//! Used for fixtures and demos: a finite table plane at world `z = 0` carrying
//! axis-aligned boxes, two pinhole cameras with known relative pose, and
//! per-camera noise. World units are meters, depth is stored in millimeters.

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calibration::CorrespondenceSet;
use crate::dataset::FrameTuple;
use crate::error::Result;
use crate::geometry::{CameraTag, ColorFrame, DepthFrame, Intrinsics, Mask, Rgb, RigidTransform};
use crate::masking::MaskParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Cuboid {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Table top spans `[-half.0, half.0] × [-half.1, half.1]` at `z = 0`.
    pub table_half: (f64, f64),
    pub boxes: Vec<Cuboid>,
}

impl Scene {
    pub fn empty() -> Self {
        Self {
            table_half: (0.6, 0.5),
            boxes: Vec::new(),
        }
    }

    /// Two to three non-overlapping boxes, 12 to 18 cm on each side.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scene = Self::empty();
        let n = rng.random_range(2..=3);
        let mut attempts = 0;
        while scene.boxes.len() < n && attempts < 1000 {
            attempts += 1;
            let sx = rng.random_range(0.12..0.18);
            let sy = rng.random_range(0.12..0.18);
            let sz = rng.random_range(0.12..0.18);
            let cx = rng.random_range(-0.28..0.28);
            let cy = rng.random_range(-0.12..0.22);
            let min = Point3::new(cx - sx / 2.0, cy - sy / 2.0, 0.0);
            let max = Point3::new(cx + sx / 2.0, cy + sy / 2.0, sz);
            let gap = 0.05;
            let clear = scene.boxes.iter().all(|b| {
                max.x + gap < b.min.x || b.max.x + gap < min.x || max.y + gap < b.min.y || b.max.y + gap < min.y
            });
            if clear {
                let color = [rng.random_range(40..220), rng.random_range(40..220), rng.random_range(40..220)];
                scene.boxes.push(Cuboid { min, max, color });
            }
        }
        scene
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hit {
    Nothing,
    Table,
    Box(usize),
}

/// Camera-to-world pose looking from `eye` at `target`, image y pointing down.
pub fn look_at(eye: Point3<f64>, target: Point3<f64>) -> RigidTransform {
    let z = (target - eye).normalize();
    let x = z.cross(&Vector3::z()).normalize();
    let y = z.cross(&x);
    let r = nalgebra::Matrix3::from_columns(&[x, y, z]);
    RigidTransform::new(r, eye.coords).expect("orthonormal by construction")
}

fn ray_box(o: &Point3<f64>, d: &Vector3<f64>, b: &Cuboid) -> Option<f64> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for a in 0..3 {
        if d[a].abs() < 1e-15 {
            if o[a] < b.min[a] || o[a] > b.max[a] {
                return None;
            }
            continue;
        }
        let (mut near, mut far) = ((b.min[a] - o[a]) / d[a], (b.max[a] - o[a]) / d[a]);
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
    }
    (t0 <= t1 && t0 > 0.0).then_some(t0)
}

pub struct Render {
    pub depth: DepthFrame,
    pub color: ColorFrame,
    pub hits: Vec<Hit>,
}

/// Noise-free ray cast through every pixel center.
pub fn render(scene: &Scene, pose: &RigidTransform, intr: &Intrinsics) -> Render {
    let (w, h) = intr.dims();
    let eye = Point3::from(*pose.translation());
    let mut depth = vec![f32::NAN; w * h];
    let mut color = vec![[0u8; 3]; w * h];
    let mut hits = vec![Hit::Nothing; w * h];
    for v in 0..h {
        for u in 0..w {
            // Camera ray with unit z component, so the hit parameter is the depth.
            let dc = Vector3::new((u as f64 - intr.cx) / intr.fx, (v as f64 - intr.cy) / intr.fy, 1.0);
            let dw = pose.rotation() * dc;
            let mut best = (f64::INFINITY, Hit::Nothing);
            if dw.z.abs() > 1e-12 {
                let t = -eye.z / dw.z;
                let p = eye + dw * t;
                if t > 0.0 && p.x.abs() <= scene.table_half.0 && p.y.abs() <= scene.table_half.1 {
                    best = (t, Hit::Table);
                }
            }
            for (i, b) in scene.boxes.iter().enumerate() {
                if let Some(t) = ray_box(&eye, &dw, b) {
                    if t < best.0 {
                        best = (t, Hit::Box(i));
                    }
                }
            }
            let idx = v * w + u;
            hits[idx] = best.1;
            match best.1 {
                Hit::Nothing => {}
                Hit::Table => {
                    let p = eye + dw * best.0;
                    let check = ((p.x * 20.0).floor() + (p.y * 20.0).floor()) as i64 & 1;
                    color[idx] = if check == 0 { [150, 140, 125] } else { [120, 112, 100] };
                    depth[idx] = (best.0 / intr.d_scale) as f32;
                }
                Hit::Box(i) => {
                    color[idx] = scene.boxes[i].color;
                    depth[idx] = (best.0 / intr.d_scale) as f32;
                }
            }
        }
    }
    Render {
        depth: DepthFrame::new(w, h, intr.d_scale as f32, depth).expect("positive depths"),
        color: ColorFrame::new(w, h, color).expect("sized"),
        hits,
    }
}

/// Per-camera measurement corruption, all in stored depth units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    /// Fraction of valid pixels turned invalid.
    pub dropout: f64,
    /// Fraction of pixels replaced by a uniform depth in `outlier_range`.
    pub outliers: f64,
    pub outlier_range: (f64, f64),
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            sigma: 0.0,
            dropout: 0.0,
            outliers: 0.0,
            outlier_range: (300.0, 1500.0),
        }
    }

    pub fn lq() -> Self {
        Self {
            sigma: 2.0,
            dropout: 0.02,
            outliers: 0.005,
            ..Self::none()
        }
    }

    pub fn hq() -> Self {
        Self {
            sigma: 0.3,
            dropout: 0.005,
            outliers: 0.0,
            ..Self::none()
        }
    }

    pub fn apply(&self, depth: &DepthFrame, rng: &mut ChaCha8Rng) -> DepthFrame {
        let normal = Normal::new(0.0, self.sigma.max(0.0)).expect("finite sigma");
        let data = depth
            .data()
            .iter()
            .map(|&d| {
                let (r_out, r_drop): (f64, f64) = (rng.random(), rng.random());
                let noise = normal.sample(rng);
                let outlier = rng.random_range(self.outlier_range.0..=self.outlier_range.1);
                if r_out < self.outliers {
                    outlier as f32
                } else if !d.is_finite() || r_drop < self.dropout {
                    f32::NAN
                } else {
                    (d as f64 + noise).max(1.0) as f32
                }
            })
            .collect();
        DepthFrame::new(depth.width(), depth.height(), depth.unit_scale(), data).expect("positive")
    }
}

/// Two rigidly mounted cameras over the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Rig {
    pub intr_lq: Intrinsics,
    pub intr_hq: Intrinsics,
    /// Camera-to-world poses.
    pub pose_lq: RigidTransform,
    pub pose_hq: RigidTransform,
}

impl Rig {
    /// 320×240 LQ camera and a 640×480 HQ camera 4 cm to its side,
    /// both about 0.9 m from the table center at roughly 45° elevation.
    pub fn standard() -> Self {
        let intr_lq =
            Intrinsics::new(300.0, 300.0, 159.5, 119.5, 0.001, 320, 240, CameraTag::Lq).expect("valid");
        let intr_hq =
            Intrinsics::new(610.0, 605.0, 321.0, 238.0, 0.001, 640, 480, CameraTag::Hq).expect("valid");
        let pose_lq = look_at(Point3::new(0.0, -0.6, 0.65), Point3::new(0.0, 0.05, 0.0));
        let pose_hq = look_at(Point3::new(0.04, -0.6, 0.66), Point3::new(0.01, 0.06, 0.0));
        Self {
            intr_lq,
            intr_hq,
            pose_lq,
            pose_hq,
        }
    }

    /// Ground-truth extrinsic mapping HQ camera coordinates to LQ camera coordinates.
    pub fn extrinsic(&self) -> RigidTransform {
        self.pose_lq.inverse().compose(&self.pose_hq)
    }

    /// Masking parameters for this rig: a crop box around the table and
    /// anchors on a 2 cm grid of table points seen by the LQ camera.
    pub fn mask_params(&self) -> MaskParams {
        let table = Scene::empty();
        let world_to_lq = self.pose_lq.inverse();
        let mut anchors = Vec::new();
        let step = 0.02;
        let nx = (table.table_half.0 / step) as i64;
        let ny = (table.table_half.1 / step) as i64;
        for iy in -ny..=ny {
            for ix in -nx..=nx {
                let p = world_to_lq.apply(&Point3::new(ix as f64 * step, iy as f64 * step, 0.0));
                if crate::geometry::project_point(&p, &self.intr_lq).is_some() && p.z > 0.0 {
                    anchors.push([p.x, p.y, p.z]);
                }
            }
        }
        MaskParams {
            crop_min: [-0.9, -0.9, 0.2],
            crop_max: [0.9, 0.9, 1.8],
            anchors,
            reject_dist_m: 0.04,
            ..MaskParams::default()
        }
    }

    /// Correspondences between the two camera frames: `n` points on a board
    /// in front of the rig, each coordinate perturbed by `N(0, sigma_m)`.
    pub fn correspondences(&self, n: usize, sigma_m: f64, seed: u64) -> Result<CorrespondenceSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma_m.max(0.0)).expect("finite sigma");
        let t = self.extrinsic();
        let cols = (n as f64).sqrt().ceil() as usize;
        let mut hq = Vec::with_capacity(n);
        let mut lq = Vec::with_capacity(n);
        for i in 0..n {
            let (r, c) = ((i / cols) as f64, (i % cols) as f64);
            let p = Point3::new(-0.2 + 0.4 * c / cols as f64, -0.15 + 0.3 * r / cols as f64, 0.7 + 0.05 * ((i % 3) as f64));
            let mut jitter = || Vector3::from_fn(|_, _| noise.sample(&mut rng));
            hq.push(p + jitter());
            lq.push(t.apply(&p) + jitter());
        }
        CorrespondenceSet::from_points(&hq, &lq)
    }

    /// Raw tuple of `scene` with noise, plus the true object silhouette on the LQ grid.
    pub fn capture(
        &self,
        id: &str,
        scene: &Scene,
        seed: u64,
        lq_noise: &NoiseModel,
        hq_noise: &NoiseModel,
    ) -> Result<Capture> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lq = render(scene, &self.pose_lq, &self.intr_lq);
        let hq = render(scene, &self.pose_hq, &self.intr_hq);
        let (w, h) = self.intr_lq.dims();
        let truth = Mask::new(w, h, lq.hits.iter().map(|h| matches!(h, Hit::Box(_))).collect())?;
        let depth_lq = lq_noise.apply(&lq.depth, &mut rng);
        let depth_hq = hq_noise.apply(&hq.depth, &mut rng);
        let tuple = FrameTuple::raw(id, lq.color, depth_lq, hq.color, depth_hq)?;
        Ok(Capture { tuple, truth })
    }

    /// `n` captures of random scenes named `t000`, `t001`, ...
    pub fn fixture_set(&self, n: usize, seed: u64) -> Result<Vec<Capture>> {
        (0..n)
            .map(|i| {
                let s = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
                self.capture(&format!("t{i:03}"), &Scene::random(s), s, &NoiseModel::lq(), &NoiseModel::hq())
            })
            .collect()
    }
}

pub struct Capture {
    pub tuple: FrameTuple,
    /// Pixels of the LQ image showing a box.
    pub truth: Mask,
}

/// Flat plane at `base` with a single `+height` spike in the middle.
/// Returns the noisy frame and the clean plane.
pub fn impulse_plane(w: usize, h: usize, base: f32, height: f32) -> (DepthFrame, DepthFrame) {
    let clean = DepthFrame::from_fn(w, h, 0.001, |_, _| base).expect("positive size");
    let mut noisy = clean.clone();
    noisy.set(w / 2, h / 2, base + height);
    (noisy, clean)
}

/// Vertical step from `near` (left half) to `far` (right half).
pub fn step_edge(w: usize, h: usize, near: f32, far: f32) -> DepthFrame {
    DepthFrame::from_fn(w, h, 0.001, |u, _| if u < w / 2 { near } else { far }).expect("positive size")
}

/// Step edge with a column ripple of period two pixels, `±amplitude`.
/// Returns the rippled frame and the bare step.
pub fn ripple_step(w: usize, h: usize, near: f32, far: f32, amplitude: f32) -> (DepthFrame, DepthFrame) {
    let step = step_edge(w, h, near, far);
    let rippled = DepthFrame::from_fn(w, h, 0.001, |u, v| {
        step.get(u, v) + if u % 2 == 0 { amplitude } else { -amplitude }
    })
    .expect("positive size");
    (rippled, step)
}
