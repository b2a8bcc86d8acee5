//! Extrinsic calibration between the two sensors of a fixed rig.
//!
//! The transform mapping HQ camera space into LQ camera space is estimated
//! once per mount from matched 3-D points, using the closed-form SVD solution
//! of the least-squares rigid registration problem. Every tuple recorded on
//! that mount is then aligned by unprojecting the HQ frames, moving the points
//! into LQ space and reprojecting them with the LQ intrinsics.

use std::path::Path;

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::dataset::FrameTuple;
use crate::error::{Error, Result};
use crate::geometry::{
    centroid, reproject, rotation_rows, unproject, ColorFrame, DepthFrame, Intrinsics,
    RigidTransform,
};

/// Smallest admissible spread of the HQ points across their second principal axis.
const COLLINEAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub label: Option<String>,
    pub hq: Point3<f64>,
    pub lq: Point3<f64>,
}

/// Matched point pairs in meters, HQ camera space → LQ camera space.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    pairs: Vec<Correspondence>,
}

impl CorrespondenceSet {
    pub fn new(pairs: Vec<Correspondence>) -> Result<Self> {
        if pairs.len() < 3 {
            return Err(Error::Estimation(format!(
                "need at least 3 correspondences, got {}",
                pairs.len()
            )));
        }
        let finite = pairs
            .iter()
            .all(|c| c.hq.iter().chain(c.lq.iter()).all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Estimation("non-finite correspondence coordinate".into()));
        }
        let c = centroid(pairs.iter().map(|p| &p.hq)).expect("non-empty");
        let mut scatter = Matrix3::zeros();
        for p in &pairs {
            let d = p.hq - c;
            scatter += d * d.transpose();
        }
        // Singular values of the centered K×3 matrix are the square roots of
        // the scatter eigenvalues; rank ≥ 2 means the points span a plane.
        let mut eig: Vec<f64> = scatter.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let second = eig[1].max(0.0).sqrt();
        if !(second > COLLINEAR_TOL) {
            return Err(Error::Estimation(
                "HQ correspondence points are collinear or coincident".into(),
            ));
        }
        Ok(Self { pairs })
    }

    pub fn from_points(hq: &[Point3<f64>], lq: &[Point3<f64>]) -> Result<Self> {
        if hq.len() != lq.len() {
            return Err(Error::config("HQ and LQ point lists differ in length"));
        }
        Self::new(
            hq.iter()
                .zip(lq)
                .map(|(h, l)| Correspondence {
                    label: None,
                    hq: *h,
                    lq: *l,
                })
                .collect(),
        )
    }

    pub fn pairs(&self) -> &[Correspondence] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Reads `id,xh,yh,zh,xl,yl,zl` CSV (meters).
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::integrity(path, e))?;
        let headers = reader.headers().map_err(|e| Error::integrity(path, e))?.clone();
        let expected = ["id", "xh", "yh", "zh", "xl", "yl", "zl"];
        if headers.iter().map(str::trim).ne(expected.iter().copied()) {
            return Err(Error::integrity(
                path,
                format!("expected header {}", expected.join(",")),
            ));
        }
        let mut pairs = Vec::new();
        for record in reader.deserialize::<CsvRow>() {
            let row = record.map_err(|e| Error::integrity(path, e))?;
            pairs.push(Correspondence {
                label: (!row.id.is_empty()).then_some(row.id),
                hq: Point3::new(row.xh, row.yh, row.zh),
                lq: Point3::new(row.xl, row.yl, row.zl),
            });
        }
        Self::new(pairs)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| Error::integrity(path, e))?;
        for (i, c) in self.pairs.iter().enumerate() {
            writer
                .serialize(CsvRow {
                    id: c.label.clone().unwrap_or_else(|| i.to_string()),
                    xh: c.hq.x,
                    yh: c.hq.y,
                    zh: c.hq.z,
                    xl: c.lq.x,
                    yl: c.lq.y,
                    zl: c.lq.z,
                })
                .map_err(|e| Error::integrity(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    id: String,
    xh: f64,
    yh: f64,
    zh: f64,
    xl: f64,
    yl: f64,
    zl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub transform: RigidTransform,
    pub rms_residual_m: f64,
    pub residuals_m: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CalibrationFile {
    rotation: [[f64; 3]; 3],
    translation_m: [f64; 3],
    rms_residual_m: f64,
    #[serde(default)]
    residuals_m: Vec<f64>,
}

impl CalibrationResult {
    pub fn to_json(&self) -> String {
        let file = CalibrationFile {
            rotation: rotation_rows(self.transform.rotation()),
            translation_m: (*self.transform.translation()).into(),
            rms_residual_m: self.rms_residual_m,
            residuals_m: self.residuals_m.clone(),
        };
        serde_json::to_string_pretty(&file).expect("calibration serialize") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: CalibrationFile =
            serde_json::from_str(&text).map_err(|e| Error::integrity(path, e))?;
        let r = file.rotation;
        let rotation = Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        );
        let transform = RigidTransform::new(rotation, Vector3::from(file.translation_m))
            .map_err(|e| Error::integrity(path, e))?;
        Ok(Self {
            transform,
            rms_residual_m: file.rms_residual_m,
            residuals_m: file.residuals_m,
        })
    }
}

/// Least-squares rigid transform taking the HQ points onto the LQ points.
///
/// Centers both sets, builds the cross-covariance `H = Σ (h - h̄)(l - l̄)ᵀ`,
/// decomposes `H = U Σ Vᵀ` and sets `R = V diag(1, 1, det(V Uᵀ)) Uᵀ`,
/// `t = l̄ - R h̄`. The diagonal correction rules out reflections.
pub fn solve_extrinsic(corr: &CorrespondenceSet) -> Result<CalibrationResult> {
    let pairs = corr.pairs();
    let c_hq = centroid(pairs.iter().map(|p| &p.hq)).expect("validated non-empty");
    let c_lq = centroid(pairs.iter().map(|p| &p.lq)).expect("validated non-empty");

    let mut h = Matrix3::zeros();
    for p in pairs {
        h += (p.hq - c_hq) * (p.lq - c_lq).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Estimation("SVD failed to produce U".into()))?;
    let v = svd
        .v_t
        .ok_or_else(|| Error::Estimation("SVD failed to produce Vᵀ".into()))?
        .transpose();
    let sign = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign)) * u.transpose();
    let translation = c_lq.coords - rotation * c_hq.coords;
    let transform = RigidTransform::new(rotation, translation)
        .map_err(|e| Error::Estimation(format!("registration produced {e}")))?;

    let residuals_m: Vec<f64> = pairs
        .iter()
        .map(|p| (transform.apply(&p.hq) - p.lq).norm())
        .collect();
    let rms_residual_m =
        (residuals_m.iter().map(|r| r * r).sum::<f64>() / residuals_m.len() as f64).sqrt();
    Ok(CalibrationResult {
        transform,
        rms_residual_m,
        residuals_m,
    })
}

/// HQ frames moved onto the LQ image grid: unproject with the HQ intrinsics,
/// apply `t_ex`, reproject with the LQ intrinsics.
pub fn align_frames(
    color_hq: &ColorFrame,
    depth_hq: &DepthFrame,
    t_ex: &RigidTransform,
    intr_lq: &Intrinsics,
    intr_hq: &Intrinsics,
) -> Result<(ColorFrame, DepthFrame)> {
    let cloud = unproject(color_hq, depth_hq, intr_hq)?;
    reproject(&cloud.transformed(t_ex), intr_lq)
}

/// Aligns the HQ half of a raw tuple onto the LQ grid. LQ frames are untouched.
pub fn align_tuple(
    tuple: &FrameTuple,
    t_ex: &RigidTransform,
    intr_lq: &Intrinsics,
    intr_hq: &Intrinsics,
) -> Result<FrameTuple> {
    if tuple.state.aligned {
        return Err(Error::config(format!("tuple {} is already aligned", tuple.id)));
    }
    if tuple.depth_lq.dims() != intr_lq.dims() || tuple.color_lq.dims() != intr_lq.dims() {
        return Err(Error::config(format!(
            "tuple {}: LQ frames do not match LQ intrinsics",
            tuple.id
        )));
    }
    let (color_hq, depth_hq) =
        align_frames(&tuple.color_hq, &tuple.depth_hq, t_ex, intr_lq, intr_hq)?;
    let mut out = tuple.clone();
    out.color_hq = color_hq;
    out.depth_hq = depth_hq;
    out.state.aligned = true;
    Ok(out)
}
