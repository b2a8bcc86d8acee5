use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which sensor of the rig a frame or cloud came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CameraTag {
    Lq,
    Hq,
}

impl fmt::Display for CameraTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CameraTag::Lq => f.write_str("lq"),
            CameraTag::Hq => f.write_str("hq"),
        }
    }
}

/// Pinhole intrinsics plus the factor converting stored depth units to meters.
///
/// `u` is the column coordinate and pairs with `cx`; `v` is the row coordinate
/// and pairs with `cy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub d_scale: f64,
    pub width: usize,
    pub height: usize,
    pub camera: CameraTag,
}

impl Intrinsics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        d_scale: f64,
        width: usize,
        height: usize,
        camera: CameraTag,
    ) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            d_scale,
            width,
            height,
            camera,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy, self.d_scale]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("intrinsics contain non-finite values"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::config(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.d_scale <= 0.0 {
            return Err(Error::config(format!(
                "d_scale must be positive, got {}",
                self.d_scale
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("image size must be non-zero"));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(Error::config(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let intr: Intrinsics =
            serde_json::from_str(&text).map_err(|e| Error::integrity(path, e))?;
        intr.validate()?;
        Ok(intr)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("intrinsics serialize");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
