//! Training-free depth denoisers: bilateral and rolling guidance filters.
//!
//! Only valid pixels inside the mask are rewritten and only valid masked
//! neighbors contribute, with weights renormalized over what remains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DepthFrame, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilateralParams {
    /// Pixels.
    pub sigma_spatial: f64,
    /// Depth units.
    pub sigma_range: f64,
    /// Half window size in pixels.
    pub radius: usize,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            sigma_spatial: 3.0,
            sigma_range: 20.0,
            radius: 6,
        }
    }
}

impl BilateralParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_spatial > 0.0 && self.sigma_range > 0.0 && self.radius > 0) {
            return Err(Error::config("bilateral sigmas and radius must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RollingGuidanceParams {
    #[serde(flatten)]
    pub bilateral: BilateralParams,
    pub iterations: usize,
    /// Sigma of the initial Gaussian blur, pixels.
    pub initial_sigma: f64,
}

impl Default for RollingGuidanceParams {
    fn default() -> Self {
        Self {
            bilateral: BilateralParams::default(),
            iterations: 4,
            initial_sigma: 2.0,
        }
    }
}

impl RollingGuidanceParams {
    pub fn validate(&self) -> Result<()> {
        self.bilateral.validate()?;
        if self.iterations == 0 {
            return Err(Error::config("rolling guidance needs at least one iteration"));
        }
        if !(self.initial_sigma > 0.0) {
            return Err(Error::config("rolling guidance initial_sigma must be positive"));
        }
        Ok(())
    }
}

fn check(a: &DepthFrame, b: &DepthFrame, mask: &Mask) -> Result<()> {
    if a.dims() != b.dims() || a.dims() != mask.dims() {
        return Err(Error::config("filter inputs differ in size"));
    }
    Ok(())
}

/// Generic masked window filter. `range` maps a guidance difference to a weight.
fn filter(
    input: &DepthFrame,
    guidance: &DepthFrame,
    mask: &Mask,
    sigma_spatial: f64,
    radius: usize,
    range: impl Fn(f64) -> f64 + Sync,
) -> DepthFrame {
    let (w, h) = input.dims();
    let src = input.data();
    let gd = guidance.data();
    let md = mask.data();
    let r = radius as i64;
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dv| (-r..=r).map(move |du| (du, dv)))
        .map(|(du, dv)| (-((du * du + dv * dv) as f64) / (2.0 * sigma_spatial * sigma_spatial)).exp())
        .collect();
    let usable = |i: usize| md[i] && input.is_valid_at(i) && gd[i].is_finite();
    let mut out = src.to_vec();
    out.par_chunks_mut(w).enumerate().for_each(|(v, row)| {
        for (u, slot) in row.iter_mut().enumerate() {
            let p = v * w + u;
            if !usable(p) {
                continue;
            }
            let gp = gd[p] as f64;
            let (mut num, mut den) = (0.0, 0.0);
            let mut k = 0;
            for dv in -r..=r {
                for du in -r..=r {
                    let ws = spatial[k];
                    k += 1;
                    let (x, y) = (u as i64 + du, v as i64 + dv);
                    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                        continue;
                    }
                    let q = y as usize * w + x as usize;
                    if !usable(q) {
                        continue;
                    }
                    let wt = ws * range(gd[q] as f64 - gp);
                    num += wt * src[q] as f64;
                    den += wt;
                }
            }
            if den > 0.0 {
                *slot = (num / den) as f32;
            }
        }
    });
    DepthFrame::new(w, h, input.unit_scale(), out).expect("same shape, convex combination")
}

/// Bilateral filter whose range weights come from `guidance` rather than the input.
pub fn joint_bilateral(
    input: &DepthFrame,
    guidance: &DepthFrame,
    mask: &Mask,
    p: &BilateralParams,
) -> Result<DepthFrame> {
    p.validate()?;
    check(input, guidance, mask)?;
    let inv = 1.0 / (2.0 * p.sigma_range * p.sigma_range);
    Ok(filter(input, guidance, mask, p.sigma_spatial, p.radius, |d| (-d * d * inv).exp()))
}

pub fn bilateral(depth: &DepthFrame, mask: &Mask, p: &BilateralParams) -> Result<DepthFrame> {
    joint_bilateral(depth, depth, mask, p)
}

/// Gaussian blur over the valid masked domain, window radius `ceil(3σ)`.
pub fn gaussian_blur(depth: &DepthFrame, mask: &Mask, sigma: f64) -> Result<DepthFrame> {
    if !(sigma > 0.0) {
        return Err(Error::config("blur sigma must be positive"));
    }
    check(depth, depth, mask)?;
    let radius = (3.0 * sigma).ceil() as usize;
    Ok(filter(depth, depth, mask, sigma, radius, |_| 1.0))
}

/// Blur away small structures, then restore large edges by joint bilateral
/// steps guided by the previous iterate.
pub fn rolling_guidance(
    depth: &DepthFrame,
    mask: &Mask,
    p: &RollingGuidanceParams,
) -> Result<DepthFrame> {
    p.validate()?;
    let mut guide = gaussian_blur(depth, mask, p.initial_sigma)?;
    for _ in 0..p.iterations {
        guide = joint_bilateral(depth, &guide, mask, &p.bilateral)?;
    }
    Ok(guide)
}
