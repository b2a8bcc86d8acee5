//! Image-plane rasters: depth, color and boolean masks, all row-major.

use crate::error::{Error, Result};

/// Depth raster in stored units. Missing measurements are NaN.
#[derive(Debug, Clone)]
pub struct DepthFrame {
    width: usize,
    height: usize,
    /// Stored-unit-to-meters factor recorded alongside the raster.
    unit_scale: f32,
    data: Vec<f32>,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, unit_scale: f32, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::config(format!(
                "depth buffer has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(bad) = data.iter().find(|d| d.is_finite() && **d < 0.0) {
            return Err(Error::config(format!("negative depth value {bad}")));
        }
        Ok(Self {
            width,
            height,
            unit_scale,
            data,
        })
    }

    pub fn invalid(width: usize, height: usize, unit_scale: f32) -> Self {
        Self {
            width,
            height,
            unit_scale,
            data: vec![f32::NAN; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        unit_scale: f32,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self::new(width, height, unit_scale, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn unit_scale(&self) -> f32 {
        self.unit_scale
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, d: f32) {
        debug_assert!(!(d < 0.0));
        self.data[v * self.width + u] = d;
    }

    /// A pixel holds a measurement when it is finite and strictly positive.
    #[inline]
    pub fn is_valid_at(&self, idx: usize) -> bool {
        let d = self.data[idx];
        d.is_finite() && d > 0.0
    }

    pub fn valid_count(&self) -> usize {
        (0..self.data.len()).filter(|&i| self.is_valid_at(i)).count()
    }

    /// Bitwise equality, treating NaN payloads as ordinary bit patterns.
    pub fn bit_eq(&self, other: &DepthFrame) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.unit_scale.to_bits() == other.unit_scale.to_bits()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub type Rgb = [u8; 3];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorFrame {
    width: usize,
    height: usize,
    data: Vec<Rgb>,
}

impl ColorFrame {
    pub fn new(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::config(format!(
                "color buffer has {} pixels, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: Rgb) -> Self {
        Self {
            width,
            height,
            data: vec![rgb; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[Rgb] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Rgb {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, rgb: Rgb) {
        self.data[v * self.width + u] = rgb;
    }
}

/// Boolean image; `true` marks an object pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::config(format!(
                "mask has {} pixels, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        self.data[v * self.width + u] = on;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|b| *b)
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        if self.dims() != other.dims() {
            return Err(Error::config("mask dimensions differ"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a && *b).collect();
        Ok(Mask {
            width: self.width,
            height: self.height,
            data,
        })
    }

    /// Intersection over union; two empty masks count as identical.
    pub fn iou(&self, other: &Mask) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::config("mask dimensions differ"));
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for (a, b) in self.data.iter().zip(&other.data) {
            inter += (*a && *b) as usize;
            union += (*a || *b) as usize;
        }
        Ok(if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        })
    }
}
