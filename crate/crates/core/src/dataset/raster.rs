//! On-disk raster codecs: `.dfd` float depth and 8-bit PNG color / mask.
//!
//! A `.dfd` file is a 16-byte little-endian header (`DFD1`, u32 width,
//! u32 height, f32 depth scale) followed by `width * height` f32 values in
//! row-major order. Invalid pixels are stored as quiet NaN.

use std::path::Path;

use image::{GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::{ColorFrame, DepthFrame, Mask};

pub const DFD_MAGIC: &[u8; 4] = b"DFD1";
const DFD_HEADER_LEN: usize = 16;

pub fn encode_dfd(depth: &DepthFrame) -> Vec<u8> {
    let mut buf = Vec::with_capacity(DFD_HEADER_LEN + depth.data().len() * 4);
    buf.extend_from_slice(DFD_MAGIC);
    buf.extend_from_slice(&(depth.width() as u32).to_le_bytes());
    buf.extend_from_slice(&(depth.height() as u32).to_le_bytes());
    buf.extend_from_slice(&depth.unit_scale().to_le_bytes());
    for d in depth.data() {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    buf
}

pub fn decode_dfd(bytes: &[u8]) -> std::result::Result<DepthFrame, String> {
    if bytes.len() < DFD_HEADER_LEN {
        return Err(format!("file too short ({} bytes)", bytes.len()));
    }
    if &bytes[..4] != DFD_MAGIC {
        return Err("bad magic".into());
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    let width = u32::from_le_bytes(word(4)) as usize;
    let height = u32::from_le_bytes(word(8)) as usize;
    let unit_scale = f32::from_le_bytes(word(12));
    let expected = DFD_HEADER_LEN + width * height * 4;
    if bytes.len() != expected {
        return Err(format!(
            "{}x{} raster needs {} bytes, file has {}",
            width,
            height,
            expected,
            bytes.len()
        ));
    }
    let data = bytes[DFD_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    DepthFrame::new(width, height, unit_scale, data).map_err(|e| e.to_string())
}

pub fn write_dfd(path: &Path, depth: &DepthFrame) -> Result<()> {
    std::fs::write(path, encode_dfd(depth)).map_err(|e| Error::io(path, e))
}

pub fn read_dfd(path: &Path) -> Result<DepthFrame> {
    let bytes = std::fs::read(path).map_err(|e| Error::integrity(path, e))?;
    decode_dfd(&bytes).map_err(|reason| Error::integrity(path, reason))
}

pub fn write_color_png(path: &Path, color: &ColorFrame) -> Result<()> {
    let raw: Vec<u8> = color.data().iter().flatten().copied().collect();
    let img = RgbImage::from_raw(color.width() as u32, color.height() as u32, raw)
        .expect("buffer sized from frame");
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::integrity(path, e))
}

pub fn read_color_png(path: &Path) -> Result<ColorFrame> {
    let img = image::open(path).map_err(|e| Error::integrity(path, e))?;
    let img = match img {
        image::DynamicImage::ImageRgb8(rgb) => rgb,
        other => {
            return Err(Error::integrity(
                path,
                format!("expected 8-bit RGB, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0).collect();
    ColorFrame::new(w as usize, h as usize, data).map_err(|e| Error::integrity(path, e))
}

/// 255 = object, 0 = background.
pub fn write_mask_png(path: &Path, mask: &Mask) -> Result<()> {
    let raw: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw)
        .expect("buffer sized from mask");
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::integrity(path, e))
}

pub fn read_mask_png(path: &Path) -> Result<Mask> {
    let img = image::open(path).map_err(|e| Error::integrity(path, e))?;
    let img = match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(Error::integrity(
                path,
                format!("expected 8-bit gray mask, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = img.dimensions();
    let mut data = Vec::with_capacity((w * h) as usize);
    for p in img.pixels() {
        match p.0[0] {
            0 => data.push(false),
            255 => data.push(true),
            other => {
                return Err(Error::integrity(
                    path,
                    format!("mask value {other} is neither 0 nor 255"),
                ))
            }
        }
    }
    Mask::new(w as usize, h as usize, data).map_err(|e| Error::integrity(path, e))
}
