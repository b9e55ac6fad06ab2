//! PNG and raw depth serialization of frame buffers.
//!
//! RCM and RGB buffers are 8-bit RGB PNGs, masks are 8-bit grayscale PNGs
//! holding 0 or 255, and depth is raw little-endian `f32` in row-major order
//! with a JSON sidecar `{"width", "height", "units": "model"}`.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};
use rcmkit_core::{DepthImage, GrayImage, Mask, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grayscale values at or above this count as foreground when loading masks.
pub const MASK_THRESHOLD: u8 = 128;

fn decode(path: &Path) -> Result<DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn encode(path: &Path, img: DynamicImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    img.write_to(&mut Cursor::new(&mut out), ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(out)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a PNG as 8-bit RGB; alpha is discarded.
pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    let img = decode(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let px = img.pixels().map(|p| p.0).collect();
    Ok(RgbImage::from_vec(w, h, px).expect("decoder returns w*h pixels"))
}

pub fn encode_rgb_png(path: &Path, img: &RgbImage) -> Result<Vec<u8>> {
    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, raw).expect("sized buffer");
    encode(path, DynamicImage::ImageRgb8(buf))
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    write_bytes(path, &encode_rgb_png(path, img)?)
}

/// RGBA PNG whose alpha is 255 on `mask` and 0 elsewhere.
pub fn encode_rgba_png(path: &Path, img: &RgbImage, mask: &Mask) -> Result<Vec<u8>> {
    let raw: Vec<u8> = img
        .pixels()
        .iter()
        .zip(mask.pixels())
        .flat_map(|(p, &m)| [p[0], p[1], p[2], if m { 255 } else { 0 }])
        .collect();
    let buf = image::RgbaImage::from_raw(img.width() as u32, img.height() as u32, raw).expect("sized buffer");
    encode(path, DynamicImage::ImageRgba8(buf))
}

/// Reads an RGBA PNG into color and an alpha-derived mask.
pub fn read_rgba_png(path: &Path) -> Result<(RgbImage, Mask)> {
    let img = decode(path)?.into_rgba8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let rgb = img.pixels().map(|p| [p.0[0], p.0[1], p.0[2]]).collect();
    let mask = img.pixels().map(|p| p.0[3] >= MASK_THRESHOLD).collect();
    Ok((
        RgbImage::from_vec(w, h, rgb).expect("decoder returns w*h pixels"),
        Mask::from_vec(w, h, mask).expect("decoder returns w*h pixels"),
    ))
}

pub fn read_gray_png(path: &Path) -> Result<GrayImage> {
    let img = decode(path)?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(GrayImage::from_vec(w, h, img.into_raw()).expect("decoder returns w*h pixels"))
}

/// Reads a mask PNG, thresholding its luma at [`MASK_THRESHOLD`].
pub fn read_mask_png(path: &Path) -> Result<Mask> {
    Ok(read_gray_png(path)?.map(|&v| v >= MASK_THRESHOLD))
}

pub fn encode_mask_png(path: &Path, mask: &Mask) -> Result<Vec<u8>> {
    let raw: Vec<u8> = mask.pixels().iter().map(|&m| if m { 255 } else { 0 }).collect();
    let buf = image::GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw).expect("sized buffer");
    encode(path, DynamicImage::ImageLuma8(buf))
}

pub fn write_mask_png(path: &Path, mask: &Mask) -> Result<()> {
    write_bytes(path, &encode_mask_png(path, mask)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub width: usize,
    pub height: usize,
    pub units: String,
}

pub fn encode_depth(depth: &DepthImage) -> Vec<u8> {
    depth.pixels().iter().flat_map(|d| d.to_le_bytes()).collect()
}

pub fn depth_sidecar_json(depth: &DepthImage) -> String {
    let side = DepthSidecar {
        width: depth.width(),
        height: depth.height(),
        units: "model".into(),
    };
    serde_json::to_string_pretty(&side).expect("plain struct serializes") + "\n"
}

/// Writes `raw_path` and its JSON sidecar.
pub fn write_depth(raw_path: &Path, sidecar_path: &Path, depth: &DepthImage) -> Result<()> {
    write_bytes(raw_path, &encode_depth(depth))?;
    write_bytes(sidecar_path, depth_sidecar_json(depth).as_bytes())
}

pub fn read_depth(raw_path: &Path, sidecar_path: &Path) -> Result<DepthImage> {
    let side: DepthSidecar = crate::json::read_json(sidecar_path)?;
    let bytes = fs::read(raw_path).map_err(|e| Error::io(raw_path, e))?;
    if bytes.len() != side.width * side.height * 4 {
        return Err(Error::Invalid(format!(
            "{}: expected {} bytes for {}x{} depth, found {}",
            raw_path.display(),
            side.width * side.height * 4,
            side.width,
            side.height,
            bytes.len()
        )));
    }
    let vals = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(DepthImage::from_vec(side.width, side.height, vals).expect("length checked"))
}
