//! Image, mask and color-space primitives.
//!
//! Pixel grids are row-major with the origin at the top-left corner, `x`
//! growing rightward and `y` downward.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixels above this value are foreground when a mask is loaded.
pub const MASK_THRESHOLD: u8 = 127;

/// An 8-bit raster with 1 (gray) or 3 (interleaved RGB) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidRaster(format!(
                "{channels} channels (expected 1 or 3)"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::InvalidRaster(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn gray(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    pub fn rgb(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 3, data)
    }

    /// Builds a gray raster from a per-pixel function of `(x, y)`.
    pub fn from_fn_gray(width: u32, height: u32, f: impl Fn(u32, u32) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::gray(width, height, data)
    }

    /// Builds an RGB raster from a per-pixel function of `(x, y)`.
    pub fn from_fn_rgb(width: u32, height: u32, f: impl Fn(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::rgb(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    /// Channel values of the pixel at `(x, y)`.
    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let c = self.channels as usize;
        let i = (y as usize * self.width as usize + x as usize) * c;
        &self.data[i..i + c]
    }

    /// RGB view of every pixel; gray pixels are expanded to `R = G = B`.
    pub fn rgb_pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        let c = self.channels as usize;
        self.data.chunks_exact(c).map(move |p| {
            if c == 1 {
                [p[0], p[0], p[0]]
            } else {
                [p[0], p[1], p[2]]
            }
        })
    }

    /// Grayscale copy with ITU-R BT.601 luma weights, rounded half-up.
    /// Gray input is returned unchanged.
    pub fn to_grayscale(&self) -> Raster {
        if self.is_gray() {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| luma(p[0], p[1], p[2]))
            .collect();
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Per-pixel HSV triples. Gray rasters are treated as achromatic RGB.
    pub fn to_hsv(&self) -> Vec<Hsv> {
        self.rgb_pixels()
            .map(|[r, g, b]| rgb_to_hsv(r, g, b))
            .collect()
    }

    /// 90° clockwise rotation of the whole canvas.
    pub fn rotate90(&self) -> Raster {
        let (w, h, c) = (
            self.width as usize,
            self.height as usize,
            self.channels as usize,
        );
        let mut data = vec![0u8; self.data.len()];
        for y in 0..h {
            for x in 0..w {
                // (x, y) -> (h - 1 - y, x) on a h x w canvas
                let nx = h - 1 - y;
                let ny = x;
                let src = (y * w + x) * c;
                let dst = (ny * h + nx) * c;
                data[dst..dst + c].copy_from_slice(&self.data[src..src + c]);
            }
        }
        Raster {
            width: self.height,
            height: self.width,
            channels: self.channels,
            data,
        }
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        if self.is_gray() {
            DynamicImage::ImageLuma8(
                GrayImage::from_raw(self.width, self.height, self.data.clone())
                    .expect("raster invariant guarantees buffer size"),
            )
        } else {
            DynamicImage::ImageRgb8(
                image::RgbImage::from_raw(self.width, self.height, self.data.clone())
                    .expect("raster invariant guarantees buffer size"),
            )
        }
    }

    pub fn from_dynamic(img: DynamicImage) -> Result<Raster> {
        match img {
            DynamicImage::ImageLuma8(g) => {
                let (w, h) = g.dimensions();
                Raster::gray(w, h, g.into_raw())
            }
            DynamicImage::ImageLumaA8(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_) => {
                let g = img.to_luma8();
                let (w, h) = g.dimensions();
                Raster::gray(w, h, g.into_raw())
            }
            other => {
                let rgb = other.to_rgb8();
                let (w, h) = rgb.dimensions();
                Raster::rgb(w, h, rgb.into_raw())
            }
        }
    }

    /// Writes the raster as PNG.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_dynamic()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| image_error(path, e))
    }
}

/// BT.601 luma, `round(0.299 R + 0.587 G + 0.114 B)` with halves rounded up.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    // Fixed-point in thousandths keeps the rounding exact.
    let v = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((v + 500) / 1000).min(255) as u8
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// Hexcone RGB → HSV. Achromatic pixels get `h = 0, s = 0`.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> Hsv {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = max as f64 / 255.0;
    if max == min {
        return Hsv { h: 0.0, s: 0.0, v };
    }
    let delta = (max - min) as f64;
    let s = delta / max as f64;
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let mut h = if max as f64 == r {
        60.0 * ((g - b) / delta)
    } else if max as f64 == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    Hsv { h, s, v }
}

/// Inverse of [`rgb_to_hsv`], returning channels in `[0, 1]`.
pub fn hsv_to_rgb(hsv: Hsv) -> [f64; 3] {
    let c = hsv.v * hsv.s;
    let hp = (hsv.h / 60.0).rem_euclid(6.0);
    let x = c * (1.0 - ((hp % 2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = hsv.v - c;
    [r + m, g + m, b + m]
}

/// A binary segmentation mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidRaster(format!(
                "mask length {} != {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![false; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Binarizes a gray raster with the `> 127` rule.
    pub fn from_gray(raster: &Raster) -> Mask {
        let gray = raster.to_grayscale();
        Mask {
            width: gray.width,
            height: gray.height,
            data: gray.data.iter().map(|&p| p > MASK_THRESHOLD).collect(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    pub fn same_dims(&self, other: &Mask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        Ok(())
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&v| if v { 255 } else { 0 }).collect(),
        }
    }

    /// Writes the mask as a 0/255 gray PNG.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_raster().save_png(path)
    }
}

/// Per-pixel edge flags, stored as 0 or 255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl EdgeMap {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidRaster(format!(
                "edge map length {} != {width}x{height}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|&&v| v != 0 && v != 255) {
            return Err(Error::InvalidRaster(format!(
                "edge value {v} not in {{0, 255}}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub(crate) fn from_flags(width: u32, height: u32, flags: &[bool]) -> Self {
        Self {
            width,
            height,
            data: flags.iter().map(|&f| if f { 255 } else { 0 }).collect(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_edge(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize] == 255
    }

    pub fn edge_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 255).count()
    }
}

fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        image::ImageError::Unsupported(_) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
        },
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Decodes a PNG or JPEG file into a gray or RGB raster.
pub fn load_image(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Jpeg) => {}
        _ => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
            })
        }
    }
    let img = reader.decode().map_err(|e| image_error(path, e))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            message: "zero-dimension image".into(),
        });
    }
    Raster::from_dynamic(img)
}

/// Loads a mask image and binarizes it (`pixel > 127` is foreground).
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    Ok(Mask::from_gray(&load_image(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_examples() {
        let white = Raster::rgb(1, 1, vec![255, 255, 255]).unwrap();
        assert_eq!(white.to_grayscale().data(), &[255]);
        let black = Raster::rgb(1, 1, vec![0, 0, 0]).unwrap();
        assert_eq!(black.to_grayscale().data(), &[0]);
        let red = Raster::rgb(1, 1, vec![255, 0, 0]).unwrap();
        assert_eq!(red.to_grayscale().data(), &[76]);
    }

    #[test]
    fn grayscale_idempotent_on_gray() {
        let g = Raster::gray(2, 1, vec![3, 250]).unwrap();
        assert_eq!(g.to_grayscale(), g);
        assert_eq!(g.to_grayscale().to_grayscale(), g);
    }

    #[test]
    fn hsv_examples() {
        let red = rgb_to_hsv(255, 0, 0);
        assert_eq!((red.h, red.s, red.v), (0.0, 1.0, 1.0));
        let gray = rgb_to_hsv(128, 128, 128);
        assert_eq!((gray.h, gray.s), (0.0, 0.0));
        assert!((gray.v - 0.502).abs() < 1e-3);
        let cyan = rgb_to_hsv(0, 255, 255);
        assert_eq!((cyan.h, cyan.s, cyan.v), (180.0, 1.0, 1.0));
    }

    #[test]
    fn invalid_rasters_rejected() {
        assert!(Raster::gray(0, 1, vec![]).is_err());
        assert!(Raster::gray(2, 2, vec![0; 3]).is_err());
        assert!(Raster::new(1, 1, 2, vec![0; 2]).is_err());
        assert!(EdgeMap::new(1, 1, vec![7]).is_err());
    }

    #[test]
    fn rotate90_moves_top_left_to_top_right() {
        let r = Raster::gray(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let rot = r.rotate90();
        assert_eq!((rot.width(), rot.height()), (2, 3));
        assert_eq!(rot.data(), &[4, 1, 5, 2, 6, 3]);
        assert_eq!(r.rotate90().rotate90().rotate90().rotate90(), r);
    }

    #[test]
    fn load_white_png() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.png");
        Raster::gray(2, 2, vec![255; 4])
            .unwrap()
            .save_png(&p)
            .unwrap();
        let r = load_image(&p).unwrap();
        assert_eq!((r.width(), r.height(), r.channels()), (2, 2, 1));
        assert!(r.data().iter().all(|&v| v == 255));
    }

    #[test]
    fn mask_threshold_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        Raster::gray(2, 1, vec![0, 200])
            .unwrap()
            .save_png(&p)
            .unwrap();
        let m = load_mask(&p).unwrap();
        assert_eq!(m.data(), &[false, true]);
    }

    #[test]
    fn mask_save_load_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let m = Mask::from_fn(5, 4, |x, y| (x + y) % 3 == 0).unwrap();
        m.save_png(&p).unwrap();
        let once = load_mask(&p).unwrap();
        once.save_png(&p).unwrap();
        let twice = load_mask(&p).unwrap();
        assert_eq!(once, m);
        assert_eq!(twice, once);
    }

    #[test]
    fn truncated_file_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.png");
        Raster::gray(8, 8, vec![9; 64])
            .unwrap()
            .save_png(&p)
            .unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        let err = load_image(&p).unwrap_err();
        assert!(err.to_string().contains("t.png"), "{err}");
    }

    #[test]
    fn non_image_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        std::fs::write(&p, b"hello world").unwrap();
        assert!(load_image(&p).is_err());
    }
}
