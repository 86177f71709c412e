//! RGB images as `[0,1]` intensity grids.

use std::path::{Path, PathBuf};

use super::yolo::BoxCorners;
use crate::error::{Error, Result};
use crate::grid::resize_bilinear;

/// Side length health models expect.
pub const MODEL_IMAGE_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    /// Row-major `H × W × 3`.
    pixels: Vec<f64>,
    height: usize,
    width: usize,
    source: PathBuf,
}

impl ImageSample {
    pub fn new(pixels: Vec<f64>, height: usize, width: usize, source: impl Into<PathBuf>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyInput(format!("image of {height}x{width}")));
        }
        if pixels.len() != height * width * 3 {
            return Err(Error::shape(format!(
                "{} values for a {height}x{width}x3 image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Domain("image intensities must lie in [0, 1]".into()));
        }
        Ok(Self {
            pixels,
            height,
            width,
            source: source.into(),
        })
    }

    pub fn from_rgb8(img: &image::RgbImage, source: impl Into<PathBuf>) -> Result<Self> {
        let pixels = img.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
        Self::new(pixels, img.height() as usize, img.width() as usize, source)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn source(&self) -> &Path {
        &self.source
    }

    pub fn at(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.pixels[(row * self.width + col) * 3 + channel]
    }

    fn plane(&self, c: usize) -> Vec<f64> {
        self.pixels.iter().skip(c).step_by(3).copied().collect()
    }

    pub fn resize(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param(format!("resize target {rows}x{cols}")));
        }
        let planes: Vec<Vec<f64>> = (0..3)
            .map(|c| resize_bilinear(&self.plane(c), self.height, self.width, rows, cols))
            .collect();
        let mut pixels = vec![0.0; rows * cols * 3];
        for (c, p) in planes.iter().enumerate() {
            for (i, v) in p.iter().enumerate() {
                pixels[i * 3 + c] = v.clamp(0.0, 1.0);
            }
        }
        Self::new(pixels, rows, cols, self.source.clone())
    }

    /// Channels-first copy, `[3, H, W]` flattened.
    pub fn to_chw(&self) -> Vec<f64> {
        (0..3).flat_map(|c| self.plane(c)).collect()
    }

    /// Pixels whose centers fall inside the box. Errors if none do.
    pub fn crop(&self, b: &BoxCorners) -> Result<Self> {
        let c0 = (b.x1 - 0.5).ceil().max(0.0) as usize;
        let r0 = (b.y1 - 0.5).ceil().max(0.0) as usize;
        let c1 = ((b.x2 - 0.5).floor() + 1.0).clamp(0.0, self.width as f64) as usize;
        let r1 = ((b.y2 - 0.5).floor() + 1.0).clamp(0.0, self.height as f64) as usize;
        if c1 <= c0 || r1 <= r0 {
            return Err(Error::EmptyInput(format!("crop {b:?} covers no pixel centers")));
        }
        let mut pixels = Vec::with_capacity((r1 - r0) * (c1 - c0) * 3);
        for r in r0..r1 {
            let s = (r * self.width + c0) * 3;
            pixels.extend_from_slice(&self.pixels[s..s + (c1 - c0) * 3]);
        }
        Self::new(pixels, r1 - r0, c1 - c0, self.source.clone())
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let raw = self.pixels.iter().map(|v| (v * 255.0).round() as u8).collect();
        image::RgbImage::from_raw(self.width as u32, self.height as u32, raw).expect("buffer size matches")
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb8()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))
    }
}

/// Decodes a PNG or JPEG file.
pub fn load_image(path: &Path) -> Result<ImageSample> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::Unsupported(format!("{}: {u}", path.display())),
        other => Error::Format(format!("{}: {other}", path.display())),
    })?;
    ImageSample::from_rgb8(&img.to_rgb8(), path)
}

/// Decodes and resizes to the square model input size.
pub fn load_model_image(path: &Path, size: usize) -> Result<ImageSample> {
    let img = load_image(path)?;
    if img.height() == size && img.width() == size {
        Ok(img)
    } else {
        img.resize(size, size)
    }
}
