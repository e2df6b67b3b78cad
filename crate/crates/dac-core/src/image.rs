use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major RGB image with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Image {
        Image {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Image {
        let mut img = Image::new(width, height);
        for px in img.data.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        img
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Result<Image> {
        if data.len() != width * height * 3 {
            return Err(Error::Invalid("pixel buffer length does not match image size".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("image contains non-finite values".into()));
        }
        Ok(Image { width, height, data })
    }

    /// Dequantizes 8-bit RGB samples.
    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Image> {
        Image::from_raw(width, height, bytes.iter().map(|&b| b as f64 / 255.0).collect())
    }

    /// Quantizes to 8-bit RGB with round-to-nearest.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0 + 0.5) as u8)
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Single channel as a row-major plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    pub fn same_shape(&self, o: &Image) -> Result<()> {
        if self.width != o.width || self.height != o.height {
            return Err(Error::ShapeMismatch(self.width, self.height, o.width, o.height));
        }
        Ok(())
    }
}
