//! Float raster images and the transform primitives built on them.

pub(crate) mod filter;
mod io;
mod svd;
mod transform;

pub use filter::{convolve_separable, gaussian_kernel};
pub use io::{encode_png, load_image, quantize_u8, save_image};
pub use svd::{svd_small, Matrix, Svd};
pub use transform::{
    block_dct8, block_idct8, dct8_matrix, haar_dwt, haar_idwt, DctBlocks, DimPolicy,
    HaarSubbands, Plane,
};
pub(crate) use transform::{dct8_block, idct8_block};

use crate::error::{Error, Result};

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Row-major, channel-interleaved float image with nominal range `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "{channels} channels (expected 1 or 3)"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Single-channel image from a function of `(x, y)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    /// Same geometry, new samples. Panics on length mismatch or non-finite data.
    pub fn with_data(&self, data: Vec<f64>) -> Image {
        Image::new(self.width, self.height, self.channels, data)
            .expect("with_data: geometry preserved")
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn clamped(&self) -> Image {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        (self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    /// Mean of channel `c`.
    pub fn channel_mean(&self, c: usize) -> f64 {
        let n = self.width * self.height;
        self.data.iter().skip(c).step_by(self.channels).sum::<f64>() / n as f64
    }

    /// BT.601 luma plane (a copy for grayscale input).
    pub fn luma(&self) -> Plane {
        let data = if self.channels == 1 {
            self.data.clone()
        } else {
            self.data
                .chunks_exact(3)
                .map(|p| LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2])
                .collect()
        };
        Plane::new(self.width, self.height, data)
    }

    /// Add a luma-plane delta to every channel. Since the luma weights sum to
    /// one this shifts luma by exactly `delta` and leaves colour differences
    /// unchanged. The result is not clamped.
    pub fn add_luma_delta(&self, delta: &Plane) -> Image {
        assert_eq!(delta.width(), self.width);
        assert_eq!(delta.height(), self.height);
        let c = self.channels;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| v + delta.data()[i / c])
            .collect();
        self.with_data(data)
    }

    /// Replace the luma of this image with `luma`, preserving chroma.
    pub fn with_luma(&self, luma: &Plane) -> Image {
        let current = self.luma();
        let delta: Vec<f64> = luma
            .data()
            .iter()
            .zip(current.data())
            .map(|(a, b)| a - b)
            .collect();
        self.add_luma_delta(&Plane::new(self.width, self.height, delta))
    }

    pub fn from_plane(plane: &Plane) -> Result<Image> {
        Image::new(plane.width(), plane.height(), 1, plane.data().to_vec())
    }

    /// Euclidean distance in the native `[0, 1]` scale.
    pub fn l2_distance(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_geometry_and_values() {
        assert!(Image::new(0, 2, 1, vec![]).is_err());
        assert!(Image::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(Image::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(Image::new(1, 1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn luma_delta_preserves_chroma() {
        let img = Image::new(1, 1, 3, vec![0.2, 0.5, 0.9]).unwrap();
        let out = img.add_luma_delta(&Plane::new(1, 1, vec![0.1]));
        let before = img.luma().data()[0];
        let after = out.luma().data()[0];
        assert!((after - before - 0.1).abs() < 1e-12);
        // colour differences R-Y and B-Y unchanged
        assert!(((out.data()[0] - after) - (img.data()[0] - before)).abs() < 1e-12);
        assert!(((out.data()[2] - after) - (img.data()[2] - before)).abs() < 1e-12);
    }

    #[test]
    fn with_luma_sets_luma() {
        let img = Image::new(2, 1, 3, vec![0.2, 0.5, 0.9, 0.1, 0.1, 0.1]).unwrap();
        let target = Plane::new(2, 1, vec![0.4, 0.3]);
        let out = img.with_luma(&target);
        for (a, b) in out.luma().data().iter().zip(target.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
