//! Post-attack mitigations: Gaussian blur and JPEG-style recompression.

use super::denoise::check_kernel;
use crate::error::{Error, Result};
use crate::image::{
    block_dct8, block_idct8, convolve_separable, gaussian_kernel, DimPolicy, Image, Plane,
};

/// Annex K luminance quantization table, row-major.
#[rustfmt::skip]
pub const LUMA_QUANT: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// σ used for a blur kernel of size `k`: `0.15k + 0.35`.
pub fn blur_sigma(k: usize) -> f64 {
    0.15 * k as f64 + 0.35
}

fn per_channel(img: &Image, f: impl Fn(&Plane) -> Result<Plane>) -> Result<Image> {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut out = vec![0.0; img.len()];
    for ch in 0..c {
        let plane = Plane::new(w, h, img.data().iter().skip(ch).step_by(c).copied().collect());
        for (i, v) in f(&plane)?.data().iter().enumerate() {
            out[i * c + ch] = v.clamp(0.0, 1.0);
        }
    }
    Image::new(w, h, c, out)
}

pub fn mitigate_blur(img: &Image, k: usize) -> Result<Image> {
    check_kernel(k)?;
    let kernel = gaussian_kernel(k, blur_sigma(k));
    per_channel(img, |p| Ok(convolve_separable(p, &kernel)))
}

/// Quality-scaled table: `scale = 5000/q` below 50, else `200 − 2q`;
/// entries `⌊(Q·scale + 50)/100⌋` clamped to `[1, 255]`.
pub fn quant_table(quality: u32) -> Result<[f64; 64]> {
    if !(1..=100).contains(&quality) {
        return Err(Error::param("quality", format!("{quality} not in [1, 100]")));
    }
    let scale = if quality < 50 {
        5000 / quality
    } else {
        200 - 2 * quality
    };
    Ok(LUMA_QUANT.map(|q| ((u32::from(q) * scale + 50) / 100).clamp(1, 255) as f64))
}

/// Per-channel 8×8 DCT quantization round trip on 0–255 level-shifted
/// samples (the lossy core of baseline JPEG, without chroma subsampling or
/// entropy coding).
pub fn mitigate_jpeg(img: &Image, quality: u32) -> Result<Image> {
    let table = quant_table(quality)?;
    per_channel(img, |p| {
        let shifted = Plane::new(
            p.width(),
            p.height(),
            p.data().iter().map(|v| v * 255.0 - 128.0).collect(),
        );
        let mut blocks = block_dct8(&shifted, DimPolicy::Pad)?;
        for b in 0..blocks.block_count() {
            for (c, q) in blocks.block_mut(b).iter_mut().zip(&table) {
                *c = (*c / q).round() * q;
            }
        }
        let back = block_idct8(&blocks);
        Ok(Plane::new(
            back.width(),
            back.height(),
            back.data().iter().map(|v| (v + 128.0) / 255.0).collect(),
        ))
    })
}
