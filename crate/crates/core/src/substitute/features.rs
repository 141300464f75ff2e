use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{dct8_block, idct8_block, Image, LUMA_WEIGHTS};
use crate::watermark::zigzag;

/// Hand-crafted, pixel-differentiable feature map: a box-downsampled luma
/// thumbnail followed by the mean `|DCT8|` magnitude of the first `dct_k`
/// zig-zag frequencies, standardized with constants frozen at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub downsample: usize,
    pub dct_k: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self::new(32, 64)
    }
}

impl FeatureSpec {
    /// Unfitted spec (identity normalization).
    pub fn new(downsample: usize, dct_k: usize) -> Self {
        let d = downsample * downsample + dct_k;
        Self {
            downsample,
            dct_k,
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.downsample * self.downsample + self.dct_k
    }

    pub fn validate(&self) -> Result<()> {
        if self.downsample == 0 {
            return Err(Error::param("downsample", "must be >= 1"));
        }
        if self.dct_k > 64 {
            return Err(Error::param("dct_k", "at most 64 frequencies"));
        }
        if self.mean.len() != self.dim() || self.std.len() != self.dim() {
            return Err(Error::param("normalization", "length differs from feature dimension"));
        }
        if self.mean.iter().any(|m| !m.is_finite())
            || self.std.iter().any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::param("normalization", "constants must be finite with std > 0"));
        }
        Ok(())
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        if img.width() < self.downsample.max(8) || img.height() < self.downsample.max(8) {
            return Err(Error::TooSmall {
                width: img.width(),
                height: img.height(),
                reason: format!("features need at least {}px per side", self.downsample.max(8)),
            });
        }
        Ok(())
    }

    /// Raw (unstandardized) features.
    pub fn raw(&self, img: &Image) -> Result<Vec<f64>> {
        self.check_image(img)?;
        let luma = img.luma();
        let (w, h) = (luma.width(), luma.height());
        let mut out = downsample(luma.data(), w, h, self.downsample);
        let mut mags = vec![0.0; self.dct_k];
        let offsets = freq_offsets(self.dct_k);
        let blocks = (w / 8) * (h / 8);
        for_each_block(luma.data(), w, h, |_, coeffs| {
            for (m, &o) in mags.iter_mut().zip(&offsets) {
                *m += coeffs[o].abs();
            }
        });
        out.extend(mags.into_iter().map(|m| m / blocks as f64));
        Ok(out)
    }

    /// Fit standardization constants on a set of raw feature vectors.
    pub fn fit(&mut self, raw: &[Vec<f64>]) -> Result<()> {
        if raw.is_empty() {
            return Err(Error::Empty("feature set"));
        }
        let d = self.dim();
        let n = raw.len() as f64;
        let mut mean = vec![0.0; d];
        for r in raw {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in raw {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        self.mean = mean;
        self.std = var.into_iter().map(|v| v.sqrt().max(1e-8)).collect();
        Ok(())
    }

    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Standardized features.
    pub fn features(&self, img: &Image) -> Result<Vec<f64>> {
        Ok(self.normalize(&self.raw(img)?))
    }

    /// Pull a gradient with respect to the standardized features back to the
    /// image pixels (interleaved channels, same layout as `img.data()`).
    pub fn pixel_gradient(&self, img: &Image, grad_feat: &[f64]) -> Result<Vec<f64>> {
        self.check_image(img)?;
        let luma = img.luma();
        let (w, h) = (luma.width(), luma.height());
        let nd = self.downsample * self.downsample;
        let g: Vec<f64> = grad_feat.iter().zip(&self.std).map(|(g, s)| g / s).collect();
        let mut gl = downsample_adjoint(&g[..nd], w, h, self.downsample);

        let offsets = freq_offsets(self.dct_k);
        let blocks = (w / 8) * (h / 8);
        let gm = &g[nd..];
        for_each_block(luma.data(), w, h, |(bx, by), coeffs| {
            let mut gc = [0.0; 64];
            for (&o, &gv) in offsets.iter().zip(gm) {
                gc[o] = sign(coeffs[o]) * gv / blocks as f64;
            }
            let gp = idct8_block(&gc);
            for r in 0..8 {
                for c in 0..8 {
                    gl[(by * 8 + r) * w + bx * 8 + c] += gp[r * 8 + c];
                }
            }
        });

        let ch = img.channels();
        if ch == 1 {
            return Ok(gl);
        }
        Ok(gl
            .iter()
            .flat_map(|&v| LUMA_WEIGHTS.iter().map(move |wt| wt * v))
            .collect())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn freq_offsets(k: usize) -> Vec<usize> {
    zigzag()[..k].iter().map(|&(r, c)| r * 8 + c).collect()
}

fn for_each_block(data: &[f64], w: usize, h: usize, mut f: impl FnMut((usize, usize), &[f64; 64])) {
    for by in 0..h / 8 {
        for bx in 0..w / 8 {
            let mut b = [0.0; 64];
            for r in 0..8 {
                b[r * 8..r * 8 + 8].copy_from_slice(&data[(by * 8 + r) * w + bx * 8..][..8]);
            }
            f((bx, by), &dct8_block(&b));
        }
    }
}

fn cell(i: usize, n: usize, d: usize) -> usize {
    i * d / n
}

/// Box-average to `d × d`; pixel `(x, y)` belongs to cell `(x·d/w, y·d/h)`.
fn downsample(data: &[f64], w: usize, h: usize, d: usize) -> Vec<f64> {
    let mut sum = vec![0.0; d * d];
    let mut count = vec![0usize; d * d];
    for y in 0..h {
        let cy = cell(y, h, d);
        for x in 0..w {
            let k = cy * d + cell(x, w, d);
            sum[k] += data[y * w + x];
            count[k] += 1;
        }
    }
    sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect()
}

fn downsample_adjoint(g: &[f64], w: usize, h: usize, d: usize) -> Vec<f64> {
    let mut count = vec![0usize; d * d];
    for y in 0..h {
        for x in 0..w {
            count[cell(y, h, d) * d + cell(x, w, d)] += 1;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let cy = cell(y, h, d);
        for x in 0..w {
            let k = cy * d + cell(x, w, d);
            out[y * w + x] = g[k] / count[k] as f64;
        }
    }
    out
}
