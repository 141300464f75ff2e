use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::{convolve_separable, gaussian_kernel, Image, Plane};

const K1: f64 = 0.01;
const K2: f64 = 0.03;
const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// dB; `f64::INFINITY` for identical images.
    pub psnr: f64,
    pub ssim: f64,
    /// ℓ2 distance in the 0–255 scale.
    pub l2: f64,
}

pub fn quality(x: &Image, y: &Image) -> Result<QualityReport> {
    Ok(QualityReport {
        psnr: psnr(x, y)?,
        ssim: ssim(x, y)?,
        l2: 255.0 * x.l2_distance(y)?,
    })
}

/// `10 log₁₀(1 / MSE)` for unit-range images.
pub fn psnr(x: &Image, y: &Image) -> Result<f64> {
    x.check_same_shape(y)?;
    let mse = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}

/// Mean SSIM over all pixels and channels (Gaussian 11×11 window, σ = 1.5,
/// reflected borders).
pub fn ssim(x: &Image, y: &Image) -> Result<f64> {
    x.check_same_shape(y)?;
    if x == y {
        return Ok(1.0);
    }
    let c = x.channels();
    let mut total = 0.0;
    for ch in 0..c {
        let map = ssim_map(&channel(x, ch), &channel(y, ch));
        total += map.data().iter().sum::<f64>() / map.data().len() as f64;
    }
    Ok(total / c as f64)
}

fn channel(img: &Image, c: usize) -> Plane {
    let n = img.channels();
    Plane::new(
        img.width(),
        img.height(),
        img.data().iter().skip(c).step_by(n).copied().collect(),
    )
}

/// Per-pixel SSIM of two planes.
pub fn ssim_map(a: &Plane, b: &Plane) -> Plane {
    let k = gaussian_kernel(WINDOW, WINDOW_SIGMA);
    let prod = |p: &Plane, q: &Plane| {
        Plane::new(
            p.width(),
            p.height(),
            p.data().iter().zip(q.data()).map(|(u, v)| u * v).collect(),
        )
    };
    let mu_a = convolve_separable(a, &k);
    let mu_b = convolve_separable(b, &k);
    let aa = convolve_separable(&prod(a, a), &k);
    let bb = convolve_separable(&prod(b, b), &k);
    let ab = convolve_separable(&prod(a, b), &k);
    let (c1, c2) = ((K1 * K1), (K2 * K2));
    let data = (0..a.data().len())
        .map(|i| {
            let (ma, mb) = (mu_a.data()[i], mu_b.data()[i]);
            let va = aa.data()[i] - ma * ma;
            let vb = bb.data()[i] - mb * mb;
            let cov = ab.data()[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect();
    Plane::new(a.width(), a.height(), data)
}
