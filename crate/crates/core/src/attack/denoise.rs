//! Classical denoisers used as the reverse step of purification.
//!
//! `WaveletShrink` and `TvChambolle` parameters are expressed in units of the
//! noise level estimated from the input (median absolute deviation of the
//! finest Haar diagonal band / 0.6745), so the same setting adapts to any
//! purification strength.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{convolve_separable, gaussian_kernel, haar_dwt, haar_idwt, DimPolicy, Plane};
use crate::image::filter::reflect_signed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Denoiser {
    Identity,
    GaussianBlur { size: usize, sigma: f64 },
    Median { size: usize },
    /// Soft-threshold every Haar detail band at `lambda · σ̂` (4 levels).
    WaveletShrink { lambda: f64 },
    /// ROF total-variation denoising with regularization `weight · σ̂`.
    TvChambolle { weight: f64, iters: usize },
}

impl Denoiser {
    pub fn wavelet_default() -> Self {
        Denoiser::WaveletShrink { lambda: 3.0 }
    }

    pub fn tv_default() -> Self {
        Denoiser::TvChambolle {
            weight: 1.0,
            iters: 50,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Denoiser::Identity => "identity",
            Denoiser::GaussianBlur { .. } => "gaussian_blur",
            Denoiser::Median { .. } => "median",
            Denoiser::WaveletShrink { .. } => "wavelet_shrink",
            Denoiser::TvChambolle { .. } => "tv_chambolle",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Denoiser::Identity => Ok(()),
            Denoiser::GaussianBlur { size, sigma } => {
                check_kernel(size)?;
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::param("sigma", "must be > 0"));
                }
                Ok(())
            }
            Denoiser::Median { size } => check_kernel(size),
            Denoiser::WaveletShrink { lambda } => {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::param("lambda", "must be >= 0"));
                }
                Ok(())
            }
            Denoiser::TvChambolle { weight, iters } => {
                if !(weight >= 0.0 && weight.is_finite()) {
                    return Err(Error::param("weight", "must be >= 0"));
                }
                if iters == 0 {
                    return Err(Error::param("iters", "must be >= 1"));
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, plane: &Plane) -> Result<Plane> {
        self.validate()?;
        Ok(match *self {
            Denoiser::Identity => plane.clone(),
            Denoiser::GaussianBlur { size, sigma } => {
                convolve_separable(plane, &gaussian_kernel(size, sigma))
            }
            Denoiser::Median { size } => median_filter(plane, size),
            Denoiser::WaveletShrink { lambda } => {
                let thr = lambda * estimate_noise_sigma(plane)?;
                wavelet_shrink(plane, thr, 4)?
            }
            Denoiser::TvChambolle { weight, iters } => {
                let w = weight * estimate_noise_sigma(plane)?;
                tv_chambolle(plane, w, iters)
            }
        })
    }
}

pub(crate) fn check_kernel(size: usize) -> Result<()> {
    if size < 3 || size % 2 == 0 {
        return Err(Error::param("size", format!("kernel size {size} must be odd and >= 3")));
    }
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    let mid = values.len() / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// MAD noise estimate from the finest Haar diagonal band.
pub fn estimate_noise_sigma(plane: &Plane) -> Result<f64> {
    let bands = haar_dwt(plane, DimPolicy::Pad)?;
    let mut mags: Vec<f64> = bands.hh.data().iter().map(|v| v.abs()).collect();
    Ok(median(&mut mags) / 0.6745)
}

fn soft(v: f64, thr: f64) -> f64 {
    if v > thr {
        v - thr
    } else if v < -thr {
        v + thr
    } else {
        0.0
    }
}

pub fn wavelet_shrink(plane: &Plane, threshold: f64, levels: usize) -> Result<Plane> {
    if levels == 0 || plane.width() < 2 || plane.height() < 2 {
        return Ok(plane.clone());
    }
    let mut bands = haar_dwt(plane, DimPolicy::Pad)?;
    for band in [&mut bands.lh, &mut bands.hl, &mut bands.hh] {
        for v in band.data_mut() {
            *v = soft(*v, threshold);
        }
    }
    bands.ll = wavelet_shrink(&bands.ll, threshold, levels - 1)?;
    Ok(haar_idwt(&bands))
}

/// Chambolle's dual projection for `min_u ½‖u − f‖² + weight · TV(u)`.
pub fn tv_chambolle(plane: &Plane, weight: f64, iters: usize) -> Plane {
    if weight <= 0.0 {
        return plane.clone();
    }
    let (w, h) = (plane.width(), plane.height());
    let n = w * h;
    let f = plane.data();
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut u = f.to_vec();
    let tau = 0.25;
    for it in 0..iters {
        if it > 0 {
            // u = f + div p (backward differences, Neumann boundary)
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    let mut d = -px[i] - py[i];
                    if x > 0 {
                        d += px[i - 1];
                    }
                    if y > 0 {
                        d += py[i - w];
                    }
                    u[i] = f[i] + d;
                }
            }
        }
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let gx = if x + 1 < w { u[i + 1] - u[i] } else { 0.0 };
                let gy = if y + 1 < h { u[i + w] - u[i] } else { 0.0 };
                let norm = 1.0 + tau / weight * (gx * gx + gy * gy).sqrt();
                px[i] = (px[i] - tau * gx) / norm;
                py[i] = (py[i] - tau * gy) / norm;
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut d = -px[i] - py[i];
            if x > 0 {
                d += px[i - 1];
            }
            if y > 0 {
                d += py[i - w];
            }
            u[i] = f[i] + d;
        }
    }
    Plane::new(w, h, u)
}

pub fn median_filter(plane: &Plane, size: usize) -> Plane {
    let (w, h) = (plane.width(), plane.height());
    let r = (size / 2) as isize;
    let mut out = Plane::zeros(w, h);
    let mut window = Vec::with_capacity(size * size);
    for y in 0..h {
        for x in 0..w {
            window.clear();
            for dy in -r..=r {
                let yy = reflect_signed(y as isize + dy, h);
                for dx in -r..=r {
                    window.push(plane.at(reflect_signed(x as isize + dx, w), yy));
                }
            }
            out.set(x, y, median(&mut window));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn noisy_step(sigma: f64, seed: u64) -> (Plane, Plane) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let clean = Plane::new(64, 64, (0..64 * 64).map(|i| if i % 64 < 32 { 0.3 } else { 0.7 }).collect());
        let noisy = Plane::new(
            64,
            64,
            clean
                .data()
                .iter()
                .map(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + sigma * z
                })
                .collect(),
        );
        (clean, noisy)
    }

    fn mse(a: &Plane, b: &Plane) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.data().len() as f64
    }

    #[test]
    fn noise_estimate_tracks_sigma() {
        let (_, noisy) = noisy_step(0.1, 1);
        let s = estimate_noise_sigma(&noisy).unwrap();
        assert!((s - 0.1).abs() < 0.01, "{s}");
    }

    #[test]
    fn denoisers_reduce_error() {
        let (clean, noisy) = noisy_step(0.1, 2);
        let base = mse(&clean, &noisy);
        for d in [
            Denoiser::wavelet_default(),
            Denoiser::tv_default(),
            Denoiser::Median { size: 3 },
            Denoiser::GaussianBlur { size: 5, sigma: 1.1 },
        ] {
            let out = d.apply(&noisy).unwrap();
            assert!(mse(&clean, &out) < 0.5 * base, "{}", d.name());
        }
    }

    #[test]
    fn constants_are_fixed_points() {
        let p = Plane::new(16, 16, vec![0.42; 256]);
        for d in [
            Denoiser::Identity,
            Denoiser::wavelet_default(),
            Denoiser::tv_default(),
            Denoiser::Median { size: 5 },
            Denoiser::GaussianBlur { size: 3, sigma: 0.8 },
        ] {
            let out = d.apply(&p).unwrap();
            assert!(out.data().iter().all(|v| (v - 0.42).abs() < 1e-12), "{}", d.name());
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(Denoiser::Median { size: 4 }.validate().is_err());
        assert!(Denoiser::Median { size: 1 }.validate().is_err());
        assert!(Denoiser::WaveletShrink { lambda: -1.0 }.validate().is_err());
        assert!(Denoiser::TvChambolle { weight: 1.0, iters: 0 }.validate().is_err());
    }
}
