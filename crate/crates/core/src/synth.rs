//! Deterministic synthetic "natural-statistics" images: a smooth gradient,
//! a few soft-edged shapes and band-limited noise texture.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::image::{convolve_separable, gaussian_kernel, Image, Plane};
use crate::rng::{chacha, derive_indexed};

pub const DEFAULT_SIZE: usize = 256;

pub fn synth_image(seed: u64, width: usize, height: usize, channels: usize) -> Result<Image> {
    let mut rng = chacha(seed);
    let (w, h) = (width as f64, height as f64);
    let mut plane = Plane::zeros(width, height);

    let base = rng.random_range(0.35..0.65);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let amp = rng.random_range(0.05..0.25);
    let (dx, dy) = (angle.cos(), angle.sin());
    for y in 0..height {
        for x in 0..width {
            let u = (x as f64 / w - 0.5) * dx + (y as f64 / h - 0.5) * dy;
            plane.set(x, y, base + amp * u);
        }
    }

    let shapes = rng.random_range(2..=4);
    for _ in 0..shapes {
        let cx = rng.random_range(0.1..0.9) * w;
        let cy = rng.random_range(0.1..0.9) * h;
        let size = rng.random_range(0.08..0.3) * w.min(h);
        let level = rng.random_range(0.05..0.25) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let soft = rng.random_range(1.0..3.0);
        let is_rect = rng.random_bool(0.5);
        let aspect = rng.random_range(0.5..1.5);
        for y in 0..height {
            for x in 0..width {
                let (px, py) = (x as f64 - cx, (y as f64 - cy) * aspect);
                // signed distance to the boundary (negative inside)
                let d = if is_rect {
                    px.abs().max(py.abs()) - size
                } else {
                    (px * px + py * py).sqrt() - size
                };
                let inside = 1.0 / (1.0 + (d / soft).exp());
                let v = plane.at(x, y) + level * inside;
                plane.set(x, y, v);
            }
        }
    }

    let blur: f64 = rng.random_range(1.0..4.0);
    let tex_amp = rng.random_range(0.01..0.06);
    let noise: Vec<f64> = (0..width * height)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let size = 2 * (3.0 * blur).ceil() as usize + 1;
    let texture = convolve_separable(&Plane::new(width, height, noise), &gaussian_kernel(size, blur));
    let tex_std = (texture.data().iter().map(|v| v * v).sum::<f64>()
        / texture.data().len() as f64)
        .sqrt()
        .max(1e-12);
    for (p, t) in plane.data_mut().iter_mut().zip(texture.data()) {
        *p += tex_amp * t / tex_std;
    }

    // keep the mean in [0.35, 0.65] before clamping
    let mean = plane.data().iter().sum::<f64>() / plane.data().len() as f64;
    let shift = mean.clamp(0.35, 0.65) - mean;
    let data: Vec<f64> = plane.data().iter().map(|v| (v + shift).clamp(0.0, 1.0)).collect();

    if channels == 1 {
        return Image::new(width, height, 1, data);
    }
    let tint: [f64; 3] = [
        rng.random_range(-0.08..0.08),
        rng.random_range(-0.08..0.08),
        rng.random_range(-0.08..0.08),
    ];
    let mut rgb: Vec<f64> = data
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| {
            let (x, y) = ((i % width) as f64 / w, (i / width) as f64 / h);
            let wave = [x - 0.5, y - 0.5, 0.5 - x];
            (0..3).map(move |c| v + tint[c] + 0.1 * wave[c])
        })
        .collect();
    let count = (width * height) as f64;
    for c in 0..3 {
        let mean = rgb.iter().skip(c).step_by(3).sum::<f64>() / count;
        let shift = mean.clamp(0.35, 0.65) - mean;
        for v in rgb.iter_mut().skip(c).step_by(3) {
            *v = (*v + shift).clamp(0.0, 1.0);
        }
    }
    Image::new(width, height, channels, rgb)
}

/// `n` images; image `i` uses a seed derived from `(seed, "synth", i)`.
pub fn synth_corpus(n: usize, seed: u64, size: usize, channels: usize) -> Result<Vec<Image>> {
    (0..n)
        .map(|i| synth_image(derive_indexed(seed, "synth", i as u64), size, size, channels))
        .collect()
}
