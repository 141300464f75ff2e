use rand_distr::{Distribution, StandardNormal};

use super::denoise::Denoiser;
use super::schedule::DiffusionSchedule;
use crate::error::{Error, Result};
use crate::image::{Image, Plane};
use crate::rng::chacha;

/// Forward-noise `img` to diffusion step `round(t · n_steps)`, rescale by
/// `1/√ᾱ` and denoise each channel; the result is clamped to `[0, 1]`.
///
/// Noise is drawn once from `seed`, so reusing a seed across `t` values
/// scales the same noise field.
pub fn purify(
    img: &Image,
    sched: &DiffusionSchedule,
    t: f64,
    den: &Denoiser,
    seed: u64,
) -> Result<Image> {
    let mut rng = chacha(seed);
    let noise: Vec<f64> = (0..img.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    purify_with_noise(img, sched, t, den, &noise)
}

/// [`purify`] with an explicit standard-normal field `noise` (same length as
/// the image data).
pub fn purify_with_noise(
    img: &Image,
    sched: &DiffusionSchedule,
    t: f64,
    den: &Denoiser,
    noise: &[f64],
) -> Result<Image> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::param("t", format!("{t} is outside (0, 1)")));
    }
    let k = sched.step_for(t);
    if k == 0 {
        return Err(Error::param("t", format!("{t} rounds to step 0")));
    }
    if noise.len() != img.len() {
        return Err(Error::ShapeMismatch(format!(
            "noise has {} samples, image {}",
            noise.len(),
            img.len()
        )));
    }
    den.validate()?;
    let ab = sched.alphas_bar()[k];
    let (sa, sn) = (ab.sqrt(), (1.0 - ab).sqrt());
    // x_t / √ᾱ
    let rescaled: Vec<f64> = img
        .data()
        .iter()
        .zip(noise)
        .map(|(&x, &e)| (sa * x + sn * e) / sa)
        .collect();
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut out = vec![0.0; img.len()];
    for ch in 0..c {
        let plane = Plane::new(w, h, rescaled.iter().skip(ch).step_by(c).copied().collect());
        let den_plane = den.apply(&plane)?;
        for (i, v) in den_plane.data().iter().enumerate() {
            out[i * c + ch] = v.clamp(0.0, 1.0);
        }
    }
    Image::new(w, h, c, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::synth_image;

    #[test]
    fn zero_noise_identity_is_exact() {
        let img = synth_image(1, 32, 32, 3).unwrap();
        let sched = DiffusionSchedule::default();
        let out = purify_with_noise(&img, &sched, 0.2, &Denoiser::Identity, &vec![0.0; img.len()]).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn first_step_noise_std() {
        let img = Image::filled(128, 128, 1, 0.5).unwrap();
        let sched = DiffusionSchedule::default();
        let out = purify(&img, &sched, 0.001, &Denoiser::Identity, 9).unwrap();
        let std = out.std();
        assert!((std - 0.0283).abs() < 0.001, "{std}");
    }

    #[test]
    fn deterministic_and_validated() {
        let img = synth_image(2, 32, 32, 1).unwrap();
        let sched = DiffusionSchedule::default();
        let d = Denoiser::wavelet_default();
        assert_eq!(
            purify(&img, &sched, 0.2, &d, 5).unwrap(),
            purify(&img, &sched, 0.2, &d, 5).unwrap()
        );
        assert!(purify(&img, &sched, 0.0, &d, 5).is_err());
        assert!(purify(&img, &sched, 1.0, &d, 5).is_err());
        assert!(purify(&img, &sched, 0.0001, &d, 5).is_err());
    }
}
