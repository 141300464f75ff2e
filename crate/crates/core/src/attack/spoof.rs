//! Watermark spoofing by blending watermarked noise into a clean image.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::{chacha, derive_indexed};
use crate::watermark::{embed, WatermarkKey, WatermarkScheme};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpoofConfig {
    pub mixup_alpha: f64,
    /// Range of the per-pixel noise standard deviation.
    pub noise_std: (f64, f64),
    pub seed: u64,
}

impl Default for SpoofConfig {
    fn default() -> Self {
        Self {
            mixup_alpha: 0.3,
            noise_std: (0.1, 0.5),
            seed: 0,
        }
    }
}

impl SpoofConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mixup_alpha > 0.0 && self.mixup_alpha <= 1.0) {
            return Err(Error::param("mixup_alpha", "must lie in (0, 1]"));
        }
        let (lo, hi) = self.noise_std;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::param("noise_std", "need 0 <= lo <= hi"));
        }
        Ok(())
    }
}

const MAX_REDRAWS: u64 = 16;

/// Random noise normalized to `[0, 1]`, watermarked, then scaled by
/// `mixup_alpha`. A degenerate (constant) draw is redrawn with the next
/// derived seed.
pub fn make_watermarked_noise(
    width: usize,
    height: usize,
    channels: usize,
    key: &WatermarkKey,
    scheme: &WatermarkScheme,
    cfg: &SpoofConfig,
) -> Result<Image> {
    cfg.validate()?;
    let n = width * height * channels;
    let (lo, hi) = cfg.noise_std;
    for attempt in 0..MAX_REDRAWS {
        let mut rng = chacha(derive_indexed(cfg.seed, "spoof-noise", attempt));
        let mut z: Vec<f64> = (0..n)
            .map(|_| {
                let std = if hi > lo { rng.random_range(lo..hi) } else { lo };
                let e: f64 = StandardNormal.sample(&mut rng);
                std * e
            })
            .collect();
        let min = z.iter().copied().fold(f64::INFINITY, f64::min);
        z.iter_mut().for_each(|v| *v -= min);
        let max = z.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            continue;
        }
        z.iter_mut().for_each(|v| *v /= max);
        let noise = Image::new(width, height, channels, z)?;
        let marked = embed(&noise, key, scheme)?;
        return Ok(marked.map(|v| cfg.mixup_alpha * v));
    }
    Err(Error::param(
        "noise_std",
        format!("noise was constant after {MAX_REDRAWS} draws"),
    ))
}

/// `γ·x/max(x) + z` with `γ = 1 − max(z)`. A black image returns `z`.
pub fn spoof(img: &Image, noise: &Image) -> Result<Image> {
    img.check_same_shape(noise)?;
    let gamma = 1.0 - noise.max();
    let xmax = img.max();
    if xmax <= 0.0 {
        return Ok(noise.clone());
    }
    let data = img
        .data()
        .iter()
        .zip(noise.data())
        .map(|(&x, &z)| (gamma * x / xmax + z).clamp(0.0, 1.0))
        .collect();
    Image::new(img.width(), img.height(), img.channels(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::watermark::{detect, SchemeKind};
    use proptest::prelude::*;

    fn ssdct() -> WatermarkScheme {
        WatermarkScheme::default_for(SchemeKind::SsDct)
    }

    #[test]
    fn noise_is_scaled_and_deterministic() {
        let key = WatermarkKey::from_seed(4);
        let cfg = SpoofConfig {
            mixup_alpha: 0.3,
            ..Default::default()
        };
        let z = make_watermarked_noise(64, 64, 1, &key, &ssdct(), &cfg).unwrap();
        assert!(z.min() >= 0.0 && z.max() <= 0.3 + 1e-12);
        assert_eq!(z, make_watermarked_noise(64, 64, 1, &key, &ssdct(), &cfg).unwrap());
    }

    #[test]
    fn watermark_survives_normalization() {
        let key = WatermarkKey::from_seed(4);
        let cfg = SpoofConfig::default();
        let z = make_watermarked_noise(256, 256, 1, &key, &ssdct(), &cfg).unwrap();
        let unscaled = z.map(|v| v / cfg.mixup_alpha);
        assert!(detect(&unscaled, &key, &ssdct()).unwrap().confidence >= 0.9);
    }

    #[test]
    fn black_image_and_alpha_one() {
        let key = WatermarkKey::from_seed(1);
        let cfg = SpoofConfig {
            mixup_alpha: 1.0,
            ..Default::default()
        };
        let z = make_watermarked_noise(32, 32, 1, &key, &ssdct(), &cfg).unwrap();
        let black = Image::filled(32, 32, 1, 0.0).unwrap();
        assert_eq!(spoof(&black, &z).unwrap(), z);
    }

    #[test]
    fn degenerate_noise_range_errors() {
        let key = WatermarkKey::from_seed(1);
        let cfg = SpoofConfig {
            noise_std: (0.0, 0.0),
            ..Default::default()
        };
        assert!(make_watermarked_noise(8, 8, 1, &key, &ssdct(), &cfg).is_err());
        assert!(SpoofConfig { mixup_alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(SpoofConfig { noise_std: (0.5, 0.1), ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn spoof_output_in_unit_range(
            seed in any::<u64>(),
            alpha in 0.01f64..=1.0,
            level in 0.0f64..=1.0,
        ) {
            let img = crate::synth::synth_image(seed, 16, 16, 1).unwrap().map(|v| v * level);
            let z = Image::new(16, 16, 1, {
                let mut r = chacha(seed ^ 1);
                (0..256).map(|_| alpha * r.random::<f64>()).collect()
            }).unwrap();
            let out = spoof(&img, &z).unwrap();
            prop_assert!(out.min() >= 0.0 && out.max() <= 1.0);
        }
    }
}
