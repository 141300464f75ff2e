use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::cross_entropy;
use super::train::SubstituteClassifier;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::{roc, RocCurve};
use crate::rng::chacha;
use crate::watermark::{detect, WatermarkKey, WatermarkScheme};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PgdConfig {
    /// ℓ∞ budget in `[0, 1]` pixel units.
    pub epsilon: f64,
    pub steps: usize,
    /// Defaults to `0.05 · epsilon` when `None`.
    pub step_size: Option<f64>,
    pub warm_start: bool,
    /// Images attacked first (results discarded) to prime the warm start.
    pub warmup_count: usize,
}

impl Default for PgdConfig {
    fn default() -> Self {
        Self {
            epsilon: 8.0 / 255.0,
            steps: 300,
            step_size: None,
            warm_start: true,
            warmup_count: 10,
        }
    }
}

impl PgdConfig {
    pub fn step(&self) -> f64 {
        self.step_size.unwrap_or(0.05 * self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::param("epsilon", "must lie in [0, 1]"));
        }
        if self.steps == 0 {
            return Err(Error::param("steps", "must be >= 1"));
        }
        let s = self.step();
        if self.epsilon > 0.0 && !(s > 0.0 && s <= self.epsilon) {
            return Err(Error::param("step_size", "need 0 < step_size <= epsilon"));
        }
        Ok(())
    }
}

/// Sign-gradient PGD in the `ℓ∞` ball of radius `epsilon` around `img`,
/// intersected with `[0, 1]`. The cross-entropy toward `target_label` is
/// minimized (so the attack pushes predictions to that class). `init`
/// seeds the perturbation (projected into the feasible box first).
pub fn pgd_attack(
    img: &Image,
    clf: &SubstituteClassifier,
    cfg: &PgdConfig,
    target_label: usize,
    init: Option<&[f64]>,
) -> Result<(Image, Vec<f64>)> {
    cfg.validate()?;
    if target_label >= clf.net.classes() {
        return Err(Error::param("target_label", "out of range"));
    }
    let x0 = img.data();
    if cfg.epsilon == 0.0 {
        return Ok((img.clone(), vec![0.0; x0.len()]));
    }
    let eps = cfg.epsilon;
    let project = |x: &mut [f64]| {
        for (v, &o) in x.iter_mut().zip(x0) {
            *v = v.clamp((o - eps).max(0.0), (o + eps).min(1.0));
        }
    };
    let mut x: Vec<f64> = match init {
        Some(d) if d.len() == x0.len() => x0.iter().zip(d).map(|(a, b)| a + b).collect(),
        _ => x0.to_vec(),
    };
    project(&mut x);
    let step = cfg.step();
    for _ in 0..cfg.steps {
        let cur = img.with_data(x.clone());
        let feats = clf.spec.features(&cur)?;
        let trace = clf.net.trace_from(0, &feats);
        let (_, dlogits) = cross_entropy(&trace.logits, target_label);
        let gf = clf.net.backward(0, &trace, &dlogits, None);
        let gx = clf.spec.pixel_gradient(&cur, &gf)?;
        for (v, g) in x.iter_mut().zip(&gx) {
            if *g > 0.0 {
                *v -= step;
            } else if *g < 0.0 {
                *v += step;
            }
        }
        project(&mut x);
    }
    let delta: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
    Ok((img.with_data(x), delta))
}

/// Attack every image in order, carrying the perturbation from one image to
/// the next when `warm_start` is set. The first `warmup_count` images are
/// attacked once beforehand to prime the perturbation.
pub fn pgd_attack_batch(
    images: &[Image],
    clf: &SubstituteClassifier,
    cfg: &PgdConfig,
    target_label: usize,
) -> Result<Vec<Image>> {
    cfg.validate()?;
    let mut carry: Option<Vec<f64>> = None;
    if cfg.warm_start {
        for img in images.iter().take(cfg.warmup_count) {
            let (_, d) = pgd_attack(img, clf, cfg, target_label, carry.as_deref())?;
            carry = Some(d);
        }
    }
    let mut out = Vec::with_capacity(images.len());
    for img in images {
        let init = if cfg.warm_start { carry.as_deref() } else { None };
        let (adv, d) = pgd_attack(img, clf, cfg, target_label, init)?;
        carry = Some(d);
        out.push(adv);
    }
    Ok(out)
}

/// Uniform noise in `[−magnitude, magnitude]` per pixel, clamped to `[0, 1]`.
pub fn uniform_noise_attack(img: &Image, magnitude: f64, seed: u64) -> Image {
    let mut rng = chacha(seed);
    img.with_data(
        img.data()
            .iter()
            .map(|v| (v + rng.random_range(-1.0..=1.0) * magnitude).clamp(0.0, 1.0))
            .collect(),
    )
}

/// ROC of the keyed detector on attacked watermarked images (positives)
/// against clean images (negatives).
pub fn transfer_eval(
    attacked: &[Image],
    clean: &[Image],
    key: &WatermarkKey,
    scheme: &WatermarkScheme,
) -> Result<RocCurve> {
    if attacked.is_empty() || clean.is_empty() {
        return Err(Error::Empty("image set"));
    }
    let score = |set: &[Image]| -> Result<Vec<f64>> {
        set.iter()
            .map(|i| Ok(detect(i, key, scheme)?.confidence))
            .collect()
    };
    roc(&score(attacked)?, &score(clean)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chacha;
    use crate::substitute::{FeatureSpec, Mlp};
    use proptest::prelude::*;

    fn toy_classifier(seed: u64) -> SubstituteClassifier {
        let spec = FeatureSpec::new(4, 8);
        let net = Mlp::new(&[spec.dim(), 6, 2], &mut chacha(seed)).unwrap();
        SubstituteClassifier::new(spec, net, 1).unwrap()
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let img = crate::synth::synth_image(1, 16, 16, 1).unwrap();
        let clf = toy_classifier(1);
        let cfg = PgdConfig { epsilon: 0.0, ..Default::default() };
        let (adv, d) = pgd_attack(&img, &clf, &cfg, 0, None).unwrap();
        assert_eq!(adv, img);
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn attack_lowers_target_loss() {
        let img = crate::synth::synth_image(2, 16, 16, 1).unwrap();
        let clf = toy_classifier(2);
        let cfg = PgdConfig { epsilon: 0.05, steps: 40, ..Default::default() };
        let before = clf.score(&img).unwrap();
        let (adv, _) = pgd_attack(&img, &clf, &cfg, 1, None).unwrap();
        assert!(clf.score(&adv).unwrap() >= before);
    }

    #[test]
    fn config_rules() {
        assert!(PgdConfig { steps: 0, ..Default::default() }.validate().is_err());
        assert!(PgdConfig { step_size: Some(1.0), ..Default::default() }.validate().is_err());
        assert!((PgdConfig::default().step() - 0.05 * 8.0 / 255.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn stays_in_box(seed in any::<u64>(), eps in 0.001f64..0.2, target in 0usize..2) {
            let img = crate::synth::synth_image(seed, 16, 16, 1).unwrap();
            let clf = toy_classifier(seed ^ 7);
            let cfg = PgdConfig { epsilon: eps, steps: 8, step_size: Some(eps / 3.0), ..Default::default() };
            let (adv, d) = pgd_attack(&img, &clf, &cfg, target, None).unwrap();
            for ((a, o), dv) in adv.data().iter().zip(img.data()).zip(&d) {
                prop_assert!((0.0..=1.0).contains(a));
                prop_assert!((a - o).abs() <= eps + 1e-9);
                prop_assert!((a - o - dv).abs() < 1e-15);
            }
        }
    }
}
