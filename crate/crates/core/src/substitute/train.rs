use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::features::FeatureSpec;
use super::mlp::{softmax, Adam, Mlp};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::{chacha, derive_seed};

/// Class index of watermarked images.
pub const WATERMARKED: usize = 1;
/// Class index of clean images.
pub const CLEAN: usize = 0;
/// Minimum images per class accepted by [`train_classifier`].
pub const MIN_PER_CLASS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Hidden layer widths; input and output sizes are implied.
    pub hidden: Vec<usize>,
    /// Layers below this index form the latent map.
    pub split: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Pixel-space Gaussian augmentation std; each training image gets one
    /// extra noisy copy when positive. Augmentation keeps the first layer
    /// from fitting image content and pulls it toward the mark itself.
    pub noise_aug_sigma: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            split: 1,
            epochs: 60,
            lr: 1e-3,
            batch_size: 32,
            noise_aug_sigma: 0.05,
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::param("hidden", "layer widths must be >= 1"));
        }
        let layers = self.hidden.len() + 1;
        if !(1..layers).contains(&self.split) {
            return Err(Error::param("split", format!("must lie in 1..{layers}")));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::param("epochs", "epochs and batch_size must be >= 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::param("lr", "must be > 0"));
        }
        if !(self.noise_aug_sigma >= 0.0) {
            return Err(Error::param("noise_aug_sigma", "must be >= 0"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::param("val_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn sizes(&self, input: usize, classes: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(&self.hidden);
        s.push(classes);
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
    pub val_accuracy: f64,
}

/// Substitute watermark classifier: feature map, latent layers `φ` (layers
/// `< split`, ReLU output) and head `D` (remaining layers).
#[derive(Debug, Clone, PartialEq)]
pub struct SubstituteClassifier {
    pub spec: FeatureSpec,
    pub net: Mlp,
    pub split: usize,
    pub log: TrainLog,
}

impl SubstituteClassifier {
    pub fn new(spec: FeatureSpec, net: Mlp, split: usize) -> Result<Self> {
        spec.validate()?;
        if net.input_dim() != spec.dim() {
            return Err(Error::param("net", "input size differs from feature dimension"));
        }
        if !(1..net.layers.len()).contains(&split) {
            return Err(Error::param("split", format!("must lie in 1..{}", net.layers.len())));
        }
        Ok(Self {
            spec,
            net,
            split,
            log: TrainLog::default(),
        })
    }

    pub fn features(&self, img: &Image) -> Result<Vec<f64>> {
        self.spec.features(img)
    }

    /// `φ` applied to standardized features.
    pub fn latent(&self, features: &[f64]) -> Vec<f64> {
        self.net.hidden(features, self.split)
    }

    pub fn latent_of(&self, img: &Image) -> Result<Vec<f64>> {
        Ok(self.latent(&self.features(img)?))
    }

    pub fn head_logits(&self, latent: &[f64]) -> Vec<f64> {
        self.net.trace_from(self.split, latent).logits
    }

    /// Probability of the watermarked class.
    pub fn score(&self, img: &Image) -> Result<f64> {
        Ok(softmax(&self.net.logits(&self.features(img)?))[WATERMARKED])
    }

    pub fn predict(&self, img: &Image) -> Result<usize> {
        Ok(argmax(&self.net.logits(&self.features(img)?)))
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Mini-batch Adam on cross-entropy, updating layers `from..` only.
/// Returns per-epoch mean losses.
pub fn fit_layers(
    net: &mut Mlp,
    from: usize,
    xs: &[Vec<f64>],
    ys: &[usize],
    epochs: usize,
    lr: f64,
    batch_size: usize,
    rng: &mut impl Rng,
    mut perturb: impl FnMut(&[f64], &mut dyn rand::RngCore) -> Vec<f64>,
) -> Result<Vec<f64>> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Empty("training set"));
    }
    let mut opt = Adam::new(net, lr);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<Vec<f64>> = chunk.iter().map(|&i| perturb(&xs[i], rng)).collect();
            let refs: Vec<&[f64]> = batch.iter().map(|x| x.as_slice()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| ys[i]).collect();
            let (loss, grads) = net.batch_loss_grad(from, &refs, &labels);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            total += loss * chunk.len() as f64;
            opt.step(net, &grads, from);
        }
        losses.push(total / xs.len() as f64);
    }
    Ok(losses)
}

/// Train a fresh network on feature vectors.
pub fn train_on_features(xs: &[Vec<f64>], ys: &[usize], cfg: &TrainConfig) -> Result<(Mlp, Vec<f64>)> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let classes = ys.iter().copied().max().unwrap_or(0).max(1) + 1;
    let mut rng = chacha(derive_seed(cfg.seed, "substitute-init"));
    let mut net = Mlp::new(&cfg.sizes(xs[0].len(), classes), &mut rng)?;
    let mut rng = chacha(derive_seed(cfg.seed, "substitute-batches"));
    let losses = fit_layers(
        &mut net,
        0,
        xs,
        ys,
        cfg.epochs,
        cfg.lr,
        cfg.batch_size,
        &mut rng,
        |x, _| x.to_vec(),
    )?;
    Ok((net, losses))
}

pub fn accuracy(net: &Mlp, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
    let hits = xs
        .iter()
        .zip(ys)
        .filter(|(x, &y)| argmax(&net.logits(x)) == y)
        .count();
    hits as f64 / xs.len().max(1) as f64
}

/// Deterministic split of `0..n` into (train, validation) indices.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut chacha(derive_seed(seed, "split")));
    let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n.saturating_sub(1));
    let val = idx.split_off(n - n_val);
    (idx, val)
}

/// Train a substitute on watermarked vs. clean images. Sets are split by a
/// seeded shuffle of image indices so that train and validation are
/// disjoint; when the two sets are index-paired, a pair never straddles the
/// split.
pub fn train_classifier(
    wm_set: &[Image],
    clean_set: &[Image],
    spec: &FeatureSpec,
    cfg: &TrainConfig,
) -> Result<SubstituteClassifier> {
    cfg.validate()?;
    if wm_set.len() < MIN_PER_CLASS || clean_set.len() < MIN_PER_CLASS {
        return Err(Error::param(
            "training set",
            format!("need at least {MIN_PER_CLASS} images per class"),
        ));
    }
    let (tr_w, va_w) = split_indices(wm_set.len(), cfg.val_fraction, cfg.seed);
    let (tr_c, va_c) = split_indices(clean_set.len(), cfg.val_fraction, cfg.seed);
    let mut spec = FeatureSpec::new(spec.downsample, spec.dct_k);
    spec.validate()?;

    let noise = Normal::new(0.0, cfg.noise_aug_sigma.max(1e-300)).expect("valid std");
    let mut aug_rng = chacha(derive_seed(cfg.seed, "substitute-augment"));
    let mut raw = Vec::new();
    let mut ys = Vec::new();
    for (set, idx, label) in [(wm_set, &tr_w, WATERMARKED), (clean_set, &tr_c, CLEAN)] {
        for &i in idx {
            raw.push(spec.raw(&set[i])?);
            ys.push(label);
            if cfg.noise_aug_sigma > 0.0 {
                let noisy = set[i].with_data(
                    set[i]
                        .data()
                        .iter()
                        .map(|v| (v + noise.sample(&mut aug_rng)).clamp(0.0, 1.0))
                        .collect(),
                );
                raw.push(spec.raw(&noisy)?);
                ys.push(label);
            }
        }
    }
    spec.fit(&raw)?;
    let xs: Vec<Vec<f64>> = raw.iter().map(|r| spec.normalize(r)).collect();
    let (net, losses) = train_on_features(&xs, &ys, cfg)?;

    let mut vx = Vec::new();
    let mut vy = Vec::new();
    for (set, idx, label) in [(wm_set, &va_w, WATERMARKED), (clean_set, &va_c, CLEAN)] {
        for &i in idx {
            vx.push(spec.features(&set[i])?);
            vy.push(label);
        }
    }
    let val_accuracy = accuracy(&net, &vx, &vy);
    let mut clf = SubstituteClassifier::new(spec, net, cfg.split)?;
    clf.log = TrainLog {
        epoch_losses: losses,
        val_accuracy,
    };
    Ok(clf)
}

/// `N(0, σ²)` vector of length `n`.
pub(crate) fn gaussian_vec(n: usize, sigma: f64, rng: &mut dyn rand::RngCore) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let e: f64 = rand_distr::StandardNormal.sample(rng);
            sigma * e
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_two_feature_data() {
        let mut rng = chacha(1);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..400 {
            let y = i % 2;
            let s = if y == 1 { 1.0 } else { -1.0 };
            xs.push(vec![s * rng.random_range(0.2..1.5), rng.random_range(-1.0..1.0)]);
            ys.push(y);
        }
        let cfg = TrainConfig {
            hidden: vec![8],
            epochs: 50,
            lr: 1e-2,
            ..Default::default()
        };
        let (train, val) = split_indices(xs.len(), 0.25, 3);
        let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
            (idx.iter().map(|&i| xs[i].clone()).collect(), idx.iter().map(|&i| ys[i]).collect())
        };
        let (tx, ty) = pick(&train);
        let (vx, vy) = pick(&val);
        let (net, losses) = train_on_features(&tx, &ty, &cfg).unwrap();
        assert_eq!(losses.len(), 50);
        assert_eq!(accuracy(&net, &vx, &vy), 1.0);
        // deterministic
        let (again, _) = train_on_features(&tx, &ty, &cfg).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn divergence_is_reported() {
        let xs = vec![vec![f64::MAX, f64::MAX], vec![-f64::MAX, f64::MAX]];
        let ys = vec![0, 1];
        let cfg = TrainConfig {
            hidden: vec![4],
            epochs: 3,
            ..Default::default()
        };
        assert!(matches!(train_on_features(&xs, &ys, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn split_is_disjoint_and_complete() {
        let (a, b) = split_indices(50, 0.2, 9);
        assert_eq!(b.len(), 10);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { split: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { split: 2, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn too_few_images_rejected() {
        let imgs: Vec<Image> = (0..10).map(|s| crate::synth::synth_image(s, 32, 32, 1).unwrap()).collect();
        assert!(train_classifier(&imgs, &imgs, &FeatureSpec::default(), &TrainConfig::default()).is_err());
    }
}
