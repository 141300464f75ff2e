use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mlp::{softmax, Mlp};
use super::robust::{robustness_alpha, LatentSample};
use super::train::{fit_layers, gaussian_vec, train_on_features, TrainConfig};
use crate::error::{Error, Result};
use crate::metrics::roc;
use crate::rng::{chacha, derive_indexed, derive_seed};
use crate::theory::lemma1_auroc_bound;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TradeoffConfig {
    /// Latent noise std used when training each head.
    pub train_sigmas: Vec<f64>,
    /// Robustness level at which the inference σ is reported.
    pub alpha: f64,
    /// Noise draws per sample when estimating α.
    pub draws: usize,
    pub trials: usize,
    /// Samples per class in each synthetic train and test split.
    pub samples_per_class: usize,
    pub latent_dim: usize,
    pub feature_epochs: usize,
    pub head_epochs: usize,
    pub lr: f64,
    /// `(separation, flip rate)` per synthetic feature.
    pub features: Vec<(f64, f64)>,
    /// Within-cluster spread relative to each separation.
    pub spread: f64,
    pub seed: u64,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        Self {
            train_sigmas: vec![0.0, 2.5, 5.0, 10.0, 15.0, 20.0],
            alpha: 0.01,
            draws: 10,
            trials: 5,
            samples_per_class: 300,
            latent_dim: 32,
            feature_epochs: 30,
            head_epochs: 40,
            lr: 5e-3,
            features: tradeoff_features(),
            spread: TRADEOFF_SPREAD,
            seed: 0,
        }
    }
}

impl TradeoffConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_sigmas.is_empty() || self.train_sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::param("train_sigmas", "need a non-empty list of values >= 0"));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::param("alpha", "must lie in (0, 0.5)"));
        }
        if self.draws == 0 || self.trials == 0 {
            return Err(Error::param("draws", "draws and trials must be >= 1"));
        }
        if self.samples_per_class < 10 || self.latent_dim == 0 {
            return Err(Error::param("samples_per_class", "need >= 10 samples and a latent layer"));
        }
        if self.features.is_empty()
            || self.features.iter().any(|&(sep, p)| !(sep > 0.0 && sep.is_finite() && (0.0..0.5).contains(&p)))
        {
            return Err(Error::param("features", "need separations > 0 and flip rates in [0, 0.5)"));
        }
        if self.features.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::param("features", "flip rates must be non-decreasing"));
        }
        if !(self.spread > 0.0 && self.spread < 1.0) {
            return Err(Error::param("spread", "must lie in (0, 1)"));
        }
        if self.feature_epochs == 0 || self.head_epochs == 0 || !(self.lr > 0.0) {
            return Err(Error::param("epochs", "epochs and lr must be positive"));
        }
        Ok(())
    }
}

/// Labeled feature vectors (label 1 = watermarked/fake, 0 = real).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<usize>,
}

/// Per-feature separation and label-noise rate of the synthetic data.
/// Wider separations are less reliable: a fraction of each class is drawn
/// on the wrong side. Flips are nested (a sample flipped on one feature is
/// flipped on every wider one), so features never partially cancel.
/// Default feature spectrum: 16 features with separations `1.35^i` and flip
/// rates rising linearly from 0 to 0.15. A smooth spectrum keeps every noise
/// level away from an abrupt switch between two features.
pub fn tradeoff_features() -> Vec<(f64, f64)> {
    const N: usize = 16;
    (0..N)
        .map(|i| (1.35f64.powi(i as i32), 0.15 * i as f64 / (N - 1) as f64))
        .collect()
}

/// Within-cluster spread as a fraction of each feature's separation.
pub const TRADEOFF_SPREAD: f64 = 0.05;

/// Two-class data whose features trade separation against reliability, so
/// a head forced to ignore small latent differences loses accuracy.
pub fn synthetic_tradeoff_data(samples_per_class: usize, seed: u64) -> LabeledSet {
    synthetic_tradeoff_data_with(&tradeoff_features(), TRADEOFF_SPREAD, samples_per_class, seed)
}

/// [`synthetic_tradeoff_data`] with an explicit `(separation, flip rate)`
/// list (flip rates non-decreasing) and relative spread.
pub fn synthetic_tradeoff_data_with(
    features: &[(f64, f64)],
    spread: f64,
    samples_per_class: usize,
    seed: u64,
) -> LabeledSet {
    let mut rng = chacha(seed);
    let mut xs = Vec::with_capacity(2 * samples_per_class);
    let mut ys = Vec::with_capacity(2 * samples_per_class);
    for y in [0usize, 1] {
        for _ in 0..samples_per_class {
            let u: f64 = rng.random();
            let x = features
                .iter()
                .map(|&(sep, flip)| {
                    let side = if u < flip { 1 - y } else { y };
                    let centre = if side == 1 { sep / 2.0 } else { -sep / 2.0 };
                    let noise = Normal::new(0.0, spread * sep).expect("valid std");
                    // keep the two sides disjoint so a flip-free feature separates
                    let off: f64 = noise.sample(&mut rng);
                    centre + off.clamp(-0.4 * sep, 0.4 * sep)
                })
                .collect();
            xs.push(x);
            ys.push(y);
        }
    }
    LabeledSet { xs, ys }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub trial: usize,
    pub train_sigma: f64,
    /// Smallest latent σ at which the head's α reaches the target.
    pub inference_sigma: f64,
    pub alpha: f64,
    /// AUROC of the head's fake-class probability on clean latents.
    pub auroc: f64,
    /// AUROC of the head's hard decision, `(1 + TPR − FPR) / 2`.
    pub hard_auroc: f64,
    /// Hard-decision AUROC on latents perturbed at `inference_sigma`.
    pub hard_auroc_noisy: f64,
    /// `hard_auroc_noisy / (1 − alpha) + alpha`, an upper bound on `hard_auroc`.
    pub lemma1_bound: f64,
    /// False when α never reached the target below the search ceiling.
    pub bracketed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffSummary {
    pub train_sigma: f64,
    pub inference_sigma: f64,
    pub auroc: f64,
    pub hard_auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTable {
    pub rows: Vec<TradeoffRow>,
    /// Trial means per training σ, in grid order.
    pub summary: Vec<TradeoffSummary>,
}

const SIGMA_CEILING: f64 = 1e4;
const BISECT_REL_TOL: f64 = 0.01;
const BISECT_MAX_ITERS: usize = 30;

/// For each trial: train a full network on clean features (fixing the
/// latent map φ), then for each training σ retrain the head on latents
/// perturbed by `N(0, σ²I)`, locate the inference σ at which the head's
/// α reaches the target, and measure clean and noisy AUROC on held-out data.
/// When `data` is `None` each trial draws fresh synthetic data.
pub fn tradeoff_experiment(cfg: &TradeoffConfig, data: Option<(&LabeledSet, &LabeledSet)>) -> Result<TradeoffTable> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for trial in 0..cfg.trials {
        let tseed = derive_indexed(cfg.seed, "tradeoff-trial", trial as u64);
        let owned;
        let (train, test) = match data {
            Some(d) => d,
            None => {
                owned = (
                    synthetic_tradeoff_data_with(&cfg.features, cfg.spread, cfg.samples_per_class, derive_seed(tseed, "train")),
                    synthetic_tradeoff_data_with(&cfg.features, cfg.spread, cfg.samples_per_class, derive_seed(tseed, "test")),
                );
                (&owned.0, &owned.1)
            }
        };
        if train.xs.is_empty() || test.xs.is_empty() {
            return Err(Error::Empty("trade-off data"));
        }
        let tcfg = TrainConfig {
            hidden: vec![cfg.latent_dim],
            split: 1,
            epochs: cfg.feature_epochs,
            lr: cfg.lr,
            batch_size: 32,
            seed: derive_seed(tseed, "phi"),
            ..Default::default()
        };
        let (base, _) = train_on_features(&train.xs, &train.ys, &tcfg)?;
        let z_train: Vec<Vec<f64>> = train.xs.iter().map(|x| base.hidden(x, 1)).collect();
        let z_test: Vec<Vec<f64>> = test.xs.iter().map(|x| base.hidden(x, 1)).collect();
        let samples: Vec<LatentSample> = z_test
            .iter()
            .zip(&test.ys)
            .map(|(z, &y)| LatentSample { latent: z.clone(), source: y })
            .collect();

        for (si, &sigma) in cfg.train_sigmas.iter().enumerate() {
            let hseed = derive_indexed(tseed, "head", si as u64);
            let mut net = base.clone();
            let fresh = Mlp::new(&[cfg.latent_dim, 2], &mut chacha(derive_seed(hseed, "init")))?;
            net.layers[1] = fresh.layers[0].clone();
            fit_layers(
                &mut net,
                1,
                &z_train,
                &train.ys,
                cfg.head_epochs,
                cfg.lr,
                32,
                &mut chacha(derive_seed(hseed, "batches")),
                |z, rng| {
                    let n = gaussian_vec(z.len(), sigma, rng);
                    z.iter().zip(n).map(|(a, b)| a + b).collect()
                },
            )?;
            let head = |z: &[f64]| -> usize {
                let l = net.trace_from(1, z).logits;
                (l[1] > l[0]) as usize
            };
            let alpha_at = |s: f64| -> Result<f64> {
                Ok(robustness_alpha(&head, &samples, 2, 2, s, cfg.draws, derive_seed(hseed, "alpha"))?.alpha)
            };
            let (inference_sigma, bracketed) = bisect_sigma(&alpha_at, cfg.alpha)?;
            let alpha = alpha_at(inference_sigma)?;

            let score = |z: &[f64]| softmax(&net.trace_from(1, z).logits)[1];
            let auroc = split_auroc(z_test.iter().map(|z| score(z)).collect(), &test.ys)?;
            let clean_rates = hard_rates(&z_test, &test.ys, &head);
            let mut nrng = chacha(derive_seed(hseed, "noisy-auroc"));
            let mut noisy_rates = (0.0, 0.0);
            for _ in 0..cfg.draws {
                let noisy: Vec<Vec<f64>> = z_test
                    .iter()
                    .map(|z| {
                        let n = gaussian_vec(z.len(), inference_sigma, &mut nrng);
                        z.iter().zip(n).map(|(a, b)| a + b).collect()
                    })
                    .collect();
                let (t, f) = hard_rates(&noisy, &test.ys, &head);
                noisy_rates.0 += t / cfg.draws as f64;
                noisy_rates.1 += f / cfg.draws as f64;
            }
            let hard_auroc = binary_auroc(clean_rates);
            let hard_auroc_noisy = binary_auroc(noisy_rates);
            rows.push(TradeoffRow {
                trial,
                train_sigma: sigma,
                inference_sigma,
                alpha,
                auroc,
                hard_auroc,
                hard_auroc_noisy,
                lemma1_bound: lemma1_auroc_bound(hard_auroc_noisy, alpha.min(0.999))?,
                bracketed,
            });
        }
    }
    let summary = cfg
        .train_sigmas
        .iter()
        .map(|&s| {
            let sel: Vec<&TradeoffRow> = rows.iter().filter(|r| r.train_sigma == s).collect();
            let n = sel.len() as f64;
            TradeoffSummary {
                train_sigma: s,
                inference_sigma: sel.iter().map(|r| r.inference_sigma).sum::<f64>() / n,
                auroc: sel.iter().map(|r| r.auroc).sum::<f64>() / n,
                hard_auroc: sel.iter().map(|r| r.hard_auroc).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(TradeoffTable { rows, summary })
}

/// `(TPR, FPR)` of a hard head with label 1 as the positive class.
fn hard_rates(zs: &[Vec<f64>], ys: &[usize], head: &dyn Fn(&[f64]) -> usize) -> (f64, f64) {
    let (mut tp, mut fp, mut np, mut nn) = (0usize, 0usize, 0usize, 0usize);
    for (z, &y) in zs.iter().zip(ys) {
        let d = head(z);
        if y == 1 {
            np += 1;
            tp += d;
        } else {
            nn += 1;
            fp += d;
        }
    }
    (tp as f64 / np.max(1) as f64, fp as f64 / nn.max(1) as f64)
}

fn binary_auroc((tpr, fpr): (f64, f64)) -> f64 {
    0.5 * (1.0 + tpr - fpr)
}

fn split_auroc(scores: Vec<f64>, ys: &[usize]) -> Result<f64> {
    let pos: Vec<f64> = scores.iter().zip(ys).filter(|(_, &y)| y == 1).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(ys).filter(|(_, &y)| y == 0).map(|(s, _)| *s).collect();
    Ok(roc(&pos, &neg)?.auroc)
}

/// Smallest σ with `alpha(σ) ≥ target`, by doubling then bisection to 1%
/// relative width (at most 30 halvings). Returns `(σ, bracketed)`; when the
/// target is never reached the ceiling is returned with `bracketed = false`.
pub fn bisect_sigma(alpha: &dyn Fn(f64) -> Result<f64>, target: f64) -> Result<(f64, bool)> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while alpha(hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > SIGMA_CEILING {
            return Ok((SIGMA_CEILING, false));
        }
    }
    for _ in 0..BISECT_MAX_ITERS {
        if hi - lo <= BISECT_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if alpha(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, true))
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}
