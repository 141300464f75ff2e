use rand::Rng;
use serde::{Deserialize, Serialize};

use super::train::SubstituteClassifier;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::chacha;

/// Relative gap `|d − target| / target` below which the search counts as converged.
pub const LATENT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentSearchResult {
    pub image: Image,
    pub latent_distance: f64,
    /// `‖δ‖∞` of the returned image relative to the input.
    pub linf: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentSearchConfig {
    pub eps_target: f64,
    pub lr: f64,
    pub iters: usize,
    pub seed: u64,
}

/// Gradient descent (Adam) on `(ε − ‖φ(x) − φ(x + δ)‖₂)²` over pixel
/// perturbations `δ`, keeping `x + δ` in `[0, 1]`. Returns the best iterate.
pub fn latent_perturbation_search(
    img: &Image,
    clf: &SubstituteClassifier,
    cfg: &LatentSearchConfig,
) -> Result<LatentSearchResult> {
    if !(cfg.eps_target >= 0.0 && cfg.eps_target.is_finite()) {
        return Err(Error::param("eps_target", "must be finite and >= 0"));
    }
    if !(cfg.lr > 0.0) || cfg.iters == 0 {
        return Err(Error::param("lr", "lr and iters must be positive"));
    }
    if cfg.eps_target == 0.0 {
        return Ok(LatentSearchResult {
            image: img.clone(),
            latent_distance: 0.0,
            linf: 0.0,
            converged: true,
        });
    }
    let z0 = clf.latent_of(img)?;
    let x0 = img.data();
    let mut rng = chacha(cfg.seed);
    let mut delta: Vec<f64> = x0.iter().map(|_| rng.random_range(-1e-3..1e-3)).collect();
    let (mut m, mut v) = (vec![0.0; x0.len()], vec![0.0; x0.len()]);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for t in 1..=cfg.iters {
        let x: Vec<f64> = x0.iter().zip(&delta).map(|(a, d)| (a + d).clamp(0.0, 1.0)).collect();
        let cur = img.with_data(x);
        let feats = clf.features(&cur)?;
        let (z, pre) = latent_trace(clf, &feats);
        let diff: Vec<f64> = z.iter().zip(&z0).map(|(a, b)| a - b).collect();
        let d = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gap = (cfg.eps_target - d).abs();
        if best.as_ref().is_none_or(|b| gap < b.0) {
            best = Some((gap, cur.data().to_vec(), d));
        }
        if d == 0.0 {
            continue;
        }
        if gap <= LATENT_TOLERANCE * cfg.eps_target {
            break;
        }
        let scale = -2.0 * (cfg.eps_target - d) / d;
        let gz: Vec<f64> = diff.iter().map(|v| scale * v).collect();
        let gf = latent_backward(clf, &pre, gz);
        let gx = clf.spec.pixel_gradient(&cur, &gf)?;
        let (c1, c2) = (1.0 - 0.9f64.powi(t as i32), 1.0 - 0.999f64.powi(t as i32));
        for i in 0..delta.len() {
            m[i] = 0.9 * m[i] + 0.1 * gx[i];
            v[i] = 0.999 * v[i] + 0.001 * gx[i] * gx[i];
            delta[i] -= cfg.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + 1e-12);
            delta[i] = (x0[i] + delta[i]).clamp(0.0, 1.0) - x0[i];
        }
    }
    let (gap, data, d) = best.expect("at least one iteration");
    let linf = data.iter().zip(x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(LatentSearchResult {
        image: img.with_data(data),
        latent_distance: d,
        linf,
        converged: gap <= LATENT_TOLERANCE * cfg.eps_target,
    })
}

/// Forward through the latent layers, keeping pre-activations.
fn latent_trace(clf: &SubstituteClassifier, feats: &[f64]) -> (Vec<f64>, Vec<(Vec<f64>, Vec<f64>)>) {
    let mut cur = feats.to_vec();
    let mut saved = Vec::with_capacity(clf.split);
    for layer in &clf.net.layers[..clf.split] {
        let pre: Vec<f64> = (0..layer.outputs)
            .map(|o| {
                layer.bias[o]
                    + layer.weights[o * layer.inputs..(o + 1) * layer.inputs]
                        .iter()
                        .zip(&cur)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            })
            .collect();
        let out = pre.iter().map(|v| v.max(0.0)).collect();
        saved.push((cur, pre));
        cur = out;
    }
    (cur, saved)
}

fn latent_backward(clf: &SubstituteClassifier, saved: &[(Vec<f64>, Vec<f64>)], mut g: Vec<f64>) -> Vec<f64> {
    for (layer, (_, pre)) in clf.net.layers[..clf.split].iter().zip(saved).rev() {
        for (gv, p) in g.iter_mut().zip(pre) {
            if *p <= 0.0 {
                *gv = 0.0;
            }
        }
        let mut next = vec![0.0; layer.inputs];
        for (o, &go) in g.iter().enumerate() {
            if go != 0.0 {
                for (acc, w) in next.iter_mut().zip(&layer.weights[o * layer.inputs..(o + 1) * layer.inputs]) {
                    *acc += w * go;
                }
            }
        }
        g = next;
    }
    g
}
