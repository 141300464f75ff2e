use serde::{Deserialize, Serialize};

use super::train::{argmax, SubstituteClassifier};
use crate::error::{Error, Result};
use crate::rng::chacha;

use super::train::gaussian_vec;

/// A classifier head acting on latent vectors.
pub trait LatentHead {
    fn predict_latent(&self, z: &[f64]) -> usize;
}

impl LatentHead for SubstituteClassifier {
    fn predict_latent(&self, z: &[f64]) -> usize {
        argmax(&self.head_logits(z))
    }
}

impl<F: Fn(&[f64]) -> usize> LatentHead for F {
    fn predict_latent(&self, z: &[f64]) -> usize {
        self(z)
    }
}

/// A latent vector together with the distribution it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub latent: Vec<f64>,
    pub source: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCell {
    pub class: usize,
    pub source: usize,
    pub support: usize,
    pub consistency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub cells: Vec<ConsistencyCell>,
    /// `(class, source)` cells with no sample predicted as `class`.
    pub skipped: Vec<(usize, usize)>,
}

/// Estimate the smallest `α` such that the head is `(σ, α)`-robust on the
/// given samples: for every predicted class `k` and source distribution,
/// `P[D(z + n) = k | D(z) = k] ≥ 1 − α` with `n ~ N(0, σ² I)`.
///
/// `classes` and `sources` fix the grid of cells; empty cells are skipped
/// and listed in the result. Noise is drawn from a generator seeded by
/// `seed`, so repeated calls with a different `sigma` reuse the same
/// standard-normal directions.
pub fn robustness_alpha<H: LatentHead + ?Sized>(
    head: &H,
    samples: &[LatentSample],
    classes: usize,
    sources: usize,
    sigma: f64,
    draws: usize,
    seed: u64,
) -> Result<AlphaEstimate> {
    if samples.is_empty() {
        return Err(Error::Empty("latent samples"));
    }
    if draws == 0 {
        return Err(Error::param("draws", "must be >= 1"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", "must be finite and >= 0"));
    }
    let mut hits = vec![0usize; classes * sources];
    let mut trials = vec![0usize; classes * sources];
    let mut support = vec![0usize; classes * sources];
    let mut rng = chacha(seed);
    for s in samples {
        if s.source >= sources {
            return Err(Error::param("source", "index out of range"));
        }
        let k = head.predict_latent(&s.latent);
        if k >= classes {
            return Err(Error::param("classes", "head predicted an out-of-range class"));
        }
        let cell = k * sources + s.source;
        support[cell] += 1;
        let mut z = s.latent.clone();
        for _ in 0..draws {
            let n = gaussian_vec(z.len(), 1.0, &mut rng);
            for ((zi, li), ni) in z.iter_mut().zip(&s.latent).zip(&n) {
                *zi = li + sigma * ni;
            }
            trials[cell] += 1;
            if head.predict_latent(&z) == k {
                hits[cell] += 1;
            }
        }
    }
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    let mut worst: f64 = 1.0;
    for k in 0..classes {
        for src in 0..sources {
            let c = k * sources + src;
            if support[c] == 0 {
                skipped.push((k, src));
                continue;
            }
            let consistency = hits[c] as f64 / trials[c] as f64;
            worst = worst.min(consistency);
            cells.push(ConsistencyCell {
                class: k,
                source: src,
                support: support[c],
                consistency,
            });
        }
    }
    Ok(AlphaEstimate {
        alpha: 1.0 - worst,
        cells,
        skipped,
    })
}
