//! Closed-form error and AUROC bounds for purified and noise-robust detectors.

mod erf;

pub use erf::erf;

use serde::{Deserialize, Serialize};

use crate::attack::DiffusionSchedule;
use crate::error::{Error, Result};

/// Inputs to the purification error bound.
#[derive(Debug, Clone)]
pub struct BoundQuery {
    /// ℓ2 Wasserstein distance between clean and watermarked images, unit scale.
    pub wasserstein: f64,
    pub schedule: DiffusionSchedule,
    pub t: f64,
}

impl BoundQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.wasserstein >= 0.0 && self.wasserstein.is_finite()) {
            return Err(Error::param("wasserstein", "must be finite and >= 0"));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::param("t", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Inputs to the robust-detector AUROC bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffBoundQuery {
    pub wasserstein_latent: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl TradeoffBoundQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.wasserstein_latent >= 0.0 && self.wasserstein_latent.is_finite()) {
            return Err(Error::param("wasserstein_latent", "must be finite and >= 0"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// `ᾱ` at step `round(t · n_steps)`.
pub fn alpha_bar(sched: &DiffusionSchedule, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param("t", "must lie in [0, 1]"));
    }
    Ok(sched.alpha_bar_at(t))
}

/// Lower bound on `e₀ + e₁` for any detector applied after purification.
///
/// When `t` rounds to step 0 no noise is added: the bound is 0 for `W > 0`
/// and 1 for `W = 0`.
pub fn theorem1_bound(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    Ok(bound_from_alpha_bar(q.wasserstein, q.schedule.alpha_bar_at(q.t)))
}

/// Same bound with the latent-space distance substituted for `W`.
pub fn theorem1_bound_latent(w_latent: f64, sched: &DiffusionSchedule, t: f64) -> Result<f64> {
    theorem1_bound(&BoundQuery {
        wasserstein: w_latent,
        schedule: sched.clone(),
        t,
    })
}

fn bound_from_alpha_bar(w: f64, ab: f64) -> f64 {
    if ab >= 1.0 {
        return if w > 0.0 { 0.0 } else { 1.0 };
    }
    let arg = ab.sqrt() * w / (2.0 * (2.0 * (1.0 - ab)).sqrt());
    (1.0 - erf(arg)).clamp(0.0, 1.0)
}

/// `erf(d / (2√2 σ))`: total variation between `N(0, σ²)` and `N(d, σ²)`.
pub fn psi_sigma(d: f64, sigma: f64) -> Result<f64> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::param("d", "must be finite and >= 0"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", "must be > 0"));
    }
    Ok(erf(d / (2.0 * std::f64::consts::SQRT_2 * sigma)))
}

/// Uncapped AUROC bound as a function of `ψ` and `α`.
pub fn theorem2_from_psi(psi: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::param("psi", "must lie in [0, 1]"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", "must lie in [0, 1)"));
    }
    let inv = 1.0 / (1.0 - alpha);
    Ok(inv * (psi - psi * psi / 2.0) + (1.0 + 2.0 * alpha - 2.0 * alpha * alpha) * inv / 2.0)
}

/// Uncapped AUROC upper bound for a `(σ, α)`-robust detector. Can exceed 1.
pub fn theorem2_bound_raw(q: &TradeoffBoundQuery) -> Result<f64> {
    q.validate()?;
    theorem2_from_psi(psi_sigma(q.wasserstein_latent, q.sigma)?, q.alpha)
}

/// [`theorem2_bound_raw`] capped at 1.
pub fn theorem2_bound(q: &TradeoffBoundQuery) -> Result<f64> {
    Ok(theorem2_bound_raw(q)?.min(1.0))
}

/// `1 − (e₀ + e₁)`, the detector success margin that lower-bounds TV.
pub fn lemma_tv_error_bound(e0: f64, e1: f64) -> Result<f64> {
    for (name, v) in [("e0", e0), ("e1", e1)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::param(name, "must lie in [0, 1]"));
        }
    }
    Ok(1.0 - (e0 + e1))
}

/// `AUROC_N / (1 − α) + α`: the largest clean-input AUROC consistent with a
/// noisy-input AUROC of `auroc_noisy` for a detector that is `α`-robust.
pub fn lemma1_auroc_bound(auroc_noisy: f64, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", "must lie in [0, 1)"));
    }
    Ok(auroc_noisy / (1.0 - alpha) + alpha)
}

/// Total variation between `N(0, σ²)` and `N(d, σ²)` by composite Simpson
/// quadrature of `½∫|p − q|` over `[−12σ, d + 12σ]`.
pub fn gaussian_tv_quadrature(d: f64, sigma: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let (lo, hi) = (-12.0 * sigma, d + 12.0 * sigma);
    let h = (hi - lo) / n as f64;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let pdf = |x: f64, m: f64| norm * (-(x - m) * (x - m) / (2.0 * sigma * sigma)).exp();
    let f = |x: f64| (pdf(x, 0.0) - pdf(x, d)).abs();
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    0.5 * s * h / 3.0
}
