use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-β diffusion schedule with cumulative `ᾱ_k = Π_{j≤k}(1 − β_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    n_steps: usize,
    beta_start: f64,
    beta_end: f64,
    alphas_bar: Vec<f64>,
}

/// Serializable parameters of a [`DiffusionSchedule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleParams {
    pub n_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            n_steps: 1000,
            beta_start: 0.0008,
            beta_end: 0.0120,
        }
    }
}

impl ScheduleParams {
    pub fn build(&self) -> Result<DiffusionSchedule> {
        DiffusionSchedule::linear(self.n_steps, self.beta_start, self.beta_end)
    }
}

impl Default for DiffusionSchedule {
    fn default() -> Self {
        ScheduleParams::default().build().expect("default schedule is valid")
    }
}

impl DiffusionSchedule {
    pub fn linear(n_steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::param("n_steps", "must be >= 1"));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::param(
                "beta",
                format!("need 0 < beta_start <= beta_end < 1, got {beta_start}..{beta_end}"),
            ));
        }
        let betas: Vec<f64> = (0..n_steps)
            .map(|j| {
                if n_steps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * j as f64 / (n_steps - 1) as f64
                }
            })
            .collect();
        Self::from_betas(&betas)
    }

    /// Schedule from explicit per-step betas (each in `(0, 1)`).
    pub fn from_betas(betas: &[f64]) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::param("betas", "empty"));
        }
        if betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::param("betas", "each beta must lie in (0, 1)"));
        }
        let mut alphas_bar = Vec::with_capacity(betas.len() + 1);
        alphas_bar.push(1.0);
        let mut acc = 1.0;
        for b in betas {
            acc *= 1.0 - b;
            alphas_bar.push(acc);
        }
        Ok(Self {
            n_steps: betas.len(),
            beta_start: betas[0],
            beta_end: betas[betas.len() - 1],
            alphas_bar,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn params(&self) -> ScheduleParams {
        ScheduleParams {
            n_steps: self.n_steps,
            beta_start: self.beta_start,
            beta_end: self.beta_end,
        }
    }

    /// `ᾱ_0 .. ᾱ_n`, length `n_steps + 1`.
    pub fn alphas_bar(&self) -> &[f64] {
        &self.alphas_bar
    }

    /// Discrete step for continuous `t ∈ [0, 1]`: `round(t · n_steps)`.
    pub fn step_for(&self, t: f64) -> usize {
        ((t.clamp(0.0, 1.0) * self.n_steps as f64).round() as usize).min(self.n_steps)
    }

    pub fn alpha_bar_at(&self, t: f64) -> f64 {
        self.alphas_bar[self.step_for(t)]
    }

    /// Per-pixel noise std after rescaling `x_t / √ᾱ`: `√((1 − ᾱ)/ᾱ)`.
    pub fn rescaled_noise_std(&self, t: f64) -> f64 {
        let ab = self.alpha_bar_at(t);
        ((1.0 - ab) / ab).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_product() {
        let s = DiffusionSchedule::from_betas(&[0.1, 0.2]).unwrap();
        assert!((s.alphas_bar()[2] - 0.72).abs() < 1e-15);
        assert_eq!(s.alpha_bar_at(0.0), 1.0);
        assert!((s.alpha_bar_at(1.0) - 0.72).abs() < 1e-15);
    }

    #[test]
    fn invariants() {
        let s = DiffusionSchedule::default();
        assert_eq!(s.alphas_bar().len(), 1001);
        assert_eq!(s.alphas_bar()[0], 1.0);
        assert!(s.alphas_bar().windows(2).all(|w| w[1] < w[0]));
        assert!(s.alphas_bar().iter().all(|&a| a > 0.0 && a <= 1.0));
        assert!(DiffusionSchedule::linear(10, 0.2, 0.1).is_err());
        assert!(DiffusionSchedule::linear(10, 0.0, 0.1).is_err());
        assert!(DiffusionSchedule::linear(10, 0.1, 1.0).is_err());
    }

    #[test]
    fn first_step_noise_level() {
        let s = DiffusionSchedule::default();
        let std = s.rescaled_noise_std(0.001);
        assert!((std - (0.0008f64 / 0.9992).sqrt()).abs() < 1e-12);
        assert!((std - 0.0283).abs() < 1e-4);
    }
}
