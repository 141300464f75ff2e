use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ROC curve from a threshold sweep. A sample is predicted positive when its
/// score is `>=` the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Threshold producing each point; `+∞` for the leading `(0, 0)`.
    pub thresholds: Vec<f64>,
    pub auroc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl RocCurve {
    /// Smallest `e₀ + e₁ = (1 − TPR) + FPR` over every threshold.
    pub fn min_total_error(&self) -> f64 {
        self.points
            .iter()
            .map(|&(fpr, tpr)| (1.0 - tpr) + fpr)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sweep every distinct score as a threshold; ties are crossed together so
/// the trapezoid area equals `P(s⁺ > s⁻) + ½ P(s⁺ = s⁻)`.
pub fn roc(pos: &[f64], neg: &[f64]) -> Result<RocCurve> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Empty("score set"));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::param("scores", "NaN score"));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auroc = 0.0;
    let mut i = 0;
    while i < all.len() {
        let thr = all[i].0;
        while i < all.len() && all[i].0 == thr {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (f0, t0) = *points.last().unwrap();
        let (f1, t1) = (fp as f64 / nn, tp as f64 / np);
        auroc += (f1 - f0) * (t0 + t1) / 2.0;
        points.push((f1, t1));
        thresholds.push(thr);
    }
    Ok(RocCurve {
        points,
        thresholds,
        auroc: auroc.clamp(0.0, 1.0),
        n_pos: pos.len(),
        n_neg: neg.len(),
    })
}

/// TPR at the largest achieved FPR not exceeding `fpr_target` (step rule).
pub fn tpr_at_fpr(curve: &RocCurve, fpr_target: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fpr_target) {
        return Err(Error::param("fpr_target", "must lie in [0, 1]"));
    }
    Ok(curve
        .points
        .iter()
        .filter(|p| p.0 <= fpr_target)
        .map(|p| p.1)
        .fold(0.0, f64::max))
}
