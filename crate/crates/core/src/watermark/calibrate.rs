use super::key::WatermarkKey;
use super::scheme::{embed, paired_l2, SchemeKind, WatermarkScheme};
use crate::error::{Error, Result};
use crate::image::Image;

/// Bisect the strength whose mean unit-scale ℓ2 (`paired_l2 / 255`) over
/// `images` hits `target`. Returns the strength after 40 halvings of
/// `[0, hi]`, where `hi` is grown until it overshoots.
pub fn calibrate_strength(
    kind: SchemeKind,
    images: &[Image],
    key: &WatermarkKey,
    target: f64,
) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::Empty("calibration images"));
    }
    if !(target > 0.0) {
        return Err(Error::param("target", "must be > 0"));
    }
    let l2_at = |s: f64| -> Result<f64> {
        let scheme = WatermarkScheme::new(kind, s)?;
        let marked = images
            .iter()
            .map(|x| embed(x, key, &scheme))
            .collect::<Result<Vec<_>>>()?;
        Ok(paired_l2(&marked, images)? / 255.0)
    };
    let mut hi = kind.default_strength();
    let mut grow = 0;
    while l2_at(hi)? < target {
        hi *= 2.0;
        grow += 1;
        if grow > 30 {
            return Err(Error::param("target", "unreachable for this scheme"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 {
            break;
        }
        if l2_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
