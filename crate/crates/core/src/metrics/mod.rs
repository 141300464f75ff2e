//! ROC analysis, image quality and exact empirical transport distance.

mod quality;
mod roc;
mod transport;

pub use quality::{psnr, quality, ssim, ssim_map, QualityReport};
pub use roc::{roc, tpr_at_fpr, RocCurve};
pub use transport::{hungarian, mean_paired_l2, wasserstein_exact, MAX_ASSIGNMENT};
