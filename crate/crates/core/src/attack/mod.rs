//! Purification, spoofing and post-attack mitigation.

mod denoise;
mod mitigate;
mod purify;
mod schedule;
mod spoof;

pub use denoise::{estimate_noise_sigma, median_filter, tv_chambolle, wavelet_shrink, Denoiser};
pub use mitigate::{blur_sigma, mitigate_blur, mitigate_jpeg, quant_table, LUMA_QUANT};
pub use purify::{purify, purify_with_noise};
pub use schedule::{DiffusionSchedule, ScheduleParams};
pub use spoof::{make_watermarked_noise, spoof, SpoofConfig};
