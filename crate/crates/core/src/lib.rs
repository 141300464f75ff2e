//! Watermark robustness benchmark: classical keyed image watermarks, the
//! purification / model-substitution / spoofing attacks against them, and
//! closed-form calculators for the certified error bounds those attacks obey.

pub mod error;
pub mod image;
pub mod rng;

pub use error::{Error, Result};
pub use image::Image;
pub mod synth;
pub mod watermark;
pub mod attack;
pub mod metrics;
pub mod substitute;
pub mod theory;
