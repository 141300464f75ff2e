//! Keyed classical watermarks and their detectors.

mod calibrate;
mod key;
mod scheme;

pub use calibrate::calibrate_strength;
pub use key::{expand_key, parse_key_file, read_key_file, WatermarkKey, KEY_BITS};
pub use scheme::{
    detect, embed, paired_l2, watermark_delta, zigzag, DetectionResult, SchemeKind,
    WatermarkScheme, MID_BAND,
};
