use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const KEY_BITS: usize = 64;

/// A 64-bit binary watermark key. Bit 0 is the first character of the
/// textual form and the most significant bit of [`WatermarkKey::as_u64`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WatermarkKey {
    bits: [bool; KEY_BITS],
    id: Option<String>,
}

impl WatermarkKey {
    pub fn from_bits(bits: [bool; KEY_BITS]) -> Self {
        Self { bits, id: None }
    }

    pub fn from_u64(value: u64) -> Self {
        let mut bits = [false; KEY_BITS];
        for (i, b) in bits.iter_mut().enumerate() {
            *b = (value >> (63 - i)) & 1 == 1;
        }
        Self::from_bits(bits)
    }

    /// Parse a string of exactly 64 `0`/`1` characters.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.len() != KEY_BITS {
            return Err(Error::param(
                "key",
                format!("expected {KEY_BITS} binary digits, got {}", text.len()),
            ));
        }
        let mut bits = [false; KEY_BITS];
        for (b, ch) in bits.iter_mut().zip(text.chars()) {
            *b = match ch {
                '0' => false,
                '1' => true,
                other => return Err(Error::param("key", format!("invalid digit {other:?}"))),
            };
        }
        Ok(Self::from_bits(bits))
    }

    /// Key derived from a seed; for tests and synthetic experiments.
    pub fn from_seed(seed: u64) -> Self {
        Self::from_u64(SplitMix64::new(seed).next_u64())
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn bits(&self) -> &[bool; KEY_BITS] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn as_u64(&self) -> u64 {
        self.bits
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }
}

impl fmt::Display for WatermarkKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Parse a key file: one 64-digit key per non-empty line. Keys are labelled
/// `line<N>` (1-based).
pub fn parse_key_file(text: &str) -> Result<Vec<WatermarkKey>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| WatermarkKey::parse(l).map(|k| k.with_id(format!("line{}", i + 1))))
        .collect()
}

pub fn read_key_file(path: impl AsRef<Path>) -> Result<Vec<WatermarkKey>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_file(&text)
}

/// Expand a key into `n` chips of ±1.
///
/// SplitMix64 is seeded with the key bits as a big-endian `u64`; each chip
/// is `+1` when the top bit of the next output is set, `-1` otherwise.
pub fn expand_key(key: &WatermarkKey, n: usize) -> Vec<f64> {
    let mut g = SplitMix64::new(key.as_u64());
    (0..n)
        .map(|_| if g.next_u64() >> 63 == 1 { 1.0 } else { -1.0 })
        .collect()
}
