//! 8-bit PNG and binary PGM/PPM reading and writing.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

/// `round(clamp(v, 0, 1) · 255)` with halves rounded up.
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Image> {
    const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes)
    } else {
        Err(Error::UnsupportedFormat(
            "expected PNG, binary PGM (P5) or binary PPM (P6)".into(),
        ))
    }
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_error)?;
    if reader.info().bit_depth == png::BitDepth::Sixteen {
        return Err(Error::UnsupportedFormat("16-bit PNG".into()));
    }
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!("PNG bit depth {depth:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::InvalidImage("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_error)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let (src_channels, keep) = match color {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat("unexpanded palette PNG".into()))
        }
    };
    let mut data = Vec::with_capacity(w * h * keep);
    for row in buf.chunks_exact(info.line_size).take(h) {
        for px in row[..w * src_channels].chunks_exact(src_channels) {
            data.extend(px[..keep].iter().map(|&b| f64::from(b) / 255.0));
        }
    }
    Image::new(w, h, keep, data)
}

fn png_error(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::Truncated(format!("PNG: {io}")),
        other => Error::InvalidImage(format!("PNG: {other}")),
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Truncated("PNM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::InvalidImage("PNM header: expected a number".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidImage("PNM header: number out of range".into()))?;
    }
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("PNM maxval {maxval} (only 255)")));
    }
    if w == 0 || h == 0 {
        return Err(Error::InvalidImage(format!("zero dimension {w}x{h}")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Truncated("PNM header".into())),
    }
    let need = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::InvalidImage("PNM dimensions overflow".into()))?;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(Error::Truncated(format!(
            "PNM raster has {} of {need} bytes",
            raster.len()
        )));
    }
    let data = raster[..need].iter().map(|&b| f64::from(b) / 255.0).collect();
    Image::new(w, h, channels, data)
}

/// Write `img` as PNG, PGM or PPM according to the file extension
/// (`.pnm` picks PGM or PPM from the channel count).
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let bytes = match ext.as_str() {
        "png" => encode_png(img)?,
        "pgm" | "ppm" | "pnm" => {
            let want = match ext.as_str() {
                "pgm" => 1,
                "ppm" => 3,
                _ => img.channels(),
            };
            if want != img.channels() {
                return Err(Error::param(
                    "path",
                    format!(".{ext} needs {want} channel(s), image has {}", img.channels()),
                ));
            }
            encode_pnm(img)
        }
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "cannot infer format from extension `{other}`"
            )))
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn quantized(img: &Image) -> Vec<u8> {
    img.data().iter().map(|&v| quantize_u8(v)).collect()
}

pub(crate) fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(quantized(img));
    out
}

/// 8-bit PNG bytes (grayscale or RGB) of the quantized image.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(if img.channels() == 1 {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::InvalidImage(format!("PNG encode: {e}")))?;
        writer
            .write_image_data(&quantized(img))
            .map_err(|e| Error::InvalidImage(format!("PNG encode: {e}")))?;
        writer
            .finish()
            .map_err(|e| Error::InvalidImage(format!("PNG encode: {e}")))?;
    }
    Ok(out)
}
