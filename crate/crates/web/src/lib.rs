//! wasm-bindgen bindings behind `www/index.html`. Each export wraps a plain
//! Rust function of the same shape that returns `Result<_, String>`; the
//! tests call those natively.

use wasm_bindgen::prelude::*;
use wmbench::attack::{make_watermarked_noise, purify, spoof, Denoiser, ScheduleParams, SpoofConfig};
use wmbench::image::quantize_u8;
use wmbench::metrics::psnr;
use wmbench::synth::synth_image;
use wmbench::theory::{theorem1_bound, BoundQuery};
use wmbench::watermark::{detect, embed, SchemeKind, WatermarkKey, WatermarkScheme};
use wmbench::Image;

/// Side of the demo images.
pub const SIDE: usize = 128;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// Purification bound curves as JSON: `{"ws": [...], "curves": [[...], ...]}`
/// with one curve per entry of `ts`, over `points` distances in `[0, w_max]`.
pub fn bound_curves_json(beta_start: f64, beta_end: f64, ts: &[f64], w_max: f64, points: usize) -> Result<String, String> {
    let sched = ScheduleParams { n_steps: 1000, beta_start, beta_end }.build().map_err(err)?;
    if points < 2 || !(w_max > 0.0) {
        return Err("need points >= 2 and w_max > 0".into());
    }
    let ws: Vec<f64> = (0..points).map(|i| w_max * i as f64 / (points - 1) as f64).collect();
    let curves = ts
        .iter()
        .map(|&t| {
            ws.iter()
                .map(|&w| theorem1_bound(&BoundQuery { wasserstein: w, schedule: sched.clone(), t }))
                .collect::<wmbench::Result<Vec<f64>>>()
        })
        .collect::<wmbench::Result<Vec<_>>>()
        .map_err(err)?;
    Ok(serde_json::json!({ "ws": ws, "curves": curves }).to_string())
}

#[wasm_bindgen(js_name = boundCurves)]
pub fn bound_curves(beta_start: f64, beta_end: f64, ts: Vec<f64>, w_max: f64, points: usize) -> Result<String, JsError> {
    bound_curves_json(beta_start, beta_end, &ts, w_max, points).map_err(js)
}

/// Before/after pair of grayscale images with detector confidences.
#[wasm_bindgen]
pub struct DemoResult {
    before: Image,
    after: Image,
    conf_before: f64,
    conf_after: f64,
    psnr: f64,
}

#[wasm_bindgen]
impl DemoResult {
    pub fn width(&self) -> usize {
        self.before.width()
    }

    pub fn height(&self) -> usize {
        self.before.height()
    }

    /// RGBA bytes for a canvas `ImageData`.
    pub fn before_rgba(&self) -> Vec<u8> {
        rgba(&self.before)
    }

    pub fn after_rgba(&self) -> Vec<u8> {
        rgba(&self.after)
    }

    pub fn conf_before(&self) -> f64 {
        self.conf_before
    }

    pub fn conf_after(&self) -> f64 {
        self.conf_after
    }

    pub fn psnr(&self) -> f64 {
        self.psnr
    }
}

fn rgba(img: &Image) -> Vec<u8> {
    let luma = img.luma();
    luma.data()
        .iter()
        .flat_map(|&v| {
            let g = quantize_u8(v);
            [g, g, g, 255]
        })
        .collect()
}

fn scheme() -> WatermarkScheme {
    WatermarkScheme::default_for(SchemeKind::SsDct)
}

/// Watermark a synthetic image, then purify it at diffusion time `t` with
/// `denoiser` (`"wavelet"` or `"tv"`).
pub fn run_purify(image_seed: u64, t: f64, denoiser: &str, noise_seed: u64) -> Result<DemoResult, String> {
    let den = match denoiser {
        "wavelet" => Denoiser::wavelet_default(),
        "tv" => Denoiser::tv_default(),
        other => return Err(format!("unknown denoiser {other}")),
    };
    let key = WatermarkKey::from_seed(image_seed);
    let clean = synth_image(image_seed, SIDE, SIDE, 1).map_err(err)?;
    let marked = embed(&clean, &key, &scheme()).map_err(err)?;
    let sched = ScheduleParams::default().build().map_err(err)?;
    let purified = purify(&marked, &sched, t, &den, noise_seed).map_err(err)?;
    finish(marked, purified, &key)
}

/// Blend keyed watermarked noise into a clean synthetic image.
pub fn run_spoof(image_seed: u64, mixup_alpha: f64, noise_seed: u64) -> Result<DemoResult, String> {
    let key = WatermarkKey::from_seed(image_seed);
    let clean = synth_image(image_seed, SIDE, SIDE, 1).map_err(err)?;
    let cfg = SpoofConfig { mixup_alpha, seed: noise_seed, ..SpoofConfig::default() };
    let noise = make_watermarked_noise(SIDE, SIDE, 1, &key, &scheme(), &cfg).map_err(err)?;
    let spoofed = spoof(&clean, &noise).map_err(err)?;
    finish(clean, spoofed, &key)
}

#[wasm_bindgen(js_name = purifyDemo)]
pub fn purify_demo(image_seed: u64, t: f64, denoiser: &str, noise_seed: u64) -> Result<DemoResult, JsError> {
    run_purify(image_seed, t, denoiser, noise_seed).map_err(js)
}

#[wasm_bindgen(js_name = spoofDemo)]
pub fn spoof_demo(image_seed: u64, mixup_alpha: f64, noise_seed: u64) -> Result<DemoResult, JsError> {
    run_spoof(image_seed, mixup_alpha, noise_seed).map_err(js)
}

fn finish(before: Image, after: Image, key: &WatermarkKey) -> Result<DemoResult, String> {
    let s = scheme();
    Ok(DemoResult {
        conf_before: detect(&before, key, &s).map_err(err)?.confidence,
        conf_after: detect(&after, key, &s).map_err(err)?.confidence,
        psnr: psnr(&before, &after).map_err(err)?,
        before,
        after,
    })
}
