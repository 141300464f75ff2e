use wmbench::image::encode_png;
use wmbench::metrics::quality;
use wmbench::watermark::detect as detect_one;

use super::scheme_and_key;
use crate::corpus::Corpus;
use crate::error::Result;
use crate::output::{num, Table};
use crate::run::{par_map, Ctx, StageExt};

/// Watermark the corpus: marked PNGs under `images/`, the key in `key.txt`
/// and per-image quality and detection scores in `embed.csv`.
pub fn embed(ctx: &Ctx, corpus: &Corpus) -> Result<()> {
    let (scheme, key) = scheme_and_key(ctx)?;
    let rows = par_map(&corpus.images, |i, x| {
        let wm = wmbench::watermark::embed(x, &key, &scheme).stage("embed")?;
        let q = quality(x, &wm).stage("quality")?;
        let d = detect_one(&wm, &key, &scheme).stage("detect")?;
        let png = encode_png(&wm).stage("encode")?;
        Ok((corpus.ids[i].clone(), q, d, png))
    })?;
    ctx.emit("key.txt", format!("{key}\n").as_bytes())?;
    let mut t = Table::new(&["id", "psnr", "ssim", "l2", "confidence", "bit_accuracy"]);
    for (id, q, d, png) in &rows {
        ctx.emit(&format!("images/{id}.png"), png)?;
        t.push(vec![
            id.clone(),
            num(q.psnr),
            num(q.ssim),
            num(q.l2),
            num(d.confidence),
            num(d.bit_accuracy),
        ]);
        ctx.record(id, &[("psnr", num(q.psnr)), ("ssim", num(q.ssim)), ("confidence", num(d.confidence))]);
    }
    ctx.emit_table("embed.csv", &t)
}

/// Score every corpus image with the keyed detector.
pub fn detect(ctx: &Ctx, corpus: &Corpus) -> Result<()> {
    let (scheme, key) = scheme_and_key(ctx)?;
    let thr = ctx.cfg.detect.threshold;
    let dets = par_map(&corpus.images, |_, x| detect_one(x, &key, &scheme).stage("detect"))?;
    let mut t = Table::new(&["id", "confidence", "bit_accuracy", "watermarked"]);
    for (id, d) in corpus.ids.iter().zip(&dets) {
        let flag = if d.confidence >= thr { "1" } else { "0" };
        t.push(vec![id.clone(), num(d.confidence), num(d.bit_accuracy), flag.into()]);
        ctx.record(id, &[("confidence", num(d.confidence)), ("watermarked", flag.into())]);
    }
    ctx.emit_table("detect.csv", &t)
}
