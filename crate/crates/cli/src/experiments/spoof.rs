use wmbench::attack::{make_watermarked_noise, spoof, SpoofConfig};
use wmbench::metrics::psnr;
use wmbench::rng::derive_indexed;
use wmbench::watermark::detect;

use super::{mean, scheme_and_key};
use crate::corpus::Corpus;
use crate::error::Result;
use crate::output::{num, Table};
use crate::run::{par_map, Ctx, StageExt};

/// Blend keyed watermarked noise into each clean image and compare detector
/// confidence before and after.
pub fn attack_spoof(ctx: &Ctx, corpus: &Corpus) -> Result<()> {
    let (scheme, key) = scheme_and_key(ctx)?;
    let sp = ctx.cfg.spoof;
    let seed = ctx.seed("spoof");
    let rows = par_map(&corpus.images, |i, x| {
        let cfg = SpoofConfig {
            mixup_alpha: sp.mixup_alpha,
            noise_std: sp.noise_std,
            seed: derive_indexed(seed, "image", i as u64),
        };
        let noise = make_watermarked_noise(x.width(), x.height(), x.channels(), &key, &scheme, &cfg)
            .stage("noise")?;
        let s = spoof(x, &noise).stage("spoof")?;
        let before = detect(x, &key, &scheme).stage("detect")?.confidence;
        let after = detect(&s, &key, &scheme).stage("detect")?.confidence;
        Ok((before, after, psnr(x, &s).stage("psnr")?))
    })?;

    let mut t = Table::new(&["id", "conf_before", "conf_after", "increased", "psnr"]);
    for (id, &(b, a, q)) in corpus.ids.iter().zip(&rows) {
        let up = if a > b { "1" } else { "0" };
        t.push(vec![id.clone(), num(b), num(a), up.into(), num(q)]);
        ctx.record(id, &[("conf_before", num(b)), ("conf_after", num(a))]);
    }
    let before: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let after: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let up = rows.iter().filter(|r| r.1 > r.0).count() as f64 / rows.len() as f64;
    let mut s = Table::new(&["metric", "value"]);
    s.push(vec!["fraction_increased".into(), num(up)]);
    s.push(vec!["mean_conf_before".into(), num(mean(&before))]);
    s.push(vec!["mean_conf_after".into(), num(mean(&after))]);
    ctx.emit_table("spoof.csv", &t)?;
    ctx.emit_table("spoof_summary.csv", &s)
}
