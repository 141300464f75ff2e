use wmbench::attack::{mitigate_blur, mitigate_jpeg};
use wmbench::metrics::{psnr, roc};
use wmbench::Image;

use super::{confidences, embed_all, mean, scheme_and_key};
use crate::corpus::Corpus;
use crate::error::Result;
use crate::output::{num, Table};
use crate::run::{par_map, Ctx, StageExt};

/// JPEG re-encoding and Gaussian blur applied to marked and clean images.
pub fn mitigate(ctx: &Ctx, corpus: &Corpus) -> Result<()> {
    let m = &ctx.cfg.mitigate;
    let (scheme, key) = scheme_and_key(ctx)?;
    let clean = &corpus.images;
    let wm = embed_all(corpus, &key, &scheme)?;

    let mut t = Table::new(&["attack", "param", "auroc", "mean_conf_wm", "mean_conf_clean", "mean_psnr_wm"]);
    let mut run = |name: &str, param: String, f: &(dyn Fn(&Image) -> wmbench::Result<Image> + Sync)| -> Result<()> {
        let aw = par_map(&wm, |_, x| f(x).stage(name))?;
        let ac = par_map(clean, |_, x| f(x).stage(name))?;
        let pos = confidences(&aw, &key, &scheme)?;
        let neg = confidences(&ac, &key, &scheme)?;
        let q = par_map(&aw, |i, x| psnr(&wm[i], x).stage("psnr"))?;
        let auroc = roc(&pos, &neg).stage("roc")?.auroc;
        for (i, id) in corpus.ids.iter().enumerate() {
            ctx.record(id, &[("attack", name.into()), ("param", param.clone()), ("conf_wm", num(pos[i]))]);
        }
        t.push(vec![name.into(), param, num(auroc), num(mean(&pos)), num(mean(&neg)), num(mean(&q))]);
        Ok(())
    };
    for &q in &m.jpeg_qualities {
        run("jpeg", q.to_string(), &|x| mitigate_jpeg(x, q))?;
    }
    for &k in &m.blur_kernels {
        run("blur", k.to_string(), &|x| mitigate_blur(x, k))?;
    }
    ctx.emit_table("mitigate.csv", &t)
}
