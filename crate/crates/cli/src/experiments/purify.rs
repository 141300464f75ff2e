use wmbench::attack::{purify, DiffusionSchedule, Denoiser};
use wmbench::metrics::{mean_paired_l2, psnr, roc, tpr_at_fpr, RocCurve};
use wmbench::rng::derive_indexed;
use wmbench::theory::{theorem1_bound, BoundQuery};
use wmbench::watermark::{WatermarkKey, WatermarkScheme};
use wmbench::Image;

use super::{confidences, embed_all, mean, scheme_and_key};
use crate::corpus::Corpus;
use crate::error::{CliError, Result};
use crate::output::{num, svg_plot, Series, Table};
use crate::run::{par_map, Ctx, StageExt};

/// Purify every image with the same per-image noise field regardless of
/// `t`, so curves over `t` differ only through the schedule.
fn purify_all(
    images: &[Image],
    sched: &DiffusionSchedule,
    t: f64,
    den: &Denoiser,
    seed: u64,
    role: &str,
) -> Result<Vec<Image>> {
    par_map(images, |i, x| {
        purify(x, sched, t, den, derive_indexed(seed, role, i as u64)).stage("purify")
    })
}

fn bound(w: f64, sched: &DiffusionSchedule, t: f64) -> Result<f64> {
    theorem1_bound(&BoundQuery {
        wasserstein: w,
        schedule: sched.clone(),
        t,
    })
    .stage("bound")
}

fn curve(pos: &[f64], neg: &[f64]) -> Result<RocCurve> {
    roc(pos, neg).stage("roc")
}

/// Purification sweep over denoisers and `t`: per-image confidences in
/// `purify.csv`, detector ROC statistics per setting in `purify_summary.csv`.
pub fn attack_purify(ctx: &Ctx, corpus: &Corpus) -> Result<()> {
    let p = &ctx.cfg.purify;
    let (scheme, key) = scheme_and_key(ctx)?;
    let sched = p.schedule.build().stage("schedule")?;
    let clean = &corpus.images;
    let wm = embed_all(corpus, &key, &scheme)?;
    let w = mean_paired_l2(&wm, clean).stage("distance")?;
    let seed = ctx.seed("purify");

    let mut summary = Table::new(&[
        "denoiser",
        "t",
        "alpha_bar",
        "auroc",
        "tpr_at_fpr_0.01",
        "min_total_error",
        "mean_conf_wm",
        "mean_conf_clean",
        "w_paired",
        "theorem1_bound",
    ]);
    let mut per_image = Table::new(&["id", "denoiser", "t", "conf_wm", "conf_clean", "psnr_wm"]);
    let push_summary = |s: &mut Table, name: &str, t: f64, ab: f64, pos: &[f64], neg: &[f64], b: f64| -> Result<f64> {
        let c = curve(pos, neg)?;
        s.push(vec![
            name.into(),
            num(t),
            num(ab),
            num(c.auroc),
            num(tpr_at_fpr(&c, 0.01).stage("roc")?),
            num(c.min_total_error()),
            num(mean(pos)),
            num(mean(neg)),
            num(w),
            num(b),
        ]);
        Ok(c.auroc)
    };

    let pos0 = confidences(&wm, &key, &scheme)?;
    let neg0 = confidences(clean, &key, &scheme)?;
    push_summary(&mut summary, "none", 0.0, 1.0, &pos0, &neg0, if w > 0.0 { 0.0 } else { 1.0 })?;

    let mut series = Vec::new();
    for den in &p.denoisers {
        let mut pts = Vec::new();
        for &t in &p.ts {
            let pw = purify_all(&wm, &sched, t, den, seed, "wm")?;
            let pc = purify_all(clean, &sched, t, den, seed, "clean")?;
            let pos = confidences(&pw, &key, &scheme)?;
            let neg = confidences(&pc, &key, &scheme)?;
            let q = par_map(&pw, |i, x| psnr(&wm[i], x).stage("psnr"))?;
            for i in 0..corpus.len() {
                per_image.push(vec![
                    corpus.ids[i].clone(),
                    den.name().into(),
                    num(t),
                    num(pos[i]),
                    num(neg[i]),
                    num(q[i]),
                ]);
                ctx.record(
                    &corpus.ids[i],
                    &[
                        ("denoiser", den.name().into()),
                        ("t", num(t)),
                        ("conf_wm", num(pos[i])),
                        ("conf_clean", num(neg[i])),
                    ],
                );
            }
            let ab = sched.alpha_bar_at(t);
            let auroc = push_summary(&mut summary, den.name(), t, ab, &pos, &neg, bound(w, &sched, t)?)?;
            pts.push((t, auroc));
        }
        series.push(Series { label: den.name().into(), points: pts });
    }
    ctx.emit_table("purify.csv", &per_image)?;
    ctx.emit_table("purify_summary.csv", &summary)?;
    ctx.emit_svg("purify_auroc.svg", || {
        svg_plot("Detector AUROC after purification", "t", "AUROC", &series)
    })
}

struct SchemeSet {
    scheme: WatermarkScheme,
    wm: Vec<Image>,
    w: f64,
}

/// Theorem-1 certification: for every scheme, denoiser and `t`, the smallest
/// `e₀ + e₁` over all detector thresholds must reach the bound minus the
/// slack. Writes `certify.csv`, then fails if any row does not hold.
pub fn certify(ctx: &Ctx, corpus: &Corpus) -> Result<()> {
    let c = &ctx.cfg.certify;
    let sched = c.schedule.build().stage("schedule")?;
    let key: WatermarkKey = ctx.cfg.scheme.key(ctx.seed("key"))?;
    let seed = ctx.seed("purify");
    let clean = &corpus.images;

    let mut sets = Vec::new();
    for &kind in &c.schemes {
        let scheme = WatermarkScheme::default_for(kind);
        let wm = embed_all(corpus, &key, &scheme)?;
        let w = mean_paired_l2(&wm, clean).stage("distance")?;
        sets.push(SchemeSet { scheme, wm, w });
    }

    let mut t_out = Table::new(&[
        "scheme",
        "denoiser",
        "t",
        "alpha_bar",
        "w_paired",
        "bound",
        "min_total_error",
        "margin",
        "pass",
    ]);
    let mut failures = Vec::new();
    for den in &c.denoisers {
        for &t in &c.ts {
            let pc = purify_all(clean, &sched, t, den, seed, "clean")?;
            for set in &sets {
                let pw = purify_all(&set.wm, &sched, t, den, seed, "wm")?;
                let pos = confidences(&pw, &key, &set.scheme)?;
                let neg = confidences(&pc, &key, &set.scheme)?;
                let err = curve(&pos, &neg)?.min_total_error();
                let b = bound(set.w, &sched, t)?;
                let margin = err - (b - c.slack);
                let pass = margin >= 0.0;
                let name = set.scheme.kind.name();
                if !pass {
                    failures.push(format!("{name}/{}/t={t}: {err} < {b} - {}", den.name(), c.slack));
                }
                t_out.push(vec![
                    name.into(),
                    den.name().into(),
                    num(t),
                    num(sched.alpha_bar_at(t)),
                    num(set.w),
                    num(b),
                    num(err),
                    num(margin),
                    if pass { "1" } else { "0" }.into(),
                ]);
                ctx.record(
                    format!("{name}/{}/{t}", den.name()),
                    &[("bound", num(b)), ("min_total_error", num(err)), ("pass", pass.to_string())],
                );
            }
        }
    }
    ctx.emit_table("certify.csv", &t_out)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion {
            stage: "certify".into(),
            message: format!("bound violated: {}", failures.join("; ")),
        })
    }
}
