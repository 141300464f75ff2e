use rayon::prelude::*;
use wmbench::metrics::roc;
use wmbench::rng::derive_indexed;
use wmbench::substitute::{
    pgd_attack_batch, train_classifier, uniform_noise_attack, write_checkpoint, FeatureSpec, PgdConfig,
    SubstituteClassifier, CLEAN, WATERMARKED,
};
use wmbench::Image;

use super::{confidences, embed_all, mean, scheme_and_key};
use crate::config::AttackDirection;
use crate::corpus::Corpus;
use crate::error::{CliError, Result};
use crate::output::{num, svg_plot, Series, Table};
use crate::run::{Ctx, StageExt};

struct EpsResult {
    eps_255: f64,
    pgd: Outcome,
    uniform: Option<Outcome>,
}

struct Outcome {
    auroc: f64,
    confidences: Vec<f64>,
    target_rate: f64,
    max_linf: f64,
}

fn max_linf(a: &[Image], b: &[Image]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.data().iter().zip(y.data()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn target_rate(clf: &SubstituteClassifier, images: &[Image], target: usize) -> Result<f64> {
    let hits = images
        .iter()
        .map(|x| clf.predict(x).map(|k| k == target))
        .collect::<wmbench::Result<Vec<bool>>>()
        .stage("predict")?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / images.len() as f64)
}

/// Model-substitution attack: train a substitute on watermarked vs. clean
/// images, run PGD against it at each budget and score the transfer to the
/// true keyed detector, alongside a uniform-noise baseline at twice the budget.
pub fn attack_adv(ctx: &Ctx, corpus: &Corpus) -> Result<()> {
    let a = &ctx.cfg.adversarial;
    let (scheme, key) = scheme_and_key(ctx)?;
    let (train, rest) = corpus.split_at(a.train_n);
    let test = rest.take(a.test_n);
    let train_wm = embed_all(&train, &key, &scheme)?;
    let test_wm = embed_all(&test, &key, &scheme)?;

    let first = &corpus.images[0];
    let side = a.downsample.unwrap_or(first.width().min(first.height()));
    let spec = FeatureSpec::new(side, a.dct_k);
    let mut tc = a.train.clone();
    tc.seed = ctx.seed("substitute");
    let clf = train_classifier(&train_wm, &train.images, &spec, &tc).stage("train")?;

    let mut ckpt = Vec::new();
    write_checkpoint(&clf, &mut ckpt).map_err(|e| CliError::io("substitute.wmsc", e))?;
    ctx.emit("substitute.wmsc", &ckpt)?;
    let mut log = Table::new(&["epoch", "loss"]);
    for (i, l) in clf.log.epoch_losses.iter().enumerate() {
        log.push(vec![(i + 1).to_string(), num(*l)]);
    }
    ctx.emit_table("adv_train.csv", &log)?;
    let mut sub = Table::new(&["metric", "value"]);
    sub.push(vec!["val_accuracy".into(), num(clf.log.val_accuracy)]);
    sub.push(vec!["feature_dim".into(), spec.dim().to_string()]);
    sub.push(vec!["train_per_class".into(), train.len().to_string()]);
    ctx.emit_table("substitute.csv", &sub)?;

    // removal attacks marked images toward the clean class; spoofing attacks
    // clean images toward the marked class
    let (source, other, target) = match a.direction {
        AttackDirection::Removal => (&test_wm, &test.images, CLEAN),
        AttackDirection::Spoof => (&test.images, &test_wm, WATERMARKED),
    };
    let other_conf = confidences(other, &key, &scheme)?;
    let score = |attacked: &[Image]| -> Result<(f64, Vec<f64>)> {
        let conf = confidences(attacked, &key, &scheme)?;
        let curve = match a.direction {
            AttackDirection::Removal => roc(&conf, &other_conf),
            AttackDirection::Spoof => roc(&other_conf, &conf),
        }
        .stage("roc")?;
        Ok((curve.auroc, conf))
    };
    let noise_seed = ctx.seed("uniform-noise");

    let results: Vec<EpsResult> = a
        .epsilons_255
        .par_iter()
        .enumerate()
        .map(|(k, &e)| -> Result<EpsResult> {
            let eps = e / 255.0;
            let attacked = if eps > 0.0 {
                let cfg = PgdConfig { epsilon: eps, ..a.pgd };
                pgd_attack_batch(source, &clf, &cfg, target).stage("pgd")?
            } else {
                source.clone()
            };
            let (auroc, conf) = score(&attacked)?;
            let pgd = Outcome {
                auroc,
                confidences: conf,
                target_rate: target_rate(&clf, &attacked, target)?,
                max_linf: max_linf(&attacked, source),
            };
            let uniform = if eps > 0.0 {
                let stage = derive_indexed(noise_seed, "eps", k as u64);
                let noisy: Vec<Image> = source
                    .iter()
                    .enumerate()
                    .map(|(i, x)| uniform_noise_attack(x, 2.0 * eps, derive_indexed(stage, "image", i as u64)))
                    .collect();
                let (auroc, conf) = score(&noisy)?;
                Some(Outcome {
                    auroc,
                    confidences: conf,
                    target_rate: target_rate(&clf, &noisy, target)?,
                    max_linf: max_linf(&noisy, source),
                })
            } else {
                None
            };
            Ok(EpsResult { eps_255: e, pgd, uniform })
        })
        .collect::<Result<_>>()?;

    let mut t = Table::new(&[
        "epsilon_255",
        "method",
        "auroc",
        "mean_confidence",
        "substitute_target_rate",
        "max_linf",
    ]);
    let mut per_image = Table::new(&["id", "epsilon_255", "method", "confidence"]);
    let mut pgd_pts = Vec::new();
    let mut uni_pts = Vec::new();
    for r in &results {
        for (method, o) in [("pgd", Some(&r.pgd)), ("uniform_2x", r.uniform.as_ref())] {
            let Some(o) = o else { continue };
            t.push(vec![
                num(r.eps_255),
                method.into(),
                num(o.auroc),
                num(mean(&o.confidences)),
                num(o.target_rate),
                num(o.max_linf),
            ]);
            for (id, c) in test.ids.iter().zip(&o.confidences) {
                per_image.push(vec![id.clone(), num(r.eps_255), method.into(), num(*c)]);
                ctx.record(id, &[("epsilon_255", num(r.eps_255)), ("method", method.into()), ("confidence", num(*c))]);
            }
        }
        pgd_pts.push((r.eps_255, r.pgd.auroc));
        uni_pts.push((r.eps_255, r.uniform.as_ref().map_or(r.pgd.auroc, |u| u.auroc)));
    }
    ctx.emit_table("adv.csv", &t)?;
    ctx.emit_table("adv_images.csv", &per_image)?;
    ctx.emit_svg("adv_auroc.svg", || {
        svg_plot(
            "True-detector AUROC under transferred PGD",
            "epsilon (1/255)",
            "AUROC",
            &[
                Series { label: "PGD".into(), points: pgd_pts },
                Series { label: "uniform noise, 2 eps".into(), points: uni_pts },
            ],
        )
    })
}
