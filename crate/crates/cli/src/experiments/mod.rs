//! Experiment recipes. Each writes its CSVs through [`Ctx`] and records
//! per-item rows for the manifest.

pub mod adversarial;
pub mod mitigate;
pub mod purify;
pub mod roc;
pub mod spoof;
pub mod theory;
pub mod tradeoff;
pub mod watermark;

pub use roc::Scores;

use wmbench::watermark::{WatermarkKey, WatermarkScheme};

use crate::config::ExperimentKind;
use crate::corpus::Corpus;
use crate::error::Result;
use crate::run::{Ctx, Inputs};

pub(crate) fn execute(ctx: &Ctx, inputs: Inputs) -> Result<()> {
    let corpus = || inputs.corpus.as_ref().expect("corpus loaded for this experiment");
    match ctx.cfg.kind {
        ExperimentKind::Embed => watermark::embed(ctx, corpus()),
        ExperimentKind::Detect => watermark::detect(ctx, corpus()),
        ExperimentKind::AttackPurify => purify::attack_purify(ctx, corpus()),
        ExperimentKind::Certify => purify::certify(ctx, corpus()),
        ExperimentKind::AttackAdv => adversarial::attack_adv(ctx, corpus()),
        ExperimentKind::AttackSpoof => spoof::attack_spoof(ctx, corpus()),
        ExperimentKind::Mitigate => mitigate::mitigate(ctx, corpus()),
        ExperimentKind::EvalRoc => roc::eval_roc(ctx, inputs.scores.as_ref().expect("scores loaded")),
        ExperimentKind::TheoryBound => theory::theory_bound(ctx),
        ExperimentKind::Tradeoff => tradeoff::tradeoff(ctx),
    }
}

/// Scheme and key for single-scheme experiments; the key comes from the
/// `key` stage seed unless the config pins one.
pub(crate) fn scheme_and_key(ctx: &Ctx) -> Result<(WatermarkScheme, WatermarkKey)> {
    let scheme = ctx.cfg.scheme.scheme()?;
    let key = ctx.cfg.scheme.key(ctx.seed("key"))?;
    Ok((scheme, key))
}

/// Watermark every corpus image.
pub(crate) fn embed_all(corpus: &Corpus, key: &WatermarkKey, scheme: &WatermarkScheme) -> Result<Vec<wmbench::Image>> {
    use crate::run::{par_map, StageExt};
    par_map(&corpus.images, |_, x| wmbench::watermark::embed(x, key, scheme).stage("embed"))
}

/// Detector confidences for a set of images.
pub(crate) fn confidences(images: &[wmbench::Image], key: &WatermarkKey, scheme: &WatermarkScheme) -> Result<Vec<f64>> {
    use crate::run::{par_map, StageExt};
    par_map(images, |_, x| {
        wmbench::watermark::detect(x, key, scheme).map(|d| d.confidence).stage("detect")
    })
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
