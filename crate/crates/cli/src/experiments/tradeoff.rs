use wmbench::substitute::{spearman, tradeoff_experiment};

use crate::error::Result;
use crate::output::{num, svg_plot, Series, Table};
use crate::run::{Ctx, StageExt};

/// Robustness/reliability trade-off on synthetic latent data. The block's
/// own `seed` is replaced by the run's `tradeoff` stage seed.
pub fn tradeoff(ctx: &Ctx) -> Result<()> {
    let mut cfg = ctx.cfg.tradeoff.clone();
    cfg.seed = ctx.seed("tradeoff");
    let table = tradeoff_experiment(&cfg, None).stage("tradeoff")?;

    let mut rows = Table::new(&[
        "trial",
        "train_sigma",
        "inference_sigma",
        "alpha",
        "auroc",
        "hard_auroc",
        "hard_auroc_noisy",
        "lemma1_bound",
        "bracketed",
    ]);
    for r in &table.rows {
        rows.push(vec![
            r.trial.to_string(),
            num(r.train_sigma),
            num(r.inference_sigma),
            num(r.alpha),
            num(r.auroc),
            num(r.hard_auroc),
            num(r.hard_auroc_noisy),
            num(r.lemma1_bound),
            if r.bracketed { "1" } else { "0" }.into(),
        ]);
        ctx.record(
            format!("trial{}/sigma{}", r.trial, r.train_sigma),
            &[("inference_sigma", num(r.inference_sigma)), ("auroc", num(r.auroc))],
        );
    }
    let mut summary = Table::new(&["train_sigma", "inference_sigma", "auroc", "hard_auroc"]);
    for s in &table.summary {
        summary.push(vec![num(s.train_sigma), num(s.inference_sigma), num(s.auroc), num(s.hard_auroc)]);
    }
    let col = |f: fn(&wmbench::substitute::TradeoffSummary) -> f64| -> Vec<f64> { table.summary.iter().map(f).collect() };
    let (train, inf, auroc) = (col(|s| s.train_sigma), col(|s| s.inference_sigma), col(|s| s.auroc));
    let excess = table
        .rows
        .iter()
        .map(|r| r.hard_auroc - r.lemma1_bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut stats = Table::new(&["statistic", "value"]);
    stats.push(vec!["spearman_train_vs_inference_sigma".into(), num(spearman(&train, &inf))]);
    stats.push(vec!["spearman_inference_sigma_vs_auroc".into(), num(spearman(&inf, &auroc))]);
    stats.push(vec!["lemma1_max_excess".into(), num(excess)]);
    stats.push(vec![
        "unbracketed_rows".into(),
        table.rows.iter().filter(|r| !r.bracketed).count().to_string(),
    ]);

    ctx.emit_table("tradeoff_rows.csv", &rows)?;
    ctx.emit_table("tradeoff.csv", &summary)?;
    ctx.emit_table("tradeoff_stats.csv", &stats)?;
    ctx.emit_svg("tradeoff.svg", || {
        svg_plot(
            "AUROC vs. inference sigma at the target alpha",
            "inference sigma",
            "AUROC",
            &[Series { label: "trial mean".into(), points: inf.iter().copied().zip(auroc.iter().copied()).collect() }],
        )
    })
}
