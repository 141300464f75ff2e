use std::path::Path;

use serde::Deserialize;
use wmbench::metrics::{roc, tpr_at_fpr};

use crate::error::{CliError, Result};
use crate::output::{num, svg_plot, Series, Table};
use crate::run::{Ctx, StageExt};

/// Scores split by label.
#[derive(Debug, Clone, Default)]
pub struct Scores {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

#[derive(Deserialize)]
struct ScoreRow {
    id: String,
    label: u8,
    score: f64,
}

/// Read a `id,label,score` CSV (label 1 positive, 0 negative). Every bad row
/// is reported.
pub fn read_scores(path: &Path) -> Result<Scores> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::invalid("roc.scores", e))?;
    let mut out = Scores::default();
    let mut errs = Vec::new();
    for (i, rec) in rdr.deserialize::<ScoreRow>().enumerate() {
        let line = i + 2;
        match rec {
            Err(e) => errs.push(format!("roc.scores line {line}: {e}")),
            Ok(r) if !r.score.is_finite() => errs.push(format!("roc.scores line {line} ({}): score is not finite", r.id)),
            Ok(r) => match r.label {
                1 => out.pos.push(r.score),
                0 => out.neg.push(r.score),
                l => errs.push(format!("roc.scores line {line} ({}): label {l} is not 0 or 1", r.id)),
            },
        }
    }
    if out.pos.is_empty() || out.neg.is_empty() {
        errs.push("roc.scores: need at least one row of each label".into());
    }
    if errs.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Invalid(errs))
    }
}

/// ROC of ingested scores: the curve in `roc.csv`, summary in `roc_summary.csv`.
pub fn eval_roc(ctx: &Ctx, scores: &Scores) -> Result<()> {
    let c = roc(&scores.pos, &scores.neg).stage("roc")?;
    let mut t = Table::new(&["threshold", "fpr", "tpr"]);
    for (th, (f, p)) in c.thresholds.iter().zip(&c.points) {
        t.push(vec![num(*th), num(*f), num(*p)]);
    }
    let mut s = Table::new(&["metric", "value"]);
    s.push(vec!["auroc".into(), num(c.auroc)]);
    s.push(vec!["n_pos".into(), c.n_pos.to_string()]);
    s.push(vec!["n_neg".into(), c.n_neg.to_string()]);
    s.push(vec!["min_total_error".into(), num(c.min_total_error())]);
    let levels = if ctx.cfg.roc.fpr_levels.is_empty() {
        vec![0.001, 0.01, 0.1]
    } else {
        ctx.cfg.roc.fpr_levels.clone()
    };
    for l in levels {
        s.push(vec![format!("tpr_at_fpr_{l}"), num(tpr_at_fpr(&c, l).stage("roc")?)]);
    }
    ctx.emit_table("roc.csv", &t)?;
    ctx.emit_table("roc_summary.csv", &s)?;
    ctx.emit_svg("roc.svg", || {
        svg_plot(
            &format!("ROC (AUROC {:.4})", c.auroc),
            "false positive rate",
            "true positive rate",
            &[Series { label: "detector".into(), points: c.points.clone() }],
        )
    })
}
