use wmbench::theory::{psi_sigma, theorem1_bound, theorem2_bound, BoundQuery, TradeoffBoundQuery};

use crate::error::Result;
use crate::output::{num, svg_plot, Series, Table};
use crate::run::{Ctx, StageExt};

/// Bound grids. `theorem1.csv` has one row per `W` and one column per `t`;
/// `theorem2.csv` is long-form over `(alpha, sigma, w_latent)`.
pub fn theory_bound(ctx: &Ctx) -> Result<()> {
    let p = &ctx.cfg.theory;
    let sched = p.schedule.build().stage("schedule")?;

    let mut sch = Table::new(&["t", "step", "alpha_bar", "rescaled_noise_std"]);
    for &t in &p.ts {
        sch.push(vec![
            num(t),
            sched.step_for(t).to_string(),
            num(sched.alpha_bar_at(t)),
            num(sched.rescaled_noise_std(t)),
        ]);
    }

    let header: Vec<String> = std::iter::once("w".to_string())
        .chain(p.ts.iter().map(|t| format!("bound_t{t}")))
        .collect();
    let mut t1 = Table {
        header,
        rows: Vec::new(),
    };
    let mut curves: Vec<Series> = p
        .ts
        .iter()
        .map(|t| Series { label: format!("t = {t}"), points: Vec::new() })
        .collect();
    for &w in &p.ws {
        let mut row = vec![num(w)];
        for (k, &t) in p.ts.iter().enumerate() {
            let b = theorem1_bound(&BoundQuery { wasserstein: w, schedule: sched.clone(), t }).stage("theorem1")?;
            row.push(num(b));
            curves[k].points.push((w, b));
        }
        t1.push(row);
    }

    let mut t2 = Table::new(&["alpha", "sigma", "w_latent", "psi", "bound"]);
    let mut curves2: Vec<Series> = p
        .sigmas
        .iter()
        .map(|s| Series { label: format!("sigma = {s}"), points: Vec::new() })
        .collect();
    for (ai, &alpha) in p.alphas.iter().enumerate() {
        for (si, &sigma) in p.sigmas.iter().enumerate() {
            for &w in &p.latent_ws {
                let psi = psi_sigma(w, sigma).stage("theorem2")?;
                let b = theorem2_bound(&TradeoffBoundQuery { wasserstein_latent: w, sigma, alpha })
                    .stage("theorem2")?;
                t2.push(vec![num(alpha), num(sigma), num(w), num(psi), num(b)]);
                if ai == 0 {
                    curves2[si].points.push((w, b));
                }
            }
        }
    }

    ctx.emit_table("theorem1_schedule.csv", &sch)?;
    ctx.emit_table("theorem1.csv", &t1)?;
    ctx.emit_table("theorem2.csv", &t2)?;
    ctx.emit_svg("theorem1.svg", || {
        svg_plot("Lower bound on evasion + spoofing error", "W (unit-scale l2)", "bound", &curves)
    })?;
    ctx.emit_svg("theorem2.svg", || {
        svg_plot(
            &format!("Robust detector AUROC bound (alpha = {})", p.alphas[0]),
            "latent W",
            "AUROC bound",
            &curves2,
        )
    })
}
