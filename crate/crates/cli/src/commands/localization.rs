use serde::{Deserialize, Serialize};

use ua_core::constants::localization_condition;
use ua_core::disorder::{sample_disorder, DISORDER_LABEL};
use ua_core::localization::{
    localization_stats, simon_wolff_scan, EigenvectorStats, SimonWolffScan, JITTER_LABEL,
};
use ua_core::operator::{build_s_tensor, build_u};
use ua_core::parallel::par_map_ordered;
use ua_core::spectral::eig_unitary;

use super::{dense_allowed, theta_grid};
use crate::output::{num, Table};
use crate::{CliError, Context};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationSummary {
    pub s: f64,
    pub gamma_theory: Option<f64>,
    /// `ceil(3 / gamma_theory)`, when `gamma_theory` exists.
    pub radius: Option<usize>,
    pub realizations: usize,
    pub failures: usize,
    /// Pooled over every eigenvector of every realization.
    pub median_ipr: f64,
    pub median_decay_rate: f64,
    pub fraction_within_radius: Option<f64>,
    pub simon_wolff: SimonWolffScan,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Eigenvector statistics over `n_samples` realizations and the
/// Simon-Wolff scan of the hatted measure.
pub fn localization(ctx: &mut Context) -> Result<(), CliError> {
    dense_allowed(ctx, "localization")?;
    ctx.uses_stream(DISORDER_LABEL);
    ctx.uses_stream(JITTER_LABEL);
    let dist = ctx.cfg.distribution;
    let params = ctx.params.clone();
    let opts = ctx.opts();
    let s = ctx.cfg.s[0];
    let gamma_theory = localization_condition(&params, &dist, s)?.gamma_theory;
    let radius = gamma_theory.map(|g| {
        if g.is_finite() {
            (3.0 / g).ceil() as usize
        } else {
            0
        }
    });

    let s_op = build_s_tensor(&params)?;
    let per = par_map_ordered(
        opts.workers,
        opts.n_samples,
        |i| -> ua_core::Result<Vec<EigenvectorStats>> {
            let u = build_u(&s_op, &sample_disorder(&dist, &params, opts.seed, i as u64))?;
            Ok(localization_stats(&eig_unitary(&u)?).vectors)
        },
    )?;

    let sites = params.lattice().num_sites();
    let half = params.lattice().side() / 2;
    let mut pooled = Vec::new();
    let mut failures = 0;
    let mut per_table = Table::new(&[
        "realization",
        "median_ipr",
        "median_decay_rate",
        "fraction_within",
    ]);
    for (i, r) in per.into_iter().enumerate() {
        match r {
            Ok(v) => {
                let bad = v
                    .iter()
                    .filter(|e| {
                        e.ipr < 1.0 / sites as f64 - 1e-12
                            || e.ipr > 1.0 + 1e-12
                            || e.mass_radius > half
                    })
                    .count();
                if bad > 0 {
                    ctx.violation(format!(
                        "realization {i}: {bad} eigenvectors break the IPR or radius range"
                    ));
                }
                let within = radius.map(|r| {
                    v.iter().filter(|e| e.mass_radius <= r).count() as f64 / v.len() as f64
                });
                per_table.push(vec![
                    i.to_string(),
                    num(median(v.iter().map(|e| e.ipr).collect())),
                    num(median(v.iter().map(|e| e.decay_rate).collect())),
                    within.map(num).unwrap_or_default(),
                ]);
                if i == 0 {
                    let mut t = Table::new(&[
                        "index",
                        "angle",
                        "ipr",
                        "center",
                        "decay_rate",
                        "mass_radius",
                    ]);
                    for (n, e) in v.iter().enumerate() {
                        t.push(vec![
                            n.to_string(),
                            num(e.angle),
                            num(e.ipr),
                            e.center.to_string(),
                            num(e.decay_rate),
                            e.mass_radius.to_string(),
                        ]);
                    }
                    ctx.out.csv("eigenvectors_r0.csv", &t)?;
                }
                pooled.extend(v);
            }
            Err(e) => {
                log::warn!("realization {i} excluded: {e}");
                failures += 1;
            }
        }
    }
    ctx.failures.insert("localization".into(), failures);
    ctx.out.csv("localization.csv", &per_table)?;

    let cfg = &ctx.cfg.localization;
    let scan = simon_wolff_scan(
        &params,
        &dist,
        &theta_grid(cfg.n_theta),
        cfg.cutoff,
        cfg.theta0,
        &opts,
    )?;
    ctx.failures.insert("simon_wolff".into(), scan.failures);
    let mut t = Table::new(&[
        "theta0",
        "evaluations",
        "below_cutoff",
        "infinite",
        "median",
        "fraction",
    ]);
    t.push(vec![
        num(scan.theta0),
        scan.evaluations.to_string(),
        scan.below_cutoff.to_string(),
        scan.infinite.to_string(),
        num(scan.median),
        num(scan.fraction),
    ]);
    ctx.out.csv("simon_wolff.csv", &t)?;

    let summary = LocalizationSummary {
        s,
        gamma_theory,
        radius,
        realizations: opts.n_samples,
        failures,
        median_ipr: median(pooled.iter().map(|e| e.ipr).collect()),
        median_decay_rate: median(pooled.iter().map(|e| e.decay_rate).collect()),
        fraction_within_radius: radius.filter(|_| !pooled.is_empty()).map(|r| {
            pooled.iter().filter(|e| e.mass_radius <= r).count() as f64 / pooled.len() as f64
        }),
        simon_wolff: scan,
    };
    ctx.out.json("localization.json", &summary)
}
