use serde::{Deserialize, Serialize};

use ua_core::constants::{localization_condition, ConstantsReport};
use ua_core::disorder::DISORDER_LABEL;
use ua_core::fit::{fit_decay, DecayFit};
use ua_core::moments::{
    diag_moment_bound_check, estimate_moments, DiagBoundReport, MomentEstimate,
};

use super::{flag, spectral_parameters};
use crate::output::{num, Table};
use crate::{CliError, Context};

pub const MOMENTS_HEADER: [&str; 4] = ["distance", "mean", "stderr", "n"];
/// Slack subtracted from `gamma_theory` in the empirical comparisons.
pub const GAMMA_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    /// Means strictly decrease across the fit window.
    pub strictly_decreasing: bool,
    pub r2: f64,
    pub gamma_emp: f64,
    pub gamma_theory: Option<f64>,
    /// `gamma_emp >= gamma_theory - 0.1`.
    pub gamma_ok: Option<bool>,
    /// `mean(l) <= K_fit e^{-(gamma_theory - 0.1) l}` on the window.
    pub bound_holds: Option<bool>,
    /// Largest `mean(l) / (K_fit e^{-(gamma_theory - 0.1) l})` on the window.
    pub max_bound_ratio: Option<f64>,
}

/// Empirical decay against theory over the fit window. The theory fields
/// are `None` when `gamma_theory` is.
pub fn decay_check(est: &MomentEstimate, fit: &DecayFit, gamma_theory: Option<f64>) -> DecayCheck {
    let (lo, hi) = fit.window;
    let window: Vec<_> = est
        .records
        .iter()
        .filter(|r| r.distance >= lo && r.distance <= hi)
        .collect();
    let strictly_decreasing = window.windows(2).all(|w| w[1].mean < w[0].mean);
    let ratio = gamma_theory.map(|g| {
        let rate = g - GAMMA_SLACK;
        window
            .iter()
            .map(|r| r.mean / (fit.k * (-rate * r.distance as f64).exp()))
            .fold(0.0, f64::max)
    });
    DecayCheck {
        strictly_decreasing,
        r2: fit.r2,
        gamma_emp: fit.gamma,
        gamma_theory,
        gamma_ok: gamma_theory.map(|g| fit.gamma >= g - GAMMA_SLACK),
        bound_holds: ratio.map(|r| r <= 1.0),
        max_bound_ratio: ratio,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsRun {
    pub s_index: usize,
    pub z_index: usize,
    pub file: String,
    pub estimate: MomentEstimate,
    pub fit: Option<DecayFit>,
    pub check: Option<DecayCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub constants: Vec<ConstantsReport>,
    pub runs: Vec<MomentsRun>,
    pub diag_bound: Vec<DiagBoundReport>,
}

/// Per-distance moment tables with decay fits for every `(s, z)`, and the
/// diagonal bound over the whole `z` list for every `s`.
pub fn moments(ctx: &mut Context) -> Result<(), CliError> {
    let zs = spectral_parameters(ctx, "moments")?;
    ctx.uses_stream(DISORDER_LABEL);
    let dist = ctx.cfg.distribution;
    let params = ctx.params.clone();
    let distances = ctx.cfg.distance_list();
    let opts = ctx.opts();
    let mut report = MomentsReport {
        constants: Vec::new(),
        runs: Vec::new(),
        diag_bound: Vec::new(),
    };
    for (a, &s) in ctx.cfg.s.clone().iter().enumerate() {
        let constants = localization_condition(&params, &dist, s)?;
        let gamma_theory = constants.gamma_theory;
        report.constants.push(constants);
        for (b, &z) in zs.iter().enumerate() {
            let est = estimate_moments(&params, &dist, s, z, ctx.cfg.site, &distances, &opts)?;
            let stem = format!("moments_s{a}_z{b}");
            ctx.failures.insert(stem.clone(), est.failures);
            let mut t = Table::new(&MOMENTS_HEADER);
            for r in &est.records {
                t.push(vec![
                    r.distance.to_string(),
                    num(r.mean),
                    num(r.stderr),
                    r.n.to_string(),
                ]);
            }
            ctx.out.csv(&format!("{stem}.csv"), &t)?;
            ctx.out.dat(&format!("{stem}.dat"), &t)?;
            let fit = match fit_decay(&est, ctx.cfg.fit_window) {
                Ok(f) => Some(f),
                Err(e) => {
                    log::warn!("{stem}: no decay fit: {e}");
                    None
                }
            };
            let check = fit.as_ref().map(|f| decay_check(&est, f, gamma_theory));
            if let Some(DecayCheck {
                bound_holds: Some(false),
                max_bound_ratio,
                ..
            }) = &check
            {
                ctx.violation(format!(
                    "{stem}: means exceed K_fit e^(-(gamma_theory - 0.1) l) by a factor {:.4}",
                    max_bound_ratio.unwrap_or(f64::NAN)
                ));
            }
            report.runs.push(MomentsRun {
                s_index: a,
                z_index: b,
                file: format!("{stem}.csv"),
                estimate: est,
                fit,
                check,
            });
        }
        let diag = diag_moment_bound_check(&params, &dist, s, &zs, &opts)?;
        ctx.failures.insert(
            format!("diag_bound_s{a}"),
            diag.rows.iter().map(|r| r.failures).max().unwrap_or(0),
        );
        for r in diag.rows.iter().filter(|r| !r.holds) {
            ctx.violation(format!(
                "diagonal bound fails at s={s}, z={}: mean {} > C2 {} + 3 stderr {}",
                r.z, r.mean, diag.c2, r.stderr
            ));
        }
        let mut t = Table::new(&["z_re", "z_im", "mean", "stderr", "n", "c2", "holds"]);
        for r in &diag.rows {
            t.push(vec![
                num(r.z.re),
                num(r.z.im),
                num(r.mean),
                num(r.stderr),
                r.n.to_string(),
                num(diag.c2),
                flag(r.holds),
            ]);
        }
        ctx.out.csv(&format!("diag_bound_s{a}.csv"), &t)?;
        report.diag_bound.push(diag);
    }
    let mut t = Table::new(&[
        "s",
        "z_re",
        "z_im",
        "gamma_emp",
        "k_fit",
        "r2",
        "window_lo",
        "window_hi",
        "gamma_theory",
        "bound_holds",
    ]);
    for run in &report.runs {
        if let (Some(f), Some(c)) = (&run.fit, &run.check) {
            t.push(vec![
                num(run.estimate.s),
                num(run.estimate.z.re),
                num(run.estimate.z.im),
                num(f.gamma),
                num(f.k),
                num(f.r2),
                f.window.0.to_string(),
                f.window.1.to_string(),
                c.gamma_theory.map(num).unwrap_or_default(),
                c.bound_holds.map(flag).unwrap_or_default(),
            ]);
        }
    }
    ctx.out.csv("decay_fit.csv", &t)?;
    ctx.out.json("moments.json", &report)
}
