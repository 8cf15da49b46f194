//! `constants` and `decoupling`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use ua_core::constants::{
    c1_from_c2, c2_supremum, decoupling_check_with, localization_condition, ConstantsReport,
    DecouplingCheck,
};

use super::flag;
use crate::output::{num, Table};
use crate::{CliError, Context};

const BOUND_RTOL: f64 = 1e-9;

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Every constant of the localization condition for each configured `s`.
pub fn constants(ctx: &mut Context) -> Result<(), CliError> {
    let mut reports: Vec<ConstantsReport> = Vec::new();
    for &s in &ctx.cfg.s.clone() {
        let r = localization_condition(&ctx.params, &ctx.cfg.distribution, s)?;
        if r.c2 > r.c2_layer_cake_bound * (1.0 + BOUND_RTOL) {
            ctx.violation(format!(
                "C2 = {} exceeds its level-set bound {} at s={s}",
                r.c2, r.c2_layer_cake_bound
            ));
        }
        if let Some(b) = r.c2_appendix_bound {
            if r.c2 > b * (1.0 + BOUND_RTOL) {
                ctx.violation(format!(
                    "C2 = {} exceeds the appendix bound {b} at s={s}",
                    r.c2
                ));
            }
        }
        reports.push(r);
    }
    let mut t = Table::new(&[
        "s",
        "c2",
        "c2_layer_cake_bound",
        "c1",
        "n_offdiag",
        "c_threshold",
        "margin",
        "gamma_theory",
        "t0",
    ]);
    for r in &reports {
        t.push(vec![
            num(r.s),
            num(r.c2),
            num(r.c2_layer_cake_bound),
            num(r.c1),
            num(r.n_offdiag),
            num(r.c_threshold),
            num(r.margin),
            opt(r.gamma_theory),
            opt(r.t0),
        ]);
    }
    ctx.out.csv("constants.csv", &t)?;
    ctx.out.json("constants.json", &reports)
}

/// Twenty-five `(alpha, beta)` pairs: five `alpha` (including 0 and a unit
/// point) against five `beta`, two of them on the unit circle.
pub fn decoupling_grid() -> Vec<(Complex64, Complex64)> {
    let alphas = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.5, 0.0),
        Complex64::from_polar(1.0, 1.0),
        Complex64::from_polar(1.5, -2.0),
        Complex64::from_polar(0.9, 2.5),
    ];
    let betas = [
        Complex64::from_polar(0.3, 0.4),
        Complex64::from_polar(1.0, 0.7),
        Complex64::from_polar(1.0, -2.0),
        Complex64::from_polar(0.95, 1.2),
        Complex64::from_polar(1.6, 3.0),
    ];
    alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub s: f64,
    pub c2: f64,
    pub c2_beta: Complex64,
    pub c1: f64,
    pub checks: Vec<DecouplingCheck>,
}

pub fn decoupling(ctx: &mut Context) -> Result<(), CliError> {
    let dist = ctx.cfg.distribution;
    let mut reports = Vec::new();
    for &s in &ctx.cfg.s.clone() {
        let sup = c2_supremum(&dist, s)?;
        let c1 = c1_from_c2(sup.value);
        let checks = decoupling_grid()
            .into_iter()
            .map(|(a, b)| decoupling_check_with(&dist, s, c1, a, b))
            .collect::<ua_core::Result<Vec<_>>>()?;
        for c in checks.iter().filter(|c| !c.holds) {
            ctx.violation(format!(
                "decoupling fails at s={s}, alpha={}, beta={}: {} > {}",
                c.alpha, c.beta, c.lhs, c.rhs
            ));
        }
        reports.push(DecouplingReport {
            s,
            c2: sup.value,
            c2_beta: sup.beta,
            c1,
            checks,
        });
    }
    let mut t = Table::new(&[
        "s", "alpha_re", "alpha_im", "beta_re", "beta_im", "lhs", "rhs", "holds",
    ]);
    for r in &reports {
        for c in &r.checks {
            t.push(vec![
                num(r.s),
                num(c.alpha.re),
                num(c.alpha.im),
                num(c.beta.re),
                num(c.beta.im),
                num(c.lhs),
                num(c.rhs),
                flag(c.holds),
            ]);
        }
    }
    ctx.out.csv("decoupling.csv", &t)?;
    ctx.out.json("decoupling.json", &reports)
}
