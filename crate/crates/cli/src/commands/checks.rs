//! `build-check`, `identities` and `spectrum`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use ua_core::disorder::{sample_disorder, DISORDER_LABEL};
use ua_core::operator::{build_s_tensor, build_u, product_arc};
use ua_core::resolvent::{check_defining_identity, rank_one_identity_check, Resolvent};
use ua_core::seed;
use ua_core::spectral::{eig_unitary, spectral_measure, EigenChecks, NormSplit, SpectralSnapshot};

use super::{dense_allowed, flag, spectral_parameters, theta_grid};
use crate::output::{num, Table};
use crate::{CliError, Context};

pub const UNITARITY_TOL: f64 = 1e-12;
pub const DIAGONAL_TOL: f64 = 1e-14;
pub const EQEF_TOL: f64 = 1e-9;
pub const RANK_ONE_TOL: f64 = 1e-9;
pub const NORM_SPLIT_TOL: f64 = 1e-8;
pub const CROSSCHECK_TOL: f64 = 1e-8;
pub const ARC_TOL: f64 = 1e-10;
pub const MASS_TOL: f64 = 1e-10;
pub const TRIPLE_LABEL: &str = "identities";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check_table(rows: &[CheckRow]) -> Table {
    let mut t = Table::new(&["check", "value", "tolerance", "pass"]);
    for r in rows {
        t.push(vec![
            r.check.clone(),
            num(r.value),
            num(r.tolerance),
            flag(r.pass),
        ]);
    }
    t
}

fn record(ctx: &mut Context, rows: &mut Vec<CheckRow>, check: &str, value: f64, tolerance: f64) {
    let pass = value <= tolerance;
    if !pass {
        ctx.violation(format!("{check} = {value:e} exceeds {tolerance:e}"));
    }
    rows.push(CheckRow {
        check: check.to_string(),
        value,
        tolerance,
        pass,
    });
}

/// Unitarity of `S` and of `U` for realization 0, and the constant diagonal.
pub fn build_check(ctx: &mut Context) -> Result<(), CliError> {
    ctx.uses_stream(DISORDER_LABEL);
    let s = build_s_tensor(&ctx.params)?;
    let u = build_u(
        &s,
        &sample_disorder(&ctx.cfg.distribution, &ctx.params, ctx.cfg.seed, 0),
    )?;
    let rho = ctx.params.rho_d();
    let diagonal = (0..s.dim())
        .map(|k| (s.get(k, k) - rho).norm())
        .fold(0.0, f64::max);
    let mut rows = Vec::new();
    record(
        ctx,
        &mut rows,
        "s_unitarity",
        s.unitarity_deviation(),
        UNITARITY_TOL,
    );
    record(
        ctx,
        &mut rows,
        "u_unitarity",
        u.unitarity_deviation(),
        UNITARITY_TOL,
    );
    record(
        ctx,
        &mut rows,
        "s_diagonal_minus_rho",
        diagonal,
        DIAGONAL_TOL,
    );
    ctx.out.csv("build_check.csv", &check_table(&rows))?;
    ctx.out.json("build_check.json", &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub identity: String,
    pub realization: u64,
    pub j: usize,
    pub k: usize,
    pub z: Complex64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitiesReport {
    pub rows: Vec<IdentityRow>,
    pub norm_split: Vec<NormSplit>,
    /// `B(r, theta)` nondecreasing in `r` at every grid angle.
    pub b_monotone: Option<bool>,
    pub crosscheck: Vec<(Complex64, f64)>,
}

fn identity_row(
    ctx: &mut Context,
    identity: &str,
    realization: u64,
    j: usize,
    k: usize,
    z: Complex64,
    residual: f64,
    tol: f64,
) -> IdentityRow {
    let pass = residual <= tol;
    if !pass {
        ctx.violation(format!(
            "{identity} residual {residual:e} > {tol:e} at realization {realization}, j={j}, k={k}, z={z}"
        ));
    }
    IdentityRow {
        identity: identity.to_string(),
        realization,
        j,
        k,
        z,
        residual,
        pass,
    }
}

/// Random `(realization, j != k, z)` triples for the defining and the
/// rank-one identity, the exact `theta_j = 0` case, and the norm split with
/// its monotonicity on a `(r, theta)` grid.
pub fn identities(ctx: &mut Context) -> Result<(), CliError> {
    let zs = spectral_parameters(ctx, "identities")?;
    ctx.uses_stream(TRIPLE_LABEL);
    ctx.uses_stream(DISORDER_LABEL);
    let (dist, seed_) = (ctx.cfg.distribution, ctx.cfg.seed);
    let params = ctx.params.clone();
    let s_op = build_s_tensor(&params)?;
    let n = params.lattice().num_sites();
    let mut rng = seed::stream(seed_, TRIPLE_LABEL, 0);
    let mut rows = Vec::new();
    let mut failures = 0;
    for _ in 0..ctx.cfg.identities.triples {
        let idx = rng.random_range(0..ctx.cfg.n_samples as u64);
        let j = rng.random_range(0..n);
        let mut k = rng.random_range(0..n - 1);
        if k >= j {
            k += 1;
        }
        let z = zs[rng.random_range(0..zs.len())];
        let d = sample_disorder(&dist, &params, seed_, idx);
        let res = (|| -> ua_core::Result<(Option<f64>, f64)> {
            let u = build_u(&s_op, &d)?;
            let eqef = if z.is_zero() {
                None
            } else {
                let col = Resolvent::new(&u, &s_op, z)?.column(j)?;
                Some(check_defining_identity(&s_op, &d, &col, k, j, z)?)
            };
            Ok((
                eqef,
                rank_one_identity_check(&s_op, &d, j, z, &[k])?.max_residual,
            ))
        })();
        match res {
            Ok((eqef, b6)) => {
                if let Some(r) = eqef {
                    let row = identity_row(ctx, "defining", idx, j, k, z.z(), r, EQEF_TOL);
                    rows.push(row);
                }
                let row = identity_row(ctx, "rank_one", idx, j, k, z.z(), b6, RANK_ONE_TOL);
                rows.push(row);
            }
            Err(e) => {
                log::warn!("triple at realization {idx} excluded: {e}");
                failures += 1;
            }
        }
    }
    ctx.failures.insert("identities".into(), failures);

    // theta_j = 0 gives F_hat = F and eta_j = 0: the residual is exactly zero.
    let j = ctx.cfg.site;
    let hatted = sample_disorder(&dist, &params, seed_, 0).with_phase(j, 0.0);
    let probes: Vec<usize> = (0..n).step_by((n / 8).max(1)).collect();
    let exact = rank_one_identity_check(&s_op, &hatted, j, zs[0], &probes)?;
    let row = identity_row(
        ctx,
        "rank_one_trivial",
        0,
        j,
        probes[0],
        zs[0].z(),
        exact.max_residual,
        0.0,
    );
    rows.push(row);

    let mut report = IdentitiesReport {
        rows,
        norm_split: Vec::new(),
        b_monotone: None,
        crosscheck: Vec::new(),
    };
    if dense_allowed(ctx, "norm split").is_ok() {
        let snap = SpectralSnapshot::new(&params, &sample_disorder(&dist, &params, seed_, 0))?;
        let mut radii = ctx.cfg.identities.radii.clone();
        radii.sort_by(f64::total_cmp);
        let thetas = theta_grid(ctx.cfg.identities.n_theta);
        let mut monotone = true;
        for &theta in &thetas {
            let mut last = f64::NEG_INFINITY;
            for &r in &radii {
                let split = snap.norm_split(r, theta)?;
                if split.residual > NORM_SPLIT_TOL {
                    ctx.violation(format!(
                        "norm split residual {:e} at r={r}, theta={theta}",
                        split.residual
                    ));
                }
                if split.b < last {
                    monotone = false;
                    ctx.violation(format!("B(r, {theta}) decreases at r={r}"));
                }
                last = split.b;
                report.norm_split.push(split);
            }
        }
        report.b_monotone = Some(monotone);
        for &z in &zs {
            let r = snap.resolvent_crosscheck(z)?;
            if r > CROSSCHECK_TOL {
                ctx.violation(format!(
                    "spectral cross-check residual {r:e} at z={}",
                    z.z()
                ));
            }
            report.crosscheck.push((z.z(), r));
        }
    } else {
        log::warn!("lattice too large for dense diagnostics; norm split skipped");
    }

    let mut t = Table::new(&[
        "identity",
        "realization",
        "j",
        "k",
        "z_re",
        "z_im",
        "residual",
        "pass",
    ]);
    for r in &report.rows {
        t.push(vec![
            r.identity.clone(),
            r.realization.to_string(),
            r.j.to_string(),
            r.k.to_string(),
            num(r.z.re),
            num(r.z.im),
            num(r.residual),
            flag(r.pass),
        ]);
    }
    ctx.out.csv("identities.csv", &t)?;
    let mut t = Table::new(&["r", "theta", "direct", "poisson", "b", "residual"]);
    for s in &report.norm_split {
        t.push(vec![
            num(s.r),
            num(s.theta),
            num(s.direct),
            num(s.poisson),
            num(s.b),
            num(s.residual),
        ]);
    }
    ctx.out.csv("norm_split.csv", &t)?;
    ctx.out.json("identities.json", &report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub arc_half_width: f64,
    pub s_checks: EigenChecks,
    pub u_checks: EigenChecks,
    pub s_outside_arc: usize,
    pub measure_mass: f64,
}

/// Eigenvalues of `S(t)` against the arc predicate, and of `U` for
/// realization 0 with the spectral measure of `e_site`.
pub fn spectrum(ctx: &mut Context) -> Result<(), CliError> {
    dense_allowed(ctx, "spectrum")?;
    ctx.uses_stream(DISORDER_LABEL);
    let s = build_s_tensor(&ctx.params)?;
    let arc = product_arc(ctx.params.t())?;
    let es = eig_unitary(&s)?;
    let mut t = Table::new(&["index", "re", "im", "angle", "in_arc"]);
    let mut outside = 0;
    for (i, l) in es.eigenvalues.iter().enumerate() {
        let inside = arc.contains(*l, ARC_TOL)?;
        if !inside {
            outside += 1;
        }
        t.push(vec![
            i.to_string(),
            num(l.re),
            num(l.im),
            num(l.arg()),
            flag(inside),
        ]);
    }
    if outside > 0 {
        ctx.violation(format!("{outside} eigenvalues of S lie outside the arc"));
    }
    ctx.out.csv("spectrum_s.csv", &t)?;

    let u = build_u(
        &s,
        &sample_disorder(&ctx.cfg.distribution, &ctx.params, ctx.cfg.seed, 0),
    )?;
    let eu = eig_unitary(&u)?;
    let mut t = Table::new(&["index", "re", "im", "angle"]);
    for (i, l) in eu.eigenvalues.iter().enumerate() {
        t.push(vec![i.to_string(), num(l.re), num(l.im), num(l.arg())]);
    }
    ctx.out.csv("spectrum_u.csv", &t)?;
    let mut v = vec![Complex64::new(0.0, 0.0); u.dim()];
    v[ctx.cfg.site] = Complex64::new(1.0, 0.0);
    let mass = spectral_measure(&eu, &v)?.total_mass();
    if (mass - 1.0).abs() > MASS_TOL {
        ctx.violation(format!("spectral measure mass {mass} differs from 1"));
    }
    ctx.out.json(
        "spectrum.json",
        &SpectrumReport {
            arc_half_width: arc.half_width(),
            s_checks: es.checks,
            u_checks: eu.checks,
            s_outside_arc: outside,
            measure_mass: mass,
        },
    )
}
