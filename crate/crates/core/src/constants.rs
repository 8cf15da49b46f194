//! Constants of the fractional-moment argument: the decoupling constants
//! `C1`, `C2` of the phase distribution, the off-diagonal sum `N(s, t)`,
//! the localization margin and the resulting decay rate.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::band::Stencil;
use crate::distribution::PhaseDistribution;
use crate::error::Result;
use crate::operator::{s0_band_profile, REACH};
use crate::params::{check_coupling, check_exponent, rho_d, ModelParams};
use crate::quadrature::{integrate_circle, integrate_graded, QuadOptions};

/// Absolute tolerance of the decay-rate bisection.
pub const GAMMA_TOL: f64 = 1e-10;
/// Absolute tolerance of the threshold-coupling bisection.
pub const T0_TOL: f64 = 1e-8;

const RADIUS_GRID: [f64; 9] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
const ANGLE_GRID: usize = 24;
const GOLDEN_TOL: f64 = 1e-7;

fn quad_options() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 1e-14,
        max_panels: 4000,
    }
}

/// Grading exponent that smooths `|x|^{-s}` under `x = u^p`.
fn grade(s: f64) -> f64 {
    (1.0 / (1.0 - s)).max(2.0)
}

/// `|e^{i theta} - beta|` at `theta = anchor + delta`, evaluated without
/// cancellation near the circle.
fn chord(anchor: f64, delta: f64, beta: Complex64) -> f64 {
    let rho = beta.norm();
    let half = 0.5 * ((anchor - beta.arg()) + delta);
    ((1.0 - rho).powi(2) + 4.0 * rho * half.sin().powi(2)).sqrt()
}

fn breakpoints(points: &[Complex64]) -> Vec<f64> {
    let mut cuts = Vec::new();
    for p in points {
        if p.norm() > 0.0 {
            cuts.push(p.arg());
            cuts.push(p.arg() + PI);
        }
    }
    cuts
}

/// `int dnu(theta) |e^{i theta} - beta|^{-s}`.
pub fn circle_moment(dist: &PhaseDistribution, s: f64, beta: Complex64) -> Result<f64> {
    check_exponent(s)?;
    dist.validate()?;
    if beta == Complex64::new(0.0, 0.0) {
        return Ok(1.0);
    }
    let f = |a: f64, d: f64| dist.density(a + d) * chord(a, d, beta).powf(-s);
    Ok(integrate_circle(&f, &breakpoints(&[beta]), grade(s), &quad_options())?.value)
}

/// `int dnu(theta) |e^{i theta} - alpha|^s / |e^{i theta} - beta|^s`.
pub fn circle_ratio_moment(
    dist: &PhaseDistribution,
    s: f64,
    alpha: Complex64,
    beta: Complex64,
) -> Result<f64> {
    check_exponent(s)?;
    dist.validate()?;
    if alpha == beta {
        return Ok(1.0);
    }
    let f = |a: f64, d: f64| dist.density(a + d) * (chord(a, d, alpha) / chord(a, d, beta)).powf(s);
    Ok(integrate_circle(&f, &breakpoints(&[alpha, beta]), grade(s), &quad_options())?.value)
}

/// Location and value of the supremum over `beta` of [`circle_moment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C2Supremum {
    pub value: f64,
    pub beta: Complex64,
}

fn golden_max(mut lo: f64, mut hi: f64, f: &mut dyn FnMut(f64) -> Result<f64>) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    while hi - lo > GOLDEN_TOL {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Polar grid over `|beta| <= 2`, then golden-section refinement in the
/// radius on `[0.75, 1.25]` and in the angle. The unit-circle point at the
/// best angle is always evaluated; the largest value seen is returned.
pub fn c2_supremum(dist: &PhaseDistribution, s: f64) -> Result<C2Supremum> {
    check_exponent(s)?;
    dist.validate()?;
    let mut best = C2Supremum {
        value: 1.0,
        beta: Complex64::new(0.0, 0.0),
    };
    let eval = |beta: Complex64, best: &mut C2Supremum| -> Result<f64> {
        let v = circle_moment(dist, s, beta)?;
        if v > best.value {
            *best = C2Supremum { value: v, beta };
        }
        Ok(v)
    };
    // The uniform measure is rotation invariant.
    let angles = match dist {
        PhaseDistribution::Uniform => 1,
        _ => ANGLE_GRID,
    };
    for &rho in &RADIUS_GRID[1..] {
        for a in 0..angles {
            eval(
                Complex64::from_polar(rho, TAU * a as f64 / angles as f64),
                &mut best,
            )?;
        }
    }
    let phi = best.beta.arg();
    let rho = golden_max(0.75, 1.25, &mut |r| {
        eval(Complex64::from_polar(r, phi), &mut best)
    })?;
    if angles > 1 {
        let step = TAU / angles as f64;
        let phi = golden_max(phi - step, phi + step, &mut |a| {
            eval(Complex64::from_polar(rho, a), &mut best)
        })?;
        eval(Complex64::from_polar(rho, phi), &mut best)?;
        eval(Complex64::from_polar(1.0, phi), &mut best)?;
    }
    eval(Complex64::from_polar(1.0, best.beta.arg()), &mut best)?;
    Ok(best)
}

/// `C2(s) = sup_beta int dnu / |e^{i theta} - beta|^s`.
pub fn c2_constant(dist: &PhaseDistribution, s: f64) -> Result<f64> {
    Ok(c2_supremum(dist, s)?.value)
}

/// `lambda* = sin(1 / (2 ||tau||_inf))^{-s}`, defined when the level set
/// bound `||tau||_inf 2 arcsin(x)` can reach 1, i.e. `1/(2||tau||) <= pi/2`.
pub fn appendix_lambda_star(dist: &PhaseDistribution, s: f64) -> Option<f64> {
    let arg = 1.0 / (2.0 * dist.sup_norm());
    (arg <= PI / 2.0).then(|| arg.sin().powf(-s))
}

/// `||tau|| int_lambda^inf 2 arcsin(lambda'^{-1/s}) dlambda'` for `lambda >= 1`,
/// computed as `||tau|| int_0^x 2 arcsin(u) s u^{-s-1} du` with `x = lambda^{-1/s}`.
fn level_set_tail(dist: &PhaseDistribution, s: f64, lambda: f64) -> Result<f64> {
    let x = lambda.powf(-1.0 / s);
    let tau = dist.sup_norm();
    let f = |u: f64| tau * 2.0 * u.asin() * s * u.powf(-s - 1.0);
    Ok(integrate_graded(&f, 0.0, x, grade(s), 1.0, &quad_options())?.value)
}

/// `lambda* + int_{lambda*}^inf ||tau|| 2 arcsin(lambda'^{-1/s}) dlambda'`,
/// absent when `lambda*` is undefined.
pub fn c2_appendix_bound(dist: &PhaseDistribution, s: f64) -> Result<Option<f64>> {
    check_exponent(s)?;
    dist.validate()?;
    match appendix_lambda_star(dist, s) {
        Some(lambda) => Ok(Some(lambda + level_set_tail(dist, s, lambda)?)),
        None => Ok(None),
    }
}

/// The same level-set bound optimized over `lambda >= 1`. It coincides with
/// [`c2_appendix_bound`] when that exists and is otherwise attained at
/// `lambda = 1`, since the derivative `1 - ||tau|| 2 arcsin(lambda^{-1/s})`
/// is then positive.
pub fn c2_layer_cake_bound(dist: &PhaseDistribution, s: f64) -> Result<f64> {
    check_exponent(s)?;
    dist.validate()?;
    let lambda = appendix_lambda_star(dist, s).unwrap_or(1.0);
    Ok(lambda + level_set_tail(dist, s, lambda)?)
}

pub fn c1_from_c2(c2: f64) -> f64 {
    1.0 / (2.0 * c2)
}

pub fn c1_constant(dist: &PhaseDistribution, s: f64) -> Result<f64> {
    Ok(c1_from_c2(c2_constant(dist, s)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecouplingCheck {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `int dnu |e - alpha|^s / |e - beta|^s >= C1 int dnu / |e - beta|^s`.
pub fn decoupling_check(
    dist: &PhaseDistribution,
    s: f64,
    alpha: Complex64,
    beta: Complex64,
) -> Result<DecouplingCheck> {
    decoupling_check_with(dist, s, c1_constant(dist, s)?, alpha, beta)
}

/// [`decoupling_check`] with a precomputed `C1`.
pub fn decoupling_check_with(
    dist: &PhaseDistribution,
    s: f64,
    c1: f64,
    alpha: Complex64,
    beta: Complex64,
) -> Result<DecouplingCheck> {
    let lhs = circle_ratio_moment(dist, s, alpha, beta)?;
    let rhs = c1 * circle_moment(dist, s, beta)?;
    Ok(DecouplingCheck {
        alpha,
        beta,
        lhs,
        rhs,
        holds: lhs >= rhs,
    })
}

/// `max_parity sum_{o != 0} |<S c | c + o>|^s e^{gamma |o|_inf}` for couplings `t`.
///
/// Entries are taken from a column of `S(t)`, the row picture gives the same
/// multiset of moduli per parity.
pub fn offdiag_sum_for_couplings(t: &[f64], s: f64, gamma: f64) -> Result<f64> {
    check_exponent(s)?;
    let profiles = t
        .iter()
        .map(|&tj| s0_band_profile(tj))
        .collect::<Result<Vec<_>>>()?;
    let dim = t.len();
    let stencil = Stencil::new(dim, REACH);
    let mut best: f64 = 0.0;
    for parity in 0..1usize << dim {
        let mut sum = 0.0;
        for slot in (0..stencil.len()).filter(|&i| i != stencil.center()) {
            let offset = stencil.offset(slot);
            let modulus: f64 = profiles
                .iter()
                .zip(offset)
                .enumerate()
                .map(|(axis, (p, &o))| p.column_value((parity >> axis) & 1, o).abs())
                .product();
            if modulus > 0.0 {
                sum += modulus.powf(s) * (gamma * stencil.max_norm(slot) as f64).exp();
            }
        }
        best = best.max(sum);
    }
    Ok(best)
}

/// `N(s, t)` for `gamma = 0`, its weighted version otherwise.
pub fn offdiag_fractional_sum(params: &ModelParams, s: f64, gamma: f64) -> Result<f64> {
    offdiag_sum_for_couplings(params.t(), s, gamma)
}

/// Every constant entering the localization condition at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub s: f64,
    pub t: Vec<f64>,
    pub distribution: String,
    pub c2: f64,
    pub c2_beta: Complex64,
    pub c2_appendix_bound: Option<f64>,
    pub lambda_star: Option<f64>,
    pub c2_layer_cake_bound: f64,
    pub c1: f64,
    pub n_offdiag: f64,
    pub c_threshold: f64,
    pub margin: f64,
    /// Infinite when every off-diagonal entry vanishes.
    pub gamma_theory: Option<f64>,
    /// Symmetric threshold coupling in the same dimension.
    pub t0: Option<f64>,
}

impl ConstantsReport {
    pub fn condition_holds(&self) -> bool {
        self.margin > 0.0
    }
}

pub fn localization_condition(
    params: &ModelParams,
    dist: &PhaseDistribution,
    s: f64,
) -> Result<ConstantsReport> {
    let sup = c2_supremum(dist, s)?;
    let c1 = c1_from_c2(sup.value);
    let n_offdiag = offdiag_fractional_sum(params, s, 0.0)?;
    let c_threshold = c1 * params.rho_d().powf(s);
    Ok(ConstantsReport {
        s,
        t: params.t().to_vec(),
        distribution: dist.id(),
        c2: sup.value,
        c2_beta: sup.beta,
        c2_appendix_bound: c2_appendix_bound(dist, s)?,
        lambda_star: appendix_lambda_star(dist, s),
        c2_layer_cake_bound: c2_layer_cake_bound(dist, s)?,
        c1,
        n_offdiag,
        c_threshold,
        margin: c_threshold - n_offdiag,
        gamma_theory: gamma_for_couplings(params.t(), s, c1)?,
        t0: Some(t0_with_c1(c1, s, params.lattice().dim())?),
    })
}

/// Largest `gamma` with weighted sum `< C1 rho_d^s`, to [`GAMMA_TOL`];
/// `None` when the margin is not positive.
pub fn gamma_for_couplings(t: &[f64], s: f64, c1: f64) -> Result<Option<f64>> {
    let c = c1 * rho_d(t).powf(s);
    let weighted = |g: f64| offdiag_sum_for_couplings(t, s, g);
    let n = weighted(0.0)?;
    if !(n < c) {
        return Ok(None);
    }
    if n == 0.0 {
        return Ok(Some(f64::INFINITY));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while weighted(hi)? < c {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > GAMMA_TOL {
        let mid = 0.5 * (lo + hi);
        if weighted(mid)? < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

pub fn theoretical_gamma(
    params: &ModelParams,
    dist: &PhaseDistribution,
    s: f64,
) -> Result<Option<f64>> {
    gamma_for_couplings(params.t(), s, c1_constant(dist, s)?)
}

/// Margin `C1 (1 - t^2)^{d s} - N_d(s, t)` for the symmetric coupling `t`.
pub fn symmetric_margin(c1: f64, s: f64, dim: usize, t: f64) -> Result<f64> {
    check_coupling(t)?;
    let couplings = vec![t; dim];
    Ok(c1 * rho_d(&couplings).powf(s) - offdiag_sum_for_couplings(&couplings, s, 0.0)?)
}

/// Scans upward from `t = 1e-6` in steps of `1e-3` to the first
/// non-positive margin, then bisects to [`T0_TOL`]. Returns the lower end of
/// the final bracket, where the margin is positive.
pub fn t0_with_c1(c1: f64, s: f64, dim: usize) -> Result<f64> {
    check_exponent(s)?;
    let margin = |t: f64| symmetric_margin(c1, s, dim, t);
    let mut lo = 1e-6;
    if !(margin(lo)? > 0.0) {
        return Ok(0.0);
    }
    let mut hi = lo;
    while margin(hi)? > 0.0 {
        lo = hi;
        hi = (hi + 1e-3).min(0.999_999);
        if hi == lo {
            return Ok(lo);
        }
    }
    while hi - lo > T0_TOL {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn t0_threshold(dist: &PhaseDistribution, s: f64, dim: usize) -> Result<f64> {
    t0_with_c1(c1_constant(dist, s)?, s, dim)
}
