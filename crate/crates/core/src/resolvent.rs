//! Matrix elements of `F(z) = S (U - z)^{-1}` and the identities they obey.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::band::BandedUnitary;
use crate::banded_lu::BandLu;
use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};
use crate::operator::build_u;

/// Default minimal distance between `z` and the unit circle.
pub const DEFAULT_GUARD: f64 = 1e-6;
/// Solve residual contract: `||(U - z) x - e_k|| <= RESIDUAL_TOL ||x||`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Threshold under which `1 - eta_j F_hat(j,j)` counts as vanishing.
pub const RANK_ONE_SINGULAR: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A spectral parameter `z` off the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter {
    z: Complex64,
    guard: f64,
}

impl SpectralParameter {
    pub fn new(z: Complex64) -> Result<Self> {
        Self::with_guard(z, DEFAULT_GUARD)
    }

    pub fn with_guard(z: Complex64, guard: f64) -> Result<Self> {
        let dist = (1.0 - z.norm()).abs();
        if !(dist >= guard) {
            return Err(Error::Conditioning {
                dist,
                guard,
                apriori_bound: 1.0 / dist,
            });
        }
        Ok(Self { z, guard })
    }

    pub fn polar(modulus: f64, angle: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(modulus, angle))
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn is_zero(&self) -> bool {
        self.z == ZERO
    }

    pub fn dist_to_circle(&self) -> f64 {
        (1.0 - self.z.norm()).abs()
    }

    /// `|F(j,k;z)| <= 1 / dist(z, S^1)`.
    pub fn apriori_bound(&self) -> f64 {
        1.0 / self.dist_to_circle()
    }
}

/// A factorization of `U - z` from which columns of `F(z)` are extracted.
pub struct Resolvent<'a> {
    s: &'a BandedUnitary,
    u: &'a BandedUnitary,
    z: SpectralParameter,
    lu: Option<BandLu>,
}

impl<'a> Resolvent<'a> {
    pub fn new(u: &'a BandedUnitary, s: &'a BandedUnitary, z: SpectralParameter) -> Result<Self> {
        if u.lattice() != s.lattice() {
            return Err(Error::LatticeMismatch {
                expected: s.lattice().to_string(),
                actual: u.lattice().to_string(),
            });
        }
        let lu = if z.is_zero() {
            None
        } else {
            Some(BandLu::factor_shifted(u, z.z())?)
        };
        Ok(Self { s, u, z, lu })
    }

    pub fn z(&self) -> SpectralParameter {
        self.z
    }

    /// `x = (U - z)^{-1} e_k`, residual-checked.
    pub fn solve_unit(&self, k: usize) -> Result<Vec<Complex64>> {
        let n = self.u.dim();
        let Some(lu) = &self.lu else {
            // U^{-1} = U*.
            let mut e = vec![ZERO; n];
            e[k] = ONE;
            return Ok(self.u.adjoint_mul_vec(&e));
        };
        let x = lu.solve_unit(k);
        let mut r = self.u.mul_vec(&x);
        for (ri, xi) in r.iter_mut().zip(&x) {
            *ri -= self.z.z() * xi;
        }
        r[k] -= ONE;
        let residual = norm(&r);
        let limit = RESIDUAL_TOL * norm(&x);
        if !(residual <= limit) {
            return Err(Error::Residual { residual, limit });
        }
        Ok(x)
    }

    /// Column `F(., k; z)`.
    ///
    /// At `z = 0` the column is returned in closed form: `F(0) = S U* = D*`,
    /// so `F(., k; 0) = e^{i theta_k} e_k` with `e^{-i theta_k} = <S row k, U row k>`.
    pub fn column(&self, k: usize) -> Result<Vec<Complex64>> {
        if self.lu.is_none() {
            let d_k: Complex64 = self
                .u
                .row(k)
                .iter()
                .zip(self.s.row(k))
                .map(|(u, s)| u * s.conj())
                .sum();
            let mut col = vec![ZERO; self.u.dim()];
            col[k] = d_k.conj() / d_k.norm();
            return Ok(col);
        }
        Ok(self.s.mul_vec(&self.solve_unit(k)?))
    }
}

pub fn resolvent_column(
    u: &BandedUnitary,
    s: &BandedUnitary,
    k: usize,
    z: SpectralParameter,
) -> Result<Vec<Complex64>> {
    Resolvent::new(u, s, z)?.column(k)
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// The terms `<Sk|l> F(l, j; z)`, `l != k`, of the defining identity.
pub fn identity_terms(s: &BandedUnitary, column: &[Complex64], k: usize) -> Vec<Complex64> {
    let lattice = s.lattice();
    let stencil = s.stencil();
    (0..stencil.len())
        .filter(|&slot| slot != stencil.center())
        .filter_map(|slot| {
            let offset = stencil.offset(slot);
            let l = lattice.shift(k, offset);
            if l == k {
                return None;
            }
            let back: Vec<i64> = offset.iter().map(|o| -o).collect();
            // <Sk|l> = conj(<l|S|k>) and <l|S|k> sits in row l at offset -o.
            let skl = s.entry(l, &back).conj();
            Some(skl * column[l])
        })
        .collect()
}

/// `|LHS - RHS|` of
/// `F(k,j;z) (e^{-i theta_k} / z - <Sk|k>) = sum_{l != k} <Sk|l> F(l,j;z)`
/// for a column `F(., j; z)`.
pub fn check_defining_identity(
    s: &BandedUnitary,
    disorder: &DisorderRealization,
    column: &[Complex64],
    k: usize,
    j: usize,
    z: SpectralParameter,
) -> Result<f64> {
    if z.is_zero() {
        return Err(Error::ZeroSpectralParameter);
    }
    if j == k {
        return Err(Error::Precondition("defining identity needs j != k".into()));
    }
    let diag = s.get(k, k).conj();
    let factor = Complex64::from_polar(1.0, -disorder.phase(k)) / z.z() - diag;
    let lhs = column[k] * factor;
    let rhs: Complex64 = identity_terms(s, column, k).into_iter().sum();
    Ok((lhs - rhs).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankOneCheck {
    /// `max_k |F(j,k) - F_hat(j,k) / (1 - eta_j F_hat(j,j))| / max(1, |F(j,k)|)`.
    pub max_residual: f64,
    pub eta: Complex64,
    pub denominator: Complex64,
}

/// Checks `F(j,k;z) = F_hat(j,k;z) / (1 - eta_j F_hat(j,j;z))`, where
/// `F_hat` is built from the realization with `theta_j := 0`.
pub fn rank_one_identity_check(
    s: &BandedUnitary,
    disorder: &DisorderRealization,
    j: usize,
    z: SpectralParameter,
    probes: &[usize],
) -> Result<RankOneCheck> {
    let hatted = disorder.with_phase(j, 0.0);
    let u = build_u(s, disorder)?;
    let u_hat = build_u(s, &hatted)?;
    let full = Resolvent::new(&u, s, z)?;
    let unperturbed = Resolvent::new(&u_hat, s, z)?;
    let eta = disorder.eta(j);
    let f_hat_jj = unperturbed.column(j)?[j];
    let denominator = ONE - eta * f_hat_jj;
    if denominator.norm() < RANK_ONE_SINGULAR {
        return Err(Error::RankOneSingular {
            site: j,
            modulus: denominator.norm(),
        });
    }
    let mut max_residual: f64 = 0.0;
    for &k in probes {
        let f_jk = full.column(k)?[j];
        let f_hat_jk = unperturbed.column(k)?[j];
        let residual = (f_jk - f_hat_jk / denominator).norm() / f_jk.norm().max(1.0);
        max_residual = max_residual.max(residual);
    }
    Ok(RankOneCheck {
        max_residual,
        eta,
        denominator,
    })
}
