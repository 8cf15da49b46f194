//! Dense spectral diagnostics: eigendecomposition of `U`, spectral measures
//! of unit vectors, Poisson integrals and the `B` functionals.
//!
//! At finite volume every spectrum is pure point; these are identity checks
//! and scaling probes, not localization proofs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::band::BandedUnitary;
use crate::constants::{c1_constant, gamma_for_couplings};
use crate::disorder::{sample_disorder, DisorderRealization};
use crate::distribution::{wrap_angle, PhaseDistribution};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::moments::McOptions;
use crate::operator::{build_s_tensor, build_u};
use crate::parallel::par_map_ordered;
use crate::params::{check_exponent, ModelParams};
use crate::resolvent::{norm, Resolvent, SpectralParameter};

/// Largest number of sites for which dense diagnostics run.
pub const DENSE_CAP: usize = 4096;
pub const UNIMODULAR_TOL: f64 = 1e-10;
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// `b_limit` reports an atom collision closer than this.
pub const ATOM_COLLISION: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenChecks {
    pub max_modulus_deviation: f64,
    pub max_residual: f64,
    pub orthonormality_deviation: f64,
}

impl EigenChecks {
    pub fn hold(&self) -> bool {
        self.max_modulus_deviation <= UNIMODULAR_TOL
            && self.max_residual <= EIGEN_RESIDUAL_TOL
            && self.orthonormality_deviation <= ORTHONORMAL_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub lattice: Lattice,
    pub eigenvalues: Vec<Complex64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: DMatrix<Complex64>,
    pub checks: EigenChecks,
}

impl EigenSystem {
    /// Eigenvalue angles in `(-pi, pi]`.
    pub fn angles(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.arg()).collect()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

pub fn check_dense_size(lattice: &Lattice) -> Result<()> {
    let sites = lattice.num_sites();
    if sites > DENSE_CAP {
        return Err(Error::TooLarge {
            sites,
            cap: DENSE_CAP,
        });
    }
    Ok(())
}

/// Complex Schur decomposition `U = Q T Q*`; `T` is diagonal up to rounding
/// for a normal matrix, so `Q` holds the eigenvectors.
pub fn eig_unitary(u: &BandedUnitary) -> Result<EigenSystem> {
    let lattice = *u.lattice();
    check_dense_size(&lattice)?;
    let deviation = u.unitarity_deviation();
    if deviation > UNIMODULAR_TOL {
        return Err(Error::NonUnitary { deviation });
    }
    let dense = u.to_dense();
    let n = dense.nrows();
    let schur = nalgebra::Schur::try_new(dense.clone(), f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let eigenvalues: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    let max_modulus_deviation = eigenvalues
        .iter()
        .map(|l| (l.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let uq = &dense * &q;
    let max_residual = (0..n)
        .map(|i| (uq.column(i) - q.column(i) * eigenvalues[i]).norm())
        .fold(0.0, f64::max);
    let gram = q.adjoint() * &q;
    let orthonormality_deviation = (gram - DMatrix::<Complex64>::identity(n, n))
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let checks = EigenChecks {
        max_modulus_deviation,
        max_residual,
        orthonormality_deviation,
    };
    if !checks.hold() {
        return Err(Error::Eigen(format!(
            "eigen-system invariants violated: {checks:?}"
        )));
    }
    Ok(EigenSystem {
        lattice,
        eigenvalues,
        vectors: q,
        checks,
    })
}

/// Atoms `(alpha_n, w_n)` of a spectral measure; zero-weight atoms omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `int dmu(alpha) e^{i alpha} / (e^{i alpha} - z)`.
    pub fn h_matrix_element(&self, z: Complex64) -> Complex64 {
        self.atoms
            .iter()
            .map(|&(a, w)| {
                let l = Complex64::from_polar(1.0, a);
                w * l / (l - z)
            })
            .sum()
    }
}

pub fn spectral_measure(eigs: &EigenSystem, v: &[Complex64]) -> Result<SpectralMeasure> {
    let vn = norm(v);
    if (vn - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!(
            "cyclic vector must be normalized, |v| = {vn}"
        )));
    }
    let v = DVector::from_column_slice(v);
    let atoms = eigs
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(n, l)| (l.arg(), eigs.vectors.column(n).dotc(&v).norm_sqr()))
        .filter(|a| a.1 > 0.0)
        .collect();
    Ok(SpectralMeasure { atoms })
}

fn check_radius(r: f64) -> Result<()> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::ParameterDomain {
            name: "r",
            value: r,
            reason: "needs 0 <= r < 1",
        });
    }
    Ok(())
}

/// `|e^{i alpha} - r e^{i theta}|^2 = 1 + r^2 - 2 r cos(alpha - theta)`,
/// written as `(1 - r)^2 + 4 r sin^2((alpha - theta)/2)`.
fn kernel_denominator(alpha: f64, r: f64, theta: f64) -> f64 {
    (1.0 - r).powi(2) + 4.0 * r * (0.5 * (alpha - theta)).sin().powi(2)
}

/// `P[dmu](z) = int dmu(alpha) (1 - |z|^2) / |e^{i alpha} - z|^2`.
pub fn poisson_integral(measure: &SpectralMeasure, z: Complex64) -> Result<f64> {
    let r = z.norm();
    check_radius(r)?;
    let theta = z.arg();
    Ok(measure
        .atoms
        .iter()
        .map(|&(a, w)| w * (1.0 - r * r) / kernel_denominator(a, r, theta))
        .sum())
}

/// `B(r, theta) = int dmu(alpha) r^2 / (1 + r^2 - 2 r cos(alpha - theta))`.
pub fn b_function(measure: &SpectralMeasure, r: f64, theta: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(measure
        .atoms
        .iter()
        .map(|&(a, w)| w * r * r / kernel_denominator(a, r, theta))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BLimit {
    Finite(f64),
    /// `theta` lies within [`ATOM_COLLISION`] of the atom at `atom`.
    Infinite {
        atom: f64,
    },
}

impl BLimit {
    pub fn value(&self) -> f64 {
        match *self {
            Self::Finite(v) => v,
            Self::Infinite { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

/// `B(theta) = int dmu(alpha) / (4 sin^2((alpha - theta)/2))`.
pub fn b_limit(measure: &SpectralMeasure, theta: f64) -> BLimit {
    let mut sum = 0.0;
    for &(a, w) in &measure.atoms {
        if wrap_angle(a - theta).abs() < ATOM_COLLISION {
            return BLimit::Infinite { atom: a };
        }
        sum += w / (4.0 * (0.5 * (a - theta)).sin().powi(2));
    }
    BLimit::Finite(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSplit {
    pub r: f64,
    pub theta: f64,
    /// `||H(z) e_0||^2` from a direct solve.
    pub direct: f64,
    pub poisson: f64,
    pub b: f64,
    /// `|direct - (P + B)| / max(1, direct)`.
    pub residual: f64,
}

/// One realization with its eigen-system and the spectral measure of `e_0`.
pub struct SpectralSnapshot {
    pub s: BandedUnitary,
    pub u: BandedUnitary,
    pub eigs: EigenSystem,
    pub measure: SpectralMeasure,
}

impl SpectralSnapshot {
    pub fn new(params: &ModelParams, disorder: &DisorderRealization) -> Result<Self> {
        let s = build_s_tensor(params)?;
        let u = build_u(&s, disorder)?;
        let eigs = eig_unitary(&u)?;
        let mut e0 = vec![ZERO; u.dim()];
        e0[0] = Complex64::new(1.0, 0.0);
        let measure = spectral_measure(&eigs, &e0)?;
        Ok(Self {
            s,
            u,
            eigs,
            measure,
        })
    }

    /// `H(z) e_0 = U (U - z)^{-1} e_0` by the banded solver.
    pub fn h_column(&self, z: SpectralParameter) -> Result<Vec<Complex64>> {
        let x = Resolvent::new(&self.u, &self.s, z)?.solve_unit(0)?;
        Ok(self.u.mul_vec(&x))
    }

    /// `||H(r e^{i theta}) e_0||^2` against `P[dmu] + B(r, theta)`.
    pub fn norm_split(&self, r: f64, theta: f64) -> Result<NormSplit> {
        check_radius(r)?;
        let z = SpectralParameter::new(Complex64::from_polar(r, theta))?;
        let direct = norm(&self.h_column(z)?).powi(2);
        let poisson = poisson_integral(&self.measure, z.z())?;
        let b = b_function(&self.measure, r, theta)?;
        Ok(NormSplit {
            r,
            theta,
            direct,
            poisson,
            b,
            residual: (direct - poisson - b).abs() / direct.max(1.0),
        })
    }

    /// `|<0|H(z)0>_direct - sum_n w_n e^{i a_n} / (e^{i a_n} - z)| / max(1, |.|)`.
    pub fn resolvent_crosscheck(&self, z: SpectralParameter) -> Result<f64> {
        let direct = self.h_column(z)?[0];
        let spectral = self.measure.h_matrix_element(z.z());
        Ok((direct - spectral).norm() / direct.norm().max(1.0))
    }
}

/// `sum_{j in lattice} e^{-gamma |j|_inf}` with the periodic distance to 0.
pub fn geometric_lattice_sum(lattice: &Lattice, gamma: f64) -> f64 {
    (0..lattice.num_sites())
        .map(|j| (-gamma * lattice.distance(0, j) as f64).exp())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HNormBound {
    pub s: f64,
    pub z: Complex64,
    /// Monte Carlo mean of `(||H(z) e_0||^2)^{s/2}`.
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub failures: usize,
    pub gamma_theory: f64,
    pub k_fit: f64,
    /// `sum_j K_fit e^{-(gamma_theory - 0.1) |j|}` over the lattice.
    pub bound: f64,
    pub holds: bool,
}

/// Checks `E (||H(z) e_0||^2)^{s/2} <= sum_j K_fit e^{-(gamma_theory - 0.1)|j|}`.
/// Requires a positive localization margin.
pub fn h_fractional_norm_bound(
    params: &ModelParams,
    dist: &PhaseDistribution,
    s: f64,
    z: SpectralParameter,
    k_fit: f64,
    opts: &McOptions,
) -> Result<HNormBound> {
    check_exponent(s)?;
    let c1 = c1_constant(dist, s)?;
    let gamma_theory = gamma_for_couplings(params.t(), s, c1)?.ok_or_else(|| {
        Error::Precondition("localization margin is not positive, gamma_theory is undefined".into())
    })?;
    let s_op = build_s_tensor(params)?;
    let per = par_map_ordered(opts.workers, opts.n_samples, |i| -> Result<f64> {
        let u = build_u(&s_op, &sample_disorder(dist, params, opts.seed, i as u64))?;
        // ||H(z) e_0|| = ||(U - z)^{-1} e_0|| = ||F(., 0; z)|| since U, S are unitary.
        let col = Resolvent::new(&u, &s_op, z)?.column(0)?;
        Ok(norm(&col).powi(2).powf(s / 2.0))
    })?;
    let mut values = Vec::with_capacity(opts.n_samples);
    let mut failures = 0;
    for (i, r) in per.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                log::warn!("realization {i} excluded: {e}");
                failures += 1;
            }
        }
    }
    if values.len() < 2 {
        return Err(Error::Precondition(
            "fewer than two realizations solved".into(),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let rate = if gamma_theory.is_finite() {
        gamma_theory - 0.1
    } else {
        f64::INFINITY
    };
    let bound = if rate.is_infinite() {
        k_fit
    } else {
        k_fit * geometric_lattice_sum(params.lattice(), rate)
    };
    Ok(HNormBound {
        s,
        z: z.z(),
        mean,
        stderr: (var / n).sqrt(),
        n: values.len(),
        failures,
        gamma_theory,
        k_fit,
        bound,
        holds: mean <= bound,
    })
}
