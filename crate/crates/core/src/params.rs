use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Model parameters: the lattice and one coupling `t_j` per axis.
///
/// Only `t` is stored; `r_j = sqrt(1 - t_j^2)` is derived on demand so that
/// `r_j^2 + t_j^2 = 1` holds up to one rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lattice: Lattice,
    t: Vec<f64>,
}

impl ModelParams {
    pub fn new(lattice: Lattice, t: Vec<f64>) -> Result<Self> {
        if t.len() != lattice.dim() {
            return Err(Error::Precondition(format!(
                "expected {} couplings for a {}-dimensional lattice, got {}",
                lattice.dim(),
                lattice.dim(),
                t.len()
            )));
        }
        for &tj in &t {
            check_coupling(tj)?;
        }
        Ok(Self { lattice, t })
    }

    /// Same coupling on every axis.
    pub fn symmetric(dim: usize, side: usize, t: f64) -> Result<Self> {
        Self::new(Lattice::new(dim, side)?, vec![t; dim])
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn r(&self) -> Vec<f64> {
        self.t.iter().map(|t| (1.0 - t * t).sqrt()).collect()
    }

    /// `|t| = max_j t_j`.
    pub fn t_max(&self) -> f64 {
        self.t.iter().copied().fold(0.0, f64::max)
    }

    /// The constant diagonal entry `prod_j (1 - t_j^2)` of `S(t)`.
    pub fn rho_d(&self) -> f64 {
        rho_d(&self.t)
    }
}

pub fn rho_d(t: &[f64]) -> f64 {
    t.iter().map(|t| 1.0 - t * t).product()
}

pub(crate) fn check_coupling(t: f64) -> Result<()> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::ParameterDomain {
            name: "t",
            value: t,
            reason: "couplings must lie in [0, 1)",
        });
    }
    Ok(())
}

pub(crate) fn check_exponent(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::ParameterDomain {
            name: "s",
            value: s,
            reason: "fractional exponent must lie in (0, 1)",
        });
    }
    Ok(())
}
