use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolutely continuous phase distribution `dnu = tau(theta) dtheta` on `[0, 2pi)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseDistribution {
    #[default]
    Uniform,
    /// `tau(theta) = (1 + epsilon cos theta) / 2pi` with `|epsilon| < 1`.
    RaisedCosine { epsilon: f64 },
}

impl PhaseDistribution {
    pub fn raised_cosine(epsilon: f64) -> Result<Self> {
        let d = Self::RaisedCosine { epsilon };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Uniform => Ok(()),
            Self::RaisedCosine { epsilon } if epsilon.abs() < 1.0 => Ok(()),
            Self::RaisedCosine { epsilon } => Err(Error::ParameterDomain {
                name: "epsilon",
                value: epsilon,
                reason: "raised-cosine amplitude must satisfy |epsilon| < 1",
            }),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Self::Uniform => "uniform".to_string(),
            Self::RaisedCosine { epsilon } => format!("raised_cosine({epsilon})"),
        }
    }

    pub fn density(&self, theta: f64) -> f64 {
        match *self {
            Self::Uniform => 1.0 / TAU,
            Self::RaisedCosine { epsilon } => (1.0 + epsilon * theta.cos()) / TAU,
        }
    }

    /// `||tau||_inf`, exact.
    pub fn sup_norm(&self) -> f64 {
        match *self {
            Self::Uniform => 1.0 / TAU,
            Self::RaisedCosine { epsilon } => (1.0 + epsilon.abs()) / TAU,
        }
    }

    /// Cumulative distribution on `[0, 2pi]`.
    pub fn cdf(&self, theta: f64) -> f64 {
        match *self {
            Self::Uniform => theta / TAU,
            Self::RaisedCosine { epsilon } => (theta + epsilon * theta.sin()) / TAU,
        }
    }

    /// Draws one phase in `[0, 2pi)`. Raised-cosine uses exact rejection
    /// against the uniform envelope.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform => TAU * rng.random::<f64>(),
            Self::RaisedCosine { epsilon } => {
                let envelope = 1.0 + epsilon.abs();
                loop {
                    let theta = TAU * rng.random::<f64>();
                    let u = envelope * rng.random::<f64>();
                    if u < 1.0 + epsilon * theta.cos() {
                        return theta;
                    }
                }
            }
        }
    }
}

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}
