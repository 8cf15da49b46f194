use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distribution::PhaseDistribution;
use crate::lattice::Lattice;
use crate::params::ModelParams;
use crate::seed;

/// Label under which disorder streams are derived from a seed.
pub const DISORDER_LABEL: &str = "disorder";

/// One sample of i.i.d. phases `theta_k`, reproducible from `(seed, index)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    seed: u64,
    index: u64,
    lattice: Lattice,
    phases: Vec<f64>,
}

impl DisorderRealization {
    /// Explicit phases, mainly for tests and rank-one modifications.
    pub fn from_phases(lattice: Lattice, phases: Vec<f64>) -> Self {
        assert_eq!(phases.len(), lattice.num_sites(), "one phase per site");
        Self {
            seed: 0,
            index: 0,
            lattice,
            phases,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn phase(&self, site: usize) -> f64 {
        self.phases[site]
    }

    /// Diagonal of `D = diag(e^{-i theta_k})`.
    pub fn diagonal(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .map(|&th| Complex64::from_polar(1.0, -th))
            .collect()
    }

    /// `eta_j = 1 - e^{-i theta_j}`.
    pub fn eta(&self, site: usize) -> Complex64 {
        Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -self.phases[site])
    }

    /// Copy with `theta_site` replaced.
    pub fn with_phase(&self, site: usize, theta: f64) -> Self {
        let mut out = self.clone();
        out.phases[site] = theta;
        out
    }
}

pub fn sample_disorder(
    dist: &PhaseDistribution,
    params: &ModelParams,
    seed: u64,
    index: u64,
) -> DisorderRealization {
    let lattice = *params.lattice();
    let mut rng = seed::stream(seed, DISORDER_LABEL, index);
    let phases = (0..lattice.num_sites())
        .map(|_| dist.sample(&mut rng))
        .collect();
    DisorderRealization {
        seed,
        index,
        lattice,
        phases,
    }
}
