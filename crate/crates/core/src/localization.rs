//! Finite-volume localization diagnostics. At finite size every spectrum is
//! pure point, so these are scaling indicators, not proofs.

use serde::{Deserialize, Serialize};

use crate::disorder::sample_disorder;
use crate::distribution::PhaseDistribution;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::moments::McOptions;
use crate::parallel::par_map_ordered;
use crate::params::ModelParams;
use crate::seed;
use crate::spectral::{b_limit, check_dense_size, BLimit, EigenSystem, SpectralSnapshot};

pub const MASS_LEVEL: f64 = 0.99;
/// Amplitudes at or below this are left out of the decay fit.
pub const AMPLITUDE_FLOOR: f64 = 1e-14;
pub const JITTER: f64 = 1e-6;
pub const JITTER_LABEL: &str = "simon-wolff-jitter";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorStats {
    pub angle: f64,
    pub ipr: f64,
    pub center: usize,
    /// Negated slope of `log|psi(k)|` against the distance to the center.
    pub decay_rate: f64,
    /// Smallest radius around the center holding `MASS_LEVEL` of the mass.
    pub mass_radius: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStats {
    pub lattice: Lattice,
    pub vectors: Vec<EigenvectorStats>,
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

impl LocalizationStats {
    pub fn median_ipr(&self) -> f64 {
        median(self.vectors.iter().map(|v| v.ipr).collect())
    }

    pub fn median_decay_rate(&self) -> f64 {
        median(self.vectors.iter().map(|v| v.decay_rate).collect())
    }

    pub fn fraction_within(&self, radius: usize) -> f64 {
        if self.vectors.is_empty() {
            return 0.0;
        }
        let n = self
            .vectors
            .iter()
            .filter(|v| v.mass_radius <= radius)
            .count();
        n as f64 / self.vectors.len() as f64
    }
}

/// Statistics of a single normalized vector given by its moduli.
pub fn vector_stats(lattice: &Lattice, amplitude: &[f64], angle: f64) -> EigenvectorStats {
    let ipr = amplitude.iter().map(|a| a.powi(4)).sum();
    let center = (0..amplitude.len())
        .max_by(|&a, &b| amplitude[a].total_cmp(&amplitude[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let dist: Vec<usize> = (0..amplitude.len())
        .map(|k| lattice.distance(center, k))
        .collect();

    let max_r = dist.iter().copied().max().unwrap_or(0);
    let mut shell = vec![0.0; max_r + 1];
    for (k, a) in amplitude.iter().enumerate() {
        shell[dist[k]] += a * a;
    }
    let total: f64 = shell.iter().sum();
    let mut acc = 0.0;
    let mut mass_radius = max_r;
    for (r, m) in shell.iter().enumerate() {
        acc += m;
        if acc >= MASS_LEVEL * total {
            mass_radius = r;
            break;
        }
    }

    let pts: Vec<(f64, f64)> = (0..amplitude.len())
        .filter(|&k| k != center && amplitude[k] > AMPLITUDE_FLOOR)
        .map(|k| (dist[k] as f64, amplitude[k].ln()))
        .collect();
    let decay_rate = if pts.len() < 2 {
        0.0
    } else {
        let n = pts.len() as f64;
        let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        if sxx > 0.0 {
            -sxy / sxx
        } else {
            0.0
        }
    };
    EigenvectorStats {
        angle,
        ipr,
        center,
        decay_rate,
        mass_radius,
    }
}

pub fn localization_stats(eigs: &EigenSystem) -> LocalizationStats {
    let angles = eigs.angles();
    let vectors = (0..eigs.len())
        .map(|n| {
            let amp: Vec<f64> = eigs.vectors.column(n).iter().map(|c| c.norm()).collect();
            vector_stats(&eigs.lattice, &amp, angles[n])
        })
        .collect();
    LocalizationStats {
        lattice: eigs.lattice,
        vectors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimonWolffScan {
    pub thetas: Vec<f64>,
    pub cutoff: f64,
    /// Phase placed at site 0 before taking the measure of `e_0`.
    pub theta0: f64,
    pub n_realizations: usize,
    pub failures: usize,
    pub evaluations: usize,
    pub below_cutoff: usize,
    /// Grid points within the collision tolerance of an atom.
    pub infinite: usize,
    /// Median of `B_hat` over all evaluations, infinities included.
    pub median: f64,
    pub fraction: f64,
}

/// `B_hat(theta)` over a jittered grid and `opts.n_samples` realizations.
/// The hatted measure is the spectral measure of `e_0` with the phase at
/// site 0 replaced by `theta0` (0 by default; other values give the rotated
/// variant). Each grid point moves by a uniform jitter in `[-JITTER, JITTER]`
/// drawn from the stream `(seed, JITTER_LABEL, realization)`.
pub fn simon_wolff_scan(
    params: &ModelParams,
    dist: &PhaseDistribution,
    thetas: &[f64],
    cutoff: f64,
    theta0: Option<f64>,
    opts: &McOptions,
) -> Result<SimonWolffScan> {
    use rand::Rng;
    check_dense_size(params.lattice())?;
    if !(cutoff > 0.0) {
        return Err(Error::ParameterDomain {
            name: "cutoff",
            value: cutoff,
            reason: "must be positive",
        });
    }
    let theta0 = theta0.unwrap_or(0.0);
    let per = par_map_ordered(opts.workers, opts.n_samples, |i| -> Result<Vec<BLimit>> {
        let disorder = sample_disorder(dist, params, opts.seed, i as u64).with_phase(0, theta0);
        let snap = SpectralSnapshot::new(params, &disorder)?;
        let mut rng = seed::stream(opts.seed, JITTER_LABEL, i as u64);
        Ok(thetas
            .iter()
            .map(|&th| b_limit(&snap.measure, th + rng.random_range(-JITTER..=JITTER)))
            .collect())
    })?;
    let mut values = Vec::new();
    let mut failures = 0;
    for (i, r) in per.into_iter().enumerate() {
        match r {
            Ok(v) => values.extend(v),
            Err(e) => {
                log::warn!("realization {i} excluded from the scan: {e}");
                failures += 1;
            }
        }
    }
    let infinite = values.iter().filter(|b| !b.is_finite()).count();
    let vals: Vec<f64> = values.iter().map(BLimit::value).collect();
    let below_cutoff = vals.iter().filter(|&&v| v <= cutoff).count();
    let evaluations = vals.len();
    Ok(SimonWolffScan {
        thetas: thetas.to_vec(),
        cutoff,
        theta0,
        n_realizations: opts.n_samples,
        failures,
        evaluations,
        below_cutoff,
        infinite,
        median: median(vals),
        fraction: if evaluations == 0 {
            0.0
        } else {
            below_cutoff as f64 / evaluations as f64
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_s_tensor, build_u};
    use crate::spectral::eig_unitary;

    fn eigs(dim: usize, side: usize, t: f64, seed: u64) -> EigenSystem {
        let p = ModelParams::symmetric(dim, side, t).unwrap();
        let d = sample_disorder(&PhaseDistribution::Uniform, &p, seed, 0);
        eig_unitary(&build_u(&build_s_tensor(&p).unwrap(), &d).unwrap()).unwrap()
    }

    #[test]
    fn free_case_fully_localized() {
        let st = localization_stats(&eigs(2, 8, 0.0, 1));
        assert_eq!(st.vectors.len(), 64);
        for v in &st.vectors {
            assert!((v.ipr - 1.0).abs() < 1e-12);
            assert_eq!(v.mass_radius, 0);
        }
        assert_eq!(st.fraction_within(0), 1.0);
    }

    #[test]
    fn plane_wave() {
        let lat = Lattice::new(1, 32).unwrap();
        let amp = vec![(1.0f64 / 32.0).sqrt(); 32];
        let v = vector_stats(&lat, &amp, 0.0);
        assert!((v.ipr - 1.0 / 32.0).abs() < 1e-15);
        assert!(v.decay_rate.abs() < 1e-12);
        // 99% of uniform mass on 32 sites needs all but the farthest site.
        assert_eq!(v.mass_radius, 16);
    }

    #[test]
    fn exponential_profile() {
        let lat = Lattice::new(1, 64).unwrap();
        let g: f64 = 0.4;
        let raw: Vec<f64> = (0..64)
            .map(|k| (-g * lat.distance(10, k) as f64).exp())
            .collect();
        let nrm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
        let amp: Vec<f64> = raw.iter().map(|a| a / nrm).collect();
        let v = vector_stats(&lat, &amp, 0.0);
        assert_eq!(v.center, 10);
        assert!((v.decay_rate - g).abs() < 1e-10);
        // Tail mass beyond R is 2 sum_{m>R} e^{-2gm} / total.
        let mass = |r: usize| -> f64 {
            (0..64)
                .filter(|&k| lat.distance(10, k) <= r)
                .map(|k| amp[k] * amp[k])
                .sum()
        };
        assert!(mass(v.mass_radius) >= MASS_LEVEL);
        assert!(mass(v.mass_radius - 1) < MASS_LEVEL);
    }

    #[test]
    fn invariants_on_random_operator() {
        let e = eigs(1, 64, 0.3, 4);
        let st = localization_stats(&e);
        for v in &st.vectors {
            assert!(v.ipr >= 1.0 / 64.0 - 1e-12 && v.ipr <= 1.0 + 1e-12);
            assert!(v.mass_radius <= 32);
        }
    }

    #[test]
    fn strong_disorder_more_localized() {
        let weak = localization_stats(&eigs(1, 128, 0.1, 9)).median_ipr();
        let strong = localization_stats(&eigs(1, 128, 0.9, 9)).median_ipr();
        assert!(weak > 5.0 * strong, "{weak} vs {strong}");
    }

    #[test]
    fn free_scan_single_atom() {
        let p = ModelParams::symmetric(1, 16, 0.0).unwrap();
        let thetas = [0.5, 1.0, 2.0, -2.5];
        let opts = McOptions {
            n_samples: 3,
            seed: 17,
            workers: Some(1),
        };
        let scan =
            simon_wolff_scan(&p, &PhaseDistribution::Uniform, &thetas, 1e6, None, &opts).unwrap();
        assert_eq!(scan.evaluations, 12);
        assert_eq!(scan.infinite, 0);
        assert_eq!(scan.fraction, 1.0);
        let oracle: Vec<f64> = thetas
            .iter()
            .map(|t| 1.0 / (4.0 * (t / 2.0f64).sin().powi(2)))
            .collect();
        let lo = oracle.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = oracle.iter().cloned().fold(0.0, f64::max);
        assert!(scan.median >= lo * (1.0 - 1e-5) && scan.median <= hi * (1.0 + 1e-5));
    }

    #[test]
    fn free_scan_hits_atom() {
        // Grid point 0 lies within the jitter of the atom at 1 but not within 1e-12.
        let p = ModelParams::symmetric(1, 16, 0.0).unwrap();
        let opts = McOptions {
            n_samples: 2,
            seed: 1,
            workers: None,
        };
        let scan =
            simon_wolff_scan(&p, &PhaseDistribution::Uniform, &[0.0], 1e6, None, &opts).unwrap();
        assert_eq!(scan.evaluations, 2);
        assert_eq!(scan.below_cutoff, 0);
        assert!((0.0..=1.0).contains(&scan.fraction));
    }

    #[test]
    fn scan_worker_invariant() {
        let p = ModelParams::symmetric(1, 32, 0.2).unwrap();
        let thetas: Vec<f64> = (0..8).map(|i| -3.0 + 0.75 * i as f64).collect();
        let run = |w| {
            let opts = McOptions {
                n_samples: 6,
                seed: 5,
                workers: Some(w),
            };
            simon_wolff_scan(
                &p,
                &PhaseDistribution::Uniform,
                &thetas,
                1e6,
                Some(0.4),
                &opts,
            )
            .unwrap()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn rejects_large_and_bad_cutoff() {
        let p = ModelParams::symmetric(2, 66, 0.2).unwrap();
        let opts = McOptions {
            n_samples: 1,
            seed: 0,
            workers: None,
        };
        assert!(matches!(
            simon_wolff_scan(&p, &PhaseDistribution::Uniform, &[1.0], 1.0, None, &opts),
            Err(Error::TooLarge { .. })
        ));
        let p = ModelParams::symmetric(1, 8, 0.2).unwrap();
        assert!(
            simon_wolff_scan(&p, &PhaseDistribution::Uniform, &[1.0], 0.0, None, &opts).is_err()
        );
    }
}
