//! Monte Carlo estimates of fractional moments `E |F(k, j; z)|^s`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::band::BandedUnitary;
use crate::constants::c2_constant;
use crate::disorder::sample_disorder;
use crate::distribution::PhaseDistribution;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::operator::{build_s_tensor, build_u};
use crate::parallel::par_map_ordered;
use crate::params::{check_exponent, ModelParams};
use crate::resolvent::{Resolvent, SpectralParameter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub n_samples: usize,
    /// Seed of the disorder streams; realization `i` uses stream index `i`.
    pub seed: u64,
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub distance: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Realizations entering the mean.
    pub n: usize,
    /// Sites at this distance averaged within each realization.
    pub sites: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub s: f64,
    pub z: Complex64,
    pub reference: usize,
    pub lattice: Lattice,
    pub seed: u64,
    pub n_samples: usize,
    /// Realizations whose solve failed and were excluded.
    pub failures: usize,
    pub records: Vec<MomentRecord>,
}

/// Mean and standard error of the mean, accumulated in slice order.
fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_samples(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Precondition(format!(
            "n_samples must be at least 2, got {n}"
        )));
    }
    Ok(())
}

fn realization_u(
    s_op: &BandedUnitary,
    params: &ModelParams,
    dist: &PhaseDistribution,
    seed: u64,
    index: usize,
) -> Result<BandedUnitary> {
    build_u(s_op, &sample_disorder(dist, params, seed, index as u64))
}

/// Averages `|F(k, j; z)|^s` over realizations and, within each
/// realization, over all sites `k` at periodic distance `l` from `j`.
pub fn estimate_moments(
    params: &ModelParams,
    dist: &PhaseDistribution,
    s: f64,
    z: SpectralParameter,
    j: usize,
    distances: &[usize],
    opts: &McOptions,
) -> Result<MomentEstimate> {
    check_exponent(s)?;
    check_samples(opts.n_samples)?;
    dist.validate()?;
    let lattice = *params.lattice();
    if j >= lattice.num_sites() {
        return Err(Error::Precondition(format!(
            "reference site {j} outside {lattice}"
        )));
    }
    let max = lattice.max_decay_distance();
    if let Some(&bad) = distances.iter().find(|&&l| l > max) {
        return Err(Error::Precondition(format!(
            "distance {bad} exceeds N/2 - 2 = {max} on {lattice}"
        )));
    }
    let s_op = build_s_tensor(params)?;
    let spheres: Vec<Vec<usize>> = distances.iter().map(|&l| lattice.sphere(j, l)).collect();

    let per_realization = par_map_ordered(opts.workers, opts.n_samples, |i| -> Result<Vec<f64>> {
        let u = realization_u(&s_op, params, dist, opts.seed, i)?;
        let col = Resolvent::new(&u, &s_op, z)?.column(j)?;
        Ok(spheres
            .iter()
            .map(|sites| {
                sites.iter().map(|&k| col[k].norm().powf(s)).sum::<f64>() / sites.len() as f64
            })
            .collect())
    })?;

    let mut ok = Vec::with_capacity(opts.n_samples);
    let mut failures = 0;
    for (i, r) in per_realization.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                log::warn!("realization {i} excluded: {e}");
                failures += 1;
            }
        }
    }
    if ok.len() < 2 {
        return Err(Error::Precondition(format!(
            "only {} of {} realizations solved",
            ok.len(),
            opts.n_samples
        )));
    }
    let records = distances
        .iter()
        .enumerate()
        .map(|(d, &distance)| {
            let column: Vec<f64> = ok.iter().map(|v| v[d]).collect();
            let (mean, stderr) = mean_stderr(&column);
            MomentRecord {
                distance,
                mean,
                stderr,
                n: ok.len(),
                sites: spheres[d].len(),
            }
        })
        .collect();
    Ok(MomentEstimate {
        s,
        z: z.z(),
        reference: j,
        lattice,
        seed: opts.seed,
        n_samples: opts.n_samples,
        failures,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagBoundRow {
    pub z: Complex64,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub failures: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagBoundReport {
    pub s: f64,
    pub c2: f64,
    pub site: usize,
    pub rows: Vec<DiagBoundRow>,
}

impl DiagBoundReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    /// Largest mean over the grid.
    pub fn max_mean(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.mean)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `E |F(k, k; z)|^s <= C2 + 3 stderr` at site `k = 0` for every `z` in the
/// grid. All `z` share the same realizations.
pub fn diag_moment_bound_check(
    params: &ModelParams,
    dist: &PhaseDistribution,
    s: f64,
    zs: &[SpectralParameter],
    opts: &McOptions,
) -> Result<DiagBoundReport> {
    check_exponent(s)?;
    check_samples(opts.n_samples)?;
    let c2 = c2_constant(dist, s)?;
    let s_op = build_s_tensor(params)?;
    let site = 0;
    let per_realization = par_map_ordered(
        opts.workers,
        opts.n_samples,
        |i| -> Result<Vec<Result<f64>>> {
            let u = realization_u(&s_op, params, dist, opts.seed, i)?;
            Ok(zs
                .iter()
                .map(|&z| {
                    Ok(Resolvent::new(&u, &s_op, z)?.column(site)?[site]
                        .norm()
                        .powf(s))
                })
                .collect())
        },
    )?;
    let per_realization = per_realization.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = zs
        .iter()
        .enumerate()
        .map(|(zi, z)| {
            let mut values = Vec::with_capacity(opts.n_samples);
            let mut failures = 0;
            for (i, r) in per_realization.iter().enumerate() {
                match &r[zi] {
                    Ok(v) => values.push(*v),
                    Err(e) => {
                        log::warn!("realization {i} at z = {} excluded: {e}", z.z());
                        failures += 1;
                    }
                }
            }
            let (mean, stderr) = if values.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                mean_stderr(&values)
            };
            DiagBoundRow {
                z: z.z(),
                mean,
                stderr,
                n: values.len(),
                failures,
                holds: mean <= c2 + 3.0 * stderr,
            }
        })
        .collect();
    Ok(DiagBoundReport { s, c2, site, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n: usize, workers: Option<usize>) -> McOptions {
        McOptions {
            n_samples: n,
            seed: 7,
            workers,
        }
    }

    #[test]
    fn free_case() {
        let p = ModelParams::symmetric(1, 32, 0.0).unwrap();
        let z = SpectralParameter::new(Complex64::new(0.95, 0.0)).unwrap();
        let est = estimate_moments(
            &p,
            &PhaseDistribution::Uniform,
            0.5,
            z,
            3,
            &[0, 1, 2, 5],
            &opts(8, None),
        )
        .unwrap();
        assert!(est.records[0].mean > 0.0);
        for r in &est.records[1..] {
            assert_eq!(r.mean, 0.0);
            assert_eq!(r.stderr, 0.0);
        }
        let z0 = SpectralParameter::new(Complex64::new(0.0, 0.0)).unwrap();
        let est = estimate_moments(
            &p,
            &PhaseDistribution::Uniform,
            0.5,
            z0,
            3,
            &[0],
            &opts(8, None),
        )
        .unwrap();
        assert!((est.records[0].mean - 1.0).abs() < 1e-14);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = ModelParams::symmetric(2, 8, 0.2).unwrap();
        let z = SpectralParameter::new(Complex64::from_polar(0.9, 0.2)).unwrap();
        let dist = PhaseDistribution::Uniform;
        let a = estimate_moments(&p, &dist, 0.5, z, 0, &[0, 1, 2], &opts(24, Some(1))).unwrap();
        let b = estimate_moments(&p, &dist, 0.5, z, 0, &[0, 1, 2], &opts(24, Some(4))).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records[1].sites, 8);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ModelParams::symmetric(1, 16, 0.2).unwrap();
        let z = SpectralParameter::new(Complex64::new(0.5, 0.0)).unwrap();
        let d = PhaseDistribution::Uniform;
        assert!(estimate_moments(&p, &d, 0.5, z, 0, &[7], &opts(4, None)).is_err());
        assert!(estimate_moments(&p, &d, 0.5, z, 0, &[6], &opts(1, None)).is_err());
        assert!(estimate_moments(&p, &d, 1.5, z, 0, &[6], &opts(4, None)).is_err());
        let empty = estimate_moments(&p, &d, 0.5, z, 0, &[], &opts(4, None)).unwrap();
        assert!(empty.records.is_empty());
    }

    #[test]
    fn diagonal_bound_free_and_zero() {
        let d = PhaseDistribution::Uniform;
        let p = ModelParams::symmetric(1, 16, 0.0).unwrap();
        let zs = [
            SpectralParameter::new(Complex64::new(0.0, 0.0)).unwrap(),
            SpectralParameter::new(Complex64::new(0.99, 0.0)).unwrap(),
        ];
        let rep = diag_moment_bound_check(&p, &d, 0.5, &zs, &opts(200, None)).unwrap();
        assert!((rep.rows[0].mean - 1.0).abs() < 1e-14);
        assert!(rep.all_hold(), "{rep:?}");
    }
}
