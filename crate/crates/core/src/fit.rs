use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Negated slope of `log(mean)` against distance.
    pub gamma: f64,
    /// Exponentiated intercept.
    pub k: f64,
    pub r2: f64,
    pub window: (usize, usize),
    pub points: usize,
}

impl DecayFit {
    pub fn predict(&self, distance: usize) -> f64 {
        self.k * (-self.gamma * distance as f64).exp()
    }
}

/// Default window `[2, N/2 - 4]`, leaving out the diagonal and first band.
pub fn default_window(side: usize) -> (usize, usize) {
    (2, (side / 2).saturating_sub(4))
}

/// Weighted least squares of `log(mean)` on distance inside `window`
/// (the default when `None`). Weights are `(mean / stderr)^2`, the inverse
/// delta-method variance of `log(mean)`; if any standard error in the window
/// is zero all weights are 1.
pub fn fit_decay(estimate: &MomentEstimate, window: Option<(usize, usize)>) -> Result<DecayFit> {
    let window = window.unwrap_or_else(|| default_window(estimate.lattice.side()));
    let mut pts = Vec::new();
    for r in &estimate.records {
        if r.distance < window.0 || r.distance > window.1 {
            continue;
        }
        if !(r.mean > 0.0) {
            log::warn!(
                "dropping distance {} from the decay fit: mean {}",
                r.distance,
                r.mean
            );
            continue;
        }
        pts.push((r.distance as f64, r.mean.ln(), r.mean, r.stderr));
    }
    if pts.len() < 3 {
        return Err(Error::TooFewFitPoints { points: pts.len() });
    }
    let unit = pts.iter().any(|p| p.3 == 0.0);
    let w: Vec<f64> = pts
        .iter()
        .map(|p| if unit { 1.0 } else { (p.2 / p.3).powi(2) })
        .collect();
    let sw: f64 = w.iter().sum();
    let xm = pts.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let ym = pts.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.0 - xm).powi(2))
        .sum();
    let sxy: f64 = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.0 - xm) * (p.1 - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let ss_tot: f64 = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.1 - ym).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(DecayFit {
        gamma: -slope,
        k: intercept.exp(),
        r2,
        window,
        points: pts.len(),
    })
}
