//! Randomized checks of the kernel lemma: if `sigma >= 0`, `sigma(k,k) = 0`,
//! `N < C`, `sup_k sum_l sigma(k,l) e^{gamma |k-l|} < C` and
//! `(sigma f)(k) >= C f(k)` for `k != j`, then `f(k) <= f(j) e^{-gamma |j-k|}`.
//! Index sets are intervals `{0, ..., n-1}` with the distance `|k - l|`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;

const SLACK: f64 = 1.0 - 1e-12;
const CONCLUSION_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelInstance {
    pub n: usize,
    /// Row-major `n x n` kernel.
    pub sigma: Vec<f64>,
    pub f: Vec<f64>,
    pub c: f64,
    pub gamma: f64,
    pub j: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaOutcome {
    Pass,
    /// A hypothesis fails; the instance says nothing about the lemma.
    Discarded,
    Violation {
        site: usize,
    },
}

impl KernelInstance {
    fn sigma(&self, k: usize, l: usize) -> f64 {
        self.sigma[k * self.n + l]
    }

    pub fn apply(&self, k: usize) -> f64 {
        (0..self.n)
            .filter(|&l| l != k)
            .map(|l| self.sigma(k, l) * self.f[l])
            .sum()
    }

    pub fn weighted_row_sum(&self, gamma: f64) -> f64 {
        (0..self.n)
            .map(|k| {
                (0..self.n)
                    .filter(|&l| l != k)
                    .map(|l| self.sigma(k, l) * (gamma * k.abs_diff(l) as f64).exp())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn hypotheses_hold(&self) -> bool {
        let shape =
            self.sigma.len() == self.n * self.n && self.f.len() == self.n && self.j < self.n;
        shape
            && self.sigma.iter().all(|&x| x >= 0.0)
            && (0..self.n).all(|k| self.sigma(k, k) == 0.0)
            && self.f.iter().all(|&x| x >= 0.0 && x.is_finite())
            && self.c > 0.0
            && self.gamma > 0.0
            && self.weighted_row_sum(0.0) < self.c
            && self.weighted_row_sum(self.gamma) < self.c
            && (0..self.n)
                .filter(|&k| k != self.j)
                .all(|k| self.apply(k) >= self.c * self.f[k])
    }
}

pub fn kernel_lemma_property_test(inst: &KernelInstance) -> LemmaOutcome {
    if !inst.hypotheses_hold() {
        return LemmaOutcome::Discarded;
    }
    let fj = inst.f[inst.j];
    for k in 0..inst.n {
        let bound = fj * (-inst.gamma * k.abs_diff(inst.j) as f64).exp();
        if inst.f[k] > bound * (1.0 + CONCLUSION_RTOL) {
            return LemmaOutcome::Violation { site: k };
        }
    }
    LemmaOutcome::Pass
}

/// Random instance on `{0, ..., n-1}`: a kernel of random range scaled so
/// the `gamma`-weighted row sums stay below `C (1 - delta)`, and `f` the
/// fixed point of `f(k) = slack_k (sigma f)(k) / C` for `k != j` with
/// `f(j)` given, reached by iterating from `f = 0` off `j`.
pub fn generate_instance<R: Rng + ?Sized>(rng: &mut R, n: usize) -> KernelInstance {
    let c = rng.random_range(0.2..3.0);
    let gamma = rng.random_range(0.01..1.5);
    let delta = rng.random_range(0.05..0.5);
    let range = rng.random_range(1..=4usize);
    let density = rng.random_range(0.3..=1.0);
    let j = rng.random_range(0..n);
    let mut sigma = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            if k != l && k.abs_diff(l) <= range && rng.random::<f64>() < density {
                sigma[k * n + l] = rng.random::<f64>();
            }
        }
    }
    let mut inst = KernelInstance {
        n,
        sigma,
        f: vec![0.0; n],
        c,
        gamma,
        j,
    };
    let w = inst.weighted_row_sum(gamma);
    if w > 0.0 {
        let scale = c * (1.0 - delta) / w;
        inst.sigma.iter_mut().for_each(|x| *x *= scale);
    }
    let slack: Vec<f64> = (0..n)
        .map(|_| SLACK * rng.random_range(0.5..=1.0))
        .collect();
    inst.f[j] = rng.random_range(0.1..10.0);
    // Contraction factor at most N / C < 1 - delta.
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n)
            .map(|k| {
                if k == j {
                    inst.f[j]
                } else {
                    slack[k] * inst.apply(k) / c
                }
            })
            .collect();
        let change = next
            .iter()
            .zip(&inst.f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        inst.f = next;
        if change <= 1e-17 * inst.f[j] {
            break;
        }
    }
    inst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub instances: usize,
    pub passed: usize,
    pub discarded: usize,
    pub violations: usize,
}

/// Runs `instances` generated instances on `{0, ..., n-1}` from the stream
/// `(seed, "kernel-lemma", 0)`.
pub fn kernel_lemma_campaign(seed: u64, instances: usize, n: usize) -> CampaignReport {
    let mut rng = seed::stream(seed, "kernel-lemma", 0);
    let mut report = CampaignReport {
        instances,
        passed: 0,
        discarded: 0,
        violations: 0,
    };
    for _ in 0..instances {
        match kernel_lemma_property_test(&generate_instance(&mut rng, n)) {
            LemmaOutcome::Pass => report.passed += 1,
            LemmaOutcome::Discarded => report.discarded += 1,
            LemmaOutcome::Violation { .. } => report.violations += 1,
        }
    }
    report
}
