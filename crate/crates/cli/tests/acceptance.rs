//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 7 and 11 compare against `gamma_theory(0.5, 0.1)`, which does
//! not exist because the localization margin at `t = 0.1` is negative. They
//! are evaluated as stated and report FAIL; the process exit status only
//! reflects failures outside `KNOWN_UNATTAINABLE`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;

use num_complex::Complex64;
use serde_json::Value;

use ua_cli::commands::MOMENTS_HEADER;
use ua_cli::config::ExperimentConfig;
use ua_cli::{run, Command};
use ua_core::constants::{c1_from_c2, c2_constant, symmetric_margin, t0_with_c1};
use ua_core::disorder::sample_disorder;
use ua_core::distribution::PhaseDistribution;
use ua_core::kernel_lemma::{generate_instance, kernel_lemma_property_test, LemmaOutcome};
use ua_core::operator::{build_s0, build_s_tensor, build_u, spectrum_arcs};
use ua_core::params::ModelParams;
use ua_core::seed;
use ua_core::spectral::eig_unitary;

const KNOWN_UNATTAINABLE: [u32; 2] = [7, 11];
const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(json: Value, out: &Path) -> ExperimentConfig {
    let mut cfg: ExperimentConfig = serde_json::from_value(json).expect("valid config");
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn unitarity() -> Outcome {
    let mut worst: f64 = 0.0;
    for dim in [1, 2] {
        for side in [8, 64] {
            for t in [0.1, 0.3, 0.6] {
                let p = ModelParams::symmetric(dim, side, t).unwrap();
                let s = build_s_tensor(&p).unwrap();
                let u = build_u(
                    &s,
                    &sample_disorder(&PhaseDistribution::Uniform, &p, SEED, 0),
                )
                .unwrap();
                worst = worst
                    .max(s.unitarity_deviation())
                    .max(u.unitarity_deviation());
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max |M*M - I| = {worst:.2e} over 12 operators (tol 1e-12)"),
    )
}

fn spectrum() -> Outcome {
    let mut outside = 0;
    let mut total = 0;
    for t in [0.3, 0.5f64.sqrt()] {
        let arc = spectrum_arcs(t).unwrap();
        for l in eig_unitary(&build_s0(t, 64).unwrap()).unwrap().eigenvalues {
            total += 1;
            if !arc.contains(l, 1e-10).unwrap() {
                outside += 1;
            }
        }
    }
    outcome(
        outside == 0,
        format!("{outside} of {total} eigenvalues outside the arc (tol 1e-10)"),
    )
}

fn identity_rows(report: &Value, identity: &str) -> Vec<f64> {
    report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["identity"] == identity)
        .map(|r| r["residual"].as_f64().unwrap())
        .collect()
}

fn zs() -> Value {
    serde_json::json!([
        [0.5, 0.2],
        [0.1, -0.9],
        [1.3, 0.4],
        [-0.7, -1.6],
        [0.0, 2.5]
    ])
}

fn defining_identity(tmp: &Path) -> Outcome {
    let out = tmp.join("c3");
    let cfg = config(
        serde_json::json!({"model": {"d": 2, "n": 16, "t": [0.2, 0.3]}, "z": zs(), "seed": SEED,
                           "identities": {"triples": 50, "radii": [], "n_theta": 1}}),
        &out,
    );
    run(Command::Identities, cfg).unwrap();
    let r = identity_rows(&read_json(&out.join("identities.json")), "defining");
    let max = r.iter().cloned().fold(0.0, f64::max);
    outcome(
        r.len() == 50 && max <= 1e-9,
        format!("{} triples, max residual {max:.2e} (tol 1e-9)", r.len()),
    )
}

/// Criteria 4 and 10 share one run at d=1, N=64, t=0.3.
fn rank_one_and_norm_split(tmp: &Path) -> (Outcome, Outcome) {
    let out = tmp.join("c4");
    let cfg = config(
        serde_json::json!({"model": {"d": 1, "n": 64, "t": [0.3]}, "z": zs(), "seed": SEED,
                           "identities": {"triples": 50, "radii": [0.5, 0.9, 0.99], "n_theta": 16}}),
        &out,
    );
    run(Command::Identities, cfg).unwrap();
    let rep = read_json(&out.join("identities.json"));
    let r = identity_rows(&rep, "rank_one");
    let trivial = identity_rows(&rep, "rank_one_trivial");
    let max = r.iter().cloned().fold(0.0, f64::max);
    let c4 = outcome(
        r.len() == 50 && max <= 1e-9 && trivial == [0.0],
        format!(
            "{} triples, max residual {max:.2e} (tol 1e-9); theta_j = 0 residual {:?}",
            r.len(),
            trivial
        ),
    );
    let splits = rep["norm_split"].as_array().unwrap();
    let max_split = splits
        .iter()
        .map(|s| s["residual"].as_f64().unwrap())
        .fold(0.0, f64::max);
    let monotone = rep["b_monotone"] == Value::Bool(true);
    let c10 = outcome(
        splits.len() == 48 && max_split <= 1e-8 && monotone,
        format!(
            "{} (r, theta) points, max residual {max_split:.2e} (tol 1e-8), B nondecreasing in r: {monotone}",
            splits.len()
        ),
    );
    (c4, c10)
}

fn decoupling(tmp: &Path) -> Outcome {
    let out = tmp.join("c5");
    let cfg = config(
        serde_json::json!({"model": {"d": 1, "n": 8, "t": [0.1]}, "s": [0.5]}),
        &out,
    );
    let o = run(Command::Decoupling, cfg).unwrap();
    let rep = read_json(&out.join("decoupling.json"));
    let checks = rep[0]["checks"].as_array().unwrap();
    let unit = checks
        .iter()
        .filter(|c| {
            let b = Complex64::new(
                c["beta"][0].as_f64().unwrap(),
                c["beta"][1].as_f64().unwrap(),
            );
            (b.norm() - 1.0).abs() < 1e-15
        })
        .count();
    let c2 = rep[0]["c2"].as_f64().unwrap();
    // Uniform measure: sup at |beta| = 1, int |e^{it} - 1|^{-s} dt/2pi = 2^{-s} B((1-s)/2, 1/2) / pi.
    let s: f64 = 0.5;
    let oracle = 2f64.powf(-s) * statrs::function::beta::beta((1.0 - s) / 2.0, 0.5) / PI;
    let rel = (c2 - oracle).abs() / oracle;
    outcome(
        o.ok() && checks.len() == 25 && unit > 0 && rel <= 1e-6,
        format!(
            "{} pairs ({unit} with |beta| = 1), {} violations; C2 = {c2:.12} vs oracle {oracle:.12}, rel {rel:.1e} (tol 1e-6)",
            checks.len(),
            o.manifest.violations.len()
        ),
    )
}

fn moments_config(json: Value, out: &Path, workers: usize) -> ExperimentConfig {
    let mut cfg = config(json, out);
    cfg.workers = Some(workers);
    cfg
}

fn diag_json() -> Value {
    let z: Vec<[f64; 2]> = [0.5, 0.9, 0.99, 1.01, 1.1, 2.0]
        .iter()
        .map(|&r| {
            let z = Complex64::from_polar(r, 0.5);
            [z.re, z.im]
        })
        .collect();
    serde_json::json!({"model": {"d": 1, "n": 128, "t": [0.2]}, "s": [0.5], "z": z,
                       "n_samples": 500, "seed": SEED, "distances": [0, 1, 2]})
}

fn decay_json() -> Value {
    serde_json::json!({"model": {"d": 1, "n": 256, "t": [0.1]}, "s": [0.5], "z": [[0.95, 0.0]],
                       "n_samples": 2000, "seed": SEED, "fit_window": [2, 20]})
}

fn diagonal_bound(tmp: &Path) -> Outcome {
    let out = tmp.join("c6");
    run(Command::Moments, moments_config(diag_json(), &out, 1)).unwrap();
    let rep = read_json(&out.join("moments.json"));
    let d = &rep["diag_bound"][0];
    let c2 = d["c2"].as_f64().unwrap();
    let rows = d["rows"].as_array().unwrap();
    let held = rows
        .iter()
        .filter(|r| r["holds"] == Value::Bool(true))
        .count();
    let max = rows
        .iter()
        .map(|r| r["mean"].as_f64().unwrap())
        .fold(0.0, f64::max);
    outcome(
        held == 6,
        format!("{held}/6 z hold; max mean {max:.4} vs C2 = {c2:.4} (+3 stderr)"),
    )
}

fn moment_decay(tmp: &Path) -> Outcome {
    let out = tmp.join("c7");
    run(Command::Moments, moments_config(decay_json(), &out, 1)).unwrap();
    let header = std::fs::read_to_string(out.join("moments_s0_z0.csv")).unwrap();
    let header_ok = header.lines().next() == Some(MOMENTS_HEADER.join(",").as_str());
    let rep = read_json(&out.join("moments.json"));
    let check = &rep["runs"][0]["check"];
    let margin = rep["constants"][0]["margin"].as_f64().unwrap();
    let decreasing = check["strictly_decreasing"] == Value::Bool(true);
    let r2 = check["r2"].as_f64().unwrap();
    let g = check["gamma_emp"].as_f64().unwrap();
    let gamma_ok = check["gamma_ok"] == Value::Bool(true);
    let bound_ok = check["bound_holds"] == Value::Bool(true);
    outcome(
        header_ok && decreasing && r2 >= 0.98 && gamma_ok && bound_ok,
        format!(
            "decreasing on 2..20: {decreasing}; R2 = {r2:.4} (>= 0.98); gamma_emp = {g:.4}; \
             gamma_theory = {} (margin {margin:.4}); gamma_emp >= gamma_theory - 0.1: {gamma_ok}; K_fit bound: {bound_ok}",
            check["gamma_theory"]
        ),
    )
}

fn threshold() -> Outcome {
    let s = 0.5;
    let c1 = c1_from_c2(c2_constant(&PhaseDistribution::Uniform, s).unwrap());
    let m_small = symmetric_margin(c1, s, 1, 0.01).unwrap();
    let m_large = symmetric_margin(c1, s, 1, 0.99).unwrap();
    let t1 = t0_with_c1(c1, s, 1).unwrap();
    let t2 = t0_with_c1(c1, s, 2).unwrap();
    let inside = symmetric_margin(c1, s, 1, t1).unwrap();
    let beyond = symmetric_margin(c1, s, 1, t1 + 1e-8).unwrap();
    outcome(
        m_small > 0.0 && m_large < 0.0 && inside > 0.0 && beyond <= 0.0 && t2 <= t1,
        format!(
            "margin(0.01) = {m_small:.4}, margin(0.99) = {m_large:.4}; t0 = {t1:.10} with margins \
             {inside:.1e} / {beyond:.1e} across 1e-8; t0(d=2) = {t2:.10}"
        ),
    )
}

fn kernel_lemma() -> Outcome {
    let mut rng = seed::stream(SEED, "kernel-lemma", 0);
    let (mut kept, mut violations, mut generated) = (0, 0, 0);
    while kept < 500 {
        generated += 1;
        match kernel_lemma_property_test(&generate_instance(&mut rng, 33)) {
            LemmaOutcome::Pass => kept += 1,
            LemmaOutcome::Violation { .. } => {
                kept += 1;
                violations += 1;
            }
            LemmaOutcome::Discarded => {}
        }
    }
    outcome(
        violations == 0,
        format!("{kept} instances meeting every hypothesis ({generated} generated), {violations} violations"),
    )
}

fn localization(tmp: &Path) -> Outcome {
    let summary = |t: f64, name: &str| -> Value {
        let out = tmp.join(name);
        let cfg = config(
            serde_json::json!({"model": {"d": 1, "n": 256, "t": [t]}, "s": [0.5], "n_samples": 20,
                               "seed": SEED, "localization": {"n_theta": 8}}),
            &out,
        );
        run(Command::Localization, cfg).unwrap();
        read_json(&out.join("localization.json"))
    };
    let weak = summary(0.1, "c11a");
    let strong = summary(0.9, "c11b");
    let ipr_weak = weak["median_ipr"].as_f64().unwrap();
    let ipr_strong = strong["median_ipr"].as_f64().unwrap();
    let ratio = ipr_weak / ipr_strong;
    let fraction = weak["fraction_within_radius"].as_f64();
    let confined = fraction.is_some_and(|f| f >= 0.95);
    outcome(
        ratio >= 10.0 && confined,
        format!(
            "median IPR {ipr_weak:.4} (t=0.1) vs {ipr_strong:.4} (t=0.9), ratio {ratio:.1} (>= 10); \
             radius ceil(3/gamma_theory) = {} with gamma_theory = {}; fraction within radius {} (>= 0.95)",
            weak["radius"], weak["gamma_theory"], weak["fraction_within_radius"]
        ),
    )
}

fn determinism(tmp: &Path) -> Outcome {
    let mut same = true;
    let mut files = 0;
    for (name, json) in [("c6", diag_json()), ("c7", decay_json())] {
        let base = csv_files(&tmp.join(name));
        let again = tmp.join(format!("{name}-w4"));
        run(Command::Moments, moments_config(json, &again, 4)).unwrap();
        let other = csv_files(&again);
        files += base.len();
        same &= !base.is_empty() && base == other;
    }
    outcome(
        same,
        format!("{files} CSV files byte-identical between 1 and 4 workers: {same}"),
    )
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!(
            "{} [{n:>2}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o));
    };
    report(1, "unitarity", unitarity());
    report(2, "spectrum arc", spectrum());
    report(3, "defining identity", defining_identity(dir));
    let (c4, c10) = rank_one_and_norm_split(dir);
    report(4, "rank-one identity", c4);
    report(5, "decoupling", decoupling(dir));
    report(6, "diagonal moment bound", diagonal_bound(dir));
    report(7, "fractional moment decay", moment_decay(dir));
    report(8, "condition and threshold", threshold());
    report(9, "kernel lemma", kernel_lemma());
    report(10, "norm split and monotonicity", c10);
    report(11, "localization diagnostics", localization(dir));
    report(12, "determinism across workers", determinism(dir));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    let unexpected: Vec<u32> = failed
        .iter()
        .copied()
        .filter(|n| !KNOWN_UNATTAINABLE.contains(n))
        .collect();
    println!(
        "{} of {} criteria pass; failing: {failed:?}; known unattainable: {KNOWN_UNATTAINABLE:?}",
        results.len() - failed.len(),
        results.len()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
