use std::path::Path;
use std::process::{Command, Output};

use ua_cli::commands::MomentsReport;
use ua_cli::output::RunManifest;

fn ua(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ua"));
    cmd.args(args).env_remove("UA_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

fn run_ok(sub: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = ua(&args, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

const MOMENTS: &str =
    r#"{"model": {"d": 1, "n": 32, "t": [0.02]}, "z": [[0.9, 0.2]], "n_samples": 24, "seed": 3}"#;

#[test]
fn odd_side_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"d": 1, "n": 63, "t": [0.1]}}"#);
    let o = ua(
        &[
            "build-check",
            "--config",
            &cfg,
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.n"));
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"d": 1, "n": 8, "t": [0.1]}, "samples": 3}"#,
    );
    let o = ua(&["constants", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`samples`"));
}

#[test]
fn build_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"d": 2, "n": 8, "t": [0.3, 0.6]}}"#,
    );
    run_ok("build-check", &cfg, &dir.path().join("out"), &[]);
    let csv = std::fs::read_to_string(dir.path().join("out/build_check.csv")).unwrap();
    assert!(csv.starts_with("check,value,tolerance,pass\n"));
    assert_eq!(csv.matches(",true").count(), 3);
}

#[test]
fn moments_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MOMENTS);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok("moments", &cfg, &a, &["--workers", "1"]);
    let o = ua(
        &["moments", "--config", &cfg, "--out", b.to_str().unwrap()],
        &[("UA_WORKERS", "3")],
    );
    assert!(o.status.success());
    for f in [
        "moments_s0_z0.csv",
        "moments_s0_z0.dat",
        "diag_bound_s0.csv",
        "decay_fit.csv",
        "moments.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let ma: RunManifest =
        serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let mb: RunManifest =
        serde_json::from_slice(&std::fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(ma.outputs_hash, mb.outputs_hash);
    assert_eq!(ma.config_hash, mb.config_hash);
    assert_eq!((ma.workers, mb.workers), (Some(1), Some(3)));
    assert_eq!(
        ma.task_seeds["disorder"],
        ua_core::seed::derive_seed(3, "disorder", 0)
    );
    let csv = std::fs::read_to_string(a.join("moments_s0_z0.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("distance,mean,stderr,n"));
    assert_eq!(csv.lines().count(), 1 + 15);
}

#[test]
fn seed_flag_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MOMENTS);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok("moments", &cfg, &a, &[]);
    run_ok("moments", &cfg, &b, &["--seed", "4"]);
    assert_ne!(
        std::fs::read(a.join("moments_s0_z0.csv")).unwrap(),
        std::fs::read(b.join("moments_s0_z0.csv")).unwrap()
    );
}

#[test]
fn empty_distance_list_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"d": 1, "n": 16, "t": [0.1]}, "z": [[0.5, 0.0]], "n_samples": 4, "distances": []}"#,
    );
    run_ok("moments", &cfg, &dir.path().join("out"), &[]);
    let csv = std::fs::read_to_string(dir.path().join("out/moments_s0_z0.csv")).unwrap();
    assert_eq!(csv, "distance,mean,stderr,n\n");
}

#[test]
fn json_mirror_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MOMENTS);
    let out = dir.path().join("out");
    run_ok("moments", &cfg, &out, &[]);
    let text = std::fs::read_to_string(out.join("moments.json")).unwrap();
    let report: MomentsReport = serde_json::from_str(&text).unwrap();
    let mut again = serde_json::to_string_pretty(&report).unwrap();
    again.push('\n');
    assert_eq!(again, text);
    // The CSV carries 17 significant digits, so it agrees bit for bit as well.
    let csv = std::fs::read_to_string(out.join("moments_s0_z0.csv")).unwrap();
    for (line, rec) in csv.lines().skip(1).zip(&report.runs[0].estimate.records) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(
            cols[1].parse::<f64>().unwrap().to_bits(),
            rec.mean.to_bits()
        );
        assert_eq!(
            cols[2].parse::<f64>().unwrap().to_bits(),
            rec.stderr.to_bits()
        );
    }
}

#[test]
fn constants_match_closed_form_offdiagonal_sum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"d": 1, "n": 8, "t": [0.02]}, "s": [0.5, 0.3]}"#,
    );
    run_ok("constants", &cfg, &dir.path().join("out"), &[]);
    let csv = std::fs::read_to_string(dir.path().join("out/constants.csv")).unwrap();
    let t: f64 = 0.02;
    let r = (1.0 - t * t).sqrt();
    for (line, s) in csv.lines().skip(1).zip([0.5, 0.3]) {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.parse().unwrap_or(f64::NAN))
            .collect();
        let n = 2.0 * (r * t).powf(s) + t.powf(2.0 * s);
        assert!((cols[4] - n).abs() < 1e-14, "{line}");
    }
}

#[test]
fn remaining_subcommands_run_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"d": 1, "n": 32, "t": [0.2]}, "z": [[0.4, 0.3], [0.0, 1.8]], "n_samples": 4,
            "identities": {"triples": 10, "radii": [0.0, 0.5, 0.9], "n_theta": 4},
            "localization": {"n_theta": 4, "theta0": 0.3}}"#,
    );
    for sub in ["identities", "decoupling", "spectrum", "localization"] {
        let out = dir.path().join(sub);
        run_ok(sub, &cfg, &out, &[]);
        let m: RunManifest =
            serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
        assert!(m.violations.is_empty(), "{sub}: {:?}", m.violations);
        assert_eq!(m.command, sub);
        for (name, sha) in &m.outputs {
            assert_eq!(sha.len(), 64);
            assert!(out.join(name).exists());
        }
    }
}

#[test]
fn dense_cap_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"d": 2, "n": 66, "t": [0.1]}}"#);
    let o = ua(
        &[
            "spectrum",
            "--config",
            &cfg,
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reduce the side length"));
}
