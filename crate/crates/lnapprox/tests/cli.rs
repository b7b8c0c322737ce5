//! End-to-end checks of the `lnapprox` binary.

use std::path::Path;
use std::process::{Command, Output};

fn lnapprox(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lnapprox")).args(args).arg("--out").arg(out).output().unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn same_seed_gives_identical_tables_and_other_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        assert_eq!(code(&lnapprox(&out, &["compile", "--kind", "shallow", "--seed", seed, "--samples", "500"])), 0);
        std::fs::read(out.join("compile.csv")).unwrap()
    };
    let (a, b, c) = (run("a", "5"), run("b", "5"), run("c", "6"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn seed_is_recorded_in_every_table_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&lnapprox(out, &["approx", "--target", "cos", "--eps", "0.1", "--seed", "42"])), 0);
    let csv = read(&out.join("approx.csv"));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("seed,"));
    assert!(lines.all(|l| l.starts_with("42,")));
    let config: serde_json::Value = serde_json::from_str(&read(&out.join("approx_config.json"))).unwrap();
    assert_eq!(config["seed"], 42);
}

#[test]
fn timing_lives_outside_the_main_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&lnapprox(out, &["sobolev", "--N", "4", "--grid", "129"])), 0);
    assert!(!read(&out.join("sobolev.csv")).contains("runtime"));
    assert!(read(&out.join("sobolev_timing.csv")).starts_with("seed,"));
}

#[test]
fn exit_codes_distinguish_failures_from_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&lnapprox(out, &["negsearch", "--restarts", "20", "--refine-iters", "10", "--threshold", "0.5"])), 0);
    // A threshold above any attainable sup error fails the check.
    assert_eq!(code(&lnapprox(out, &["negsearch", "--restarts", "20", "--refine-iters", "10", "--threshold", "5"])), 1);
    assert_eq!(code(&lnapprox(out, &["compile", "--kind", "bogus"])), 2);
    assert_eq!(code(&lnapprox(out, &["sobolev", "--N", "32"])), 2);
    assert_eq!(code(&lnapprox(out, &["sobolev", "--d", "2", "--N", "3"])), 2);
    assert_eq!(code(&lnapprox(out, &["compile", "--no-such-flag"])), 2);
}

#[test]
fn config_files_are_validated_and_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = dir.path().join("run.json");

    std::fs::write(&config, r#"{"kind": "sign", "ns": 4, "samples": 300, "seed": 9}"#).unwrap();
    let cfg = config.to_str().unwrap();
    assert_eq!(code(&lnapprox(&out, &["compile", "--config", cfg, "--ns", "2"])), 0);
    let row = read(&out.join("compile.csv"));
    let row = row.lines().nth(1).unwrap();
    assert!(row.starts_with("9,sign,2,"), "{row}");

    std::fs::write(&config, r#"{"kind": "sign", "colour": 1}"#).unwrap();
    assert_eq!(code(&lnapprox(&out, &["compile", "--config", cfg])), 2);
    std::fs::write(&config, r#"{"kind": 3}"#).unwrap();
    assert_eq!(code(&lnapprox(&out, &["compile", "--config", cfg])), 2);
    std::fs::write(&config, "{not json").unwrap();
    assert_eq!(code(&lnapprox(&out, &["compile", "--config", cfg])), 2);
    assert_eq!(code(&lnapprox(&out, &["compile", "--config", dir.path().join("missing.json").to_str().unwrap()])), 2);
}

#[test]
fn saved_nets_verify_against_their_sources() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&lnapprox(out, &["compile", "--kind", "deep", "--samples", "200"])), 0);
    let (net, src) = (out.join("compile_net.json"), out.join("compile_source.json"));
    let args = ["verify", "--net", net.to_str().unwrap(), "--reference", src.to_str().unwrap(), "--lo=-3", "--hi", "3"];
    let output = lnapprox(out, &args);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("PASS"));
    // Both or neither comparison mode is a usage error.
    assert_eq!(code(&lnapprox(out, &["verify", "--net", net.to_str().unwrap()])), 2);
}

#[test]
fn partition_report_covers_every_cube() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&lnapprox(out, &["pou", "--d", "2", "--N", "4"])), 0);
    assert_eq!(read(&out.join("pou.csv")).lines().count(), 1 + 16);
}
