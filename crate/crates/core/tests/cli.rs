use std::process::Command;

use cogmac::harness::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cogmac"))
}

#[test]
fn list_strategies() {
    let out = bin().arg("list-strategies").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "genie",
        "random",
        "myopic",
        "stay-with-winner",
        "single-index",
        "dp-optimal",
    ] {
        assert!(
            text.lines()
                .any(|l| l.split_whitespace().next() == Some(name)),
            "{name} missing"
        );
    }
}

#[test]
fn print_config_is_the_default() {
    for args in [&["print-config"][..], &["--print-config"][..]] {
        let out = bin().args(args).output().unwrap();
        assert!(out.status.success());
        let parsed =
            ExperimentConfig::from_toml_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
        assert_eq!(parsed, ExperimentConfig::default());
    }
}

fn write_config(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
theta = [0.8, 0.3]
bandwidth = 1.0
horizons = [16, 64]
strategies = ["genie", "single-index"]
trials = 5
master_seed = 3
output = "ignored.csv"
dp_cell_budget = 1000
switching_rule = "round-robin"
"#;

#[test]
fn run_with_overrides_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |out: &str, threads: &str| {
        let path = dir.path().join(out);
        let status = bin()
            .args([
                "run",
                cfg.to_str().unwrap(),
                "--seed",
                "11",
                "--trials",
                "7",
                "--out",
                path.to_str().unwrap(),
            ])
            .env("COGMAC_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "4");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(4) == Some("7")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &SMALL.replace("\"genie\"", "\"oracle\""));
    assert_eq!(
        bin()
            .args(["run", bad.to_str().unwrap()])
            .status()
            .unwrap()
            .code(),
        Some(1)
    );

    let missing = dir.path().join("nope.toml");
    assert_eq!(
        bin()
            .args(["run", missing.to_str().unwrap()])
            .status()
            .unwrap()
            .code(),
        Some(1)
    );

    let dp = write_config(dir.path(), &SMALL.replace("\"genie\"", "\"dp-optimal\""));
    let out = dir.path().join("dp.csv");
    let status = bin()
        .args(["run", dp.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());

    let threads = write_config(dir.path(), SMALL);
    let status = bin()
        .args(["run", threads.to_str().unwrap()])
        .env("COGMAC_THREADS", "many")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
