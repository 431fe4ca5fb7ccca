use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hmpsbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmpsbm")).args(args).env_remove("HMPSBM_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path) {
    let out = hmpsbm(&["generate", "--study", "s41", "--seed", "5", "--nodes", "40", "--out", path(dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn fit(data: &Path, out: &Path, threads: &str) -> Output {
    hmpsbm(&[
        "fit",
        "--network",
        path(&data.join("network.txt")),
        "--covariates",
        path(&data.join("covariates.csv")),
        "--intercept",
        "--mw",
        "3",
        "--mz",
        "3",
        "--threads",
        threads,
        "--out",
        path(out),
    ])
}

#[test]
fn fits_are_reproducible_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    generate(&data);
    let runs = [("a", "1"), ("b", "1"), ("c", "3")];
    for (name, threads) in runs {
        let out = fit(&data, &dir.path().join(name), threads);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["assignments.csv", "posterior.json", "elbo_trace.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        for other in ["b", "c"] {
            assert_eq!(a, fs::read(dir.path().join(other).join(file)).unwrap(), "{file} differs in run {other}");
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);

    let eval = hmpsbm(&[
        "evaluate",
        "--assignments",
        path(&dir.path().join("a/assignments.csv")),
        "--truth",
        path(&data.join("truth.csv")),
    ]);
    assert_eq!(code(&eval), 0);
    let scores: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    let g = scores["nmi_global"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&g));
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    let out = hmpsbm(&["fit", "--network", path(&missing), "--out", path(dir.path())]);
    assert_eq!(code(&out), 1);

    let net = dir.path().join("net.txt");
    fs::write(&net, "1 3\n0 0 1\n0 2 2\n").unwrap();
    let out = hmpsbm(&["fit", "--network", path(&net), "--out", path(&dir.path().join("o"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let config = dir.path().join("bad.toml");
    fs::write(&config, "[truncation]\nm_w = 0\n").unwrap();
    fs::write(&net, "1 3\n0 0 1\n0 2 1\n").unwrap();
    let out = hmpsbm(&["fit", "--network", path(&net), "--config", path(&config), "--out", path(dir.path())]);
    assert_eq!(code(&out), 1);

    assert_eq!(code(&hmpsbm(&["fit", "--no-such-flag"])), 1);
    assert_eq!(code(&hmpsbm(&["study", "--study", "s99", "--out", path(dir.path())])), 1);
    assert_eq!(code(&hmpsbm(&["--help"])), 0);
}

#[test]
fn unwritable_output_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    generate(&data);
    // a regular file where the output directory should go
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = fit(&data, &blocker.join("out"), "1");
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn default_config_lists_every_section() {
    let out = hmpsbm(&["default-config"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for section in ["[truncation]", "[hyperparameters]", "[fit]", "[adam]", "[init]", "[covariates]", "[evaluation]"] {
        assert!(text.contains(section), "missing {section}");
    }
    assert_eq!(hmpsbm_cli::config::RunConfig::parse(&text).unwrap(), hmpsbm_cli::config::RunConfig::default());
}
