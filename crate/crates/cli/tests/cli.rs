use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torus-mfg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_dir(out: &Path, sub: &str, name: &str) -> PathBuf {
    out.join(sub).join(name)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn unknown_subcommand_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run(tmp.path(), &["bogus"])), 2);
}

#[test]
fn invalid_configs_exit_with_config_code() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        code(&run(tmp.path(), &["value", "--set", "grid.size=3"])),
        2
    );
    assert_eq!(
        code(&run(
            tmp.path(),
            &["value", "--set", "model.hamiltonian=cubic"]
        )),
        2
    );
    assert_eq!(
        code(&run(tmp.path(), &["suite", "--set", "suite.criteria=[99]"])),
        2
    );
    let missing = tmp.path().join("missing.toml");
    assert_eq!(
        code(&run(
            tmp.path(),
            &["sample", "--config", missing.to_str().unwrap()]
        )),
        2
    );
}

#[test]
fn free_model_writes_a_zero_value_field() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        tmp.path(),
        &[
            "solve-mfg",
            "--set",
            "model.coupling=[]",
            "--set",
            "model.terminal=[]",
            "--set",
            "grid.steps=20",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = run_dir(tmp.path(), "solve-mfg", "seed-0");
    assert!(dir.join("config.toml").exists() && dir.join("summary.toml").exists());
    let csv = fs::read_to_string(dir.join("solution.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| l.starts_with("value,")).collect();
    assert_eq!(rows.len(), 21);
    for row in rows {
        assert!(
            row.split(',')
                .skip(2)
                .all(|v| v.parse::<f64>().unwrap() == 0.0),
            "{row}"
        );
    }
}

#[test]
fn resolved_configs_reproduce_csvs_byte_for_byte() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("a");
    let o = run(
        &first,
        &[
            "characteristics",
            "--seed",
            "5",
            "--set",
            "characteristics.steps=4",
            "--set",
            "name=\"x\"",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = run_dir(&first, "characteristics", "x");
    let resolved = dir.join("config.toml");
    let second = tmp.path().join("b");
    assert_eq!(
        code(&run(
            &second,
            &["characteristics", "--config", resolved.to_str().unwrap()]
        )),
        0
    );
    let again = run_dir(&second, "characteristics", "x");
    for file in ["flow.csv", "config.toml"] {
        assert_eq!(
            fs::read(dir.join(file)).unwrap(),
            fs::read(again.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn sampling_is_seeded() {
    let tmp = TempDir::new().unwrap();
    let read = |seed: &str| {
        let o = run(
            tmp.path(),
            &["sample", "--seed", seed, "--set", "sample.n=200"],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let dir = run_dir(tmp.path(), "sample", &format!("seed-{seed}"));
        (
            fs::read(dir.join("samples.txt")).unwrap(),
            fs::read(dir.join("frequencies.csv")).unwrap(),
        )
    };
    let a = read("1");
    assert_eq!(a, read("1"));
    assert_ne!(a.0, read("2").0);
}

#[test]
fn numerical_failures_leave_a_diagnostic() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        tmp.path(),
        &[
            "hjb-residual",
            "--set",
            "hjb.ball=1.0",
            "--set",
            "hjb.orders=[2]",
        ],
    );
    assert_eq!(code(&o), 3);
    let error = fs::read_to_string(run_dir(tmp.path(), "hjb-residual", "seed-0").join("error.txt"))
        .unwrap();
    assert!(error.contains("precondition"), "{error}");
}

#[test]
fn every_subcommand_writes_its_csv() {
    let tmp = TempDir::new().unwrap();
    let quick = ["--set", "grid.steps=40", "--set", "solver.n_starts=1"];
    for (sub, file) in [
        ("value", "value.csv"),
        ("hjb-residual", "hjb_residual.csv"),
        ("master-residual", "master_residual.csv"),
        ("mollify", "derivative.csv"),
        ("truncation-error", "truncation.csv"),
        ("one-sided-lipschitz", "lipschitz.csv"),
    ] {
        let mut args = vec![sub];
        args.extend(quick);
        let o = run(tmp.path(), &args);
        assert_eq!(code(&o), 0, "{sub}: {}", String::from_utf8_lossy(&o.stderr));
        let csv = fs::read_to_string(run_dir(tmp.path(), sub, "seed-0").join(file)).unwrap();
        assert!(csv.lines().count() >= 2, "{sub}: {csv}");
    }
}

#[test]
fn suite_reports_selected_criteria() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["suite", "--set", "suite.criteria=[1, 3]"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("[PASS]")).count(),
        2,
        "{stdout}"
    );
    let csv = fs::read_to_string(run_dir(tmp.path(), "suite", "seed-0").join("suite.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
