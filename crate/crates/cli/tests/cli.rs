use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const QUICK: &str = "[mrac]\nduration = 10.0\n\n[nn]\nmax_epochs = 40\n\n[loop]\nduration = 8.0\n";

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wrist-mrac"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) {
    fs::write(dir.join("run.toml"), text).unwrap();
}

#[test]
fn dataset_rows_and_header() {
    let dir = tempdir().unwrap();
    write_config(dir.path(), QUICK);
    let out = cli(dir.path(), &["--config", "run.toml", "dataset"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config-digest: "));
    assert_eq!(lines.next(), Some("t,r,y_plant,y_model,e,u_force_N,theta"));
    assert_eq!(lines.count(), 10_001);
}

#[test]
fn zero_gain_keeps_theta_column_constant() {
    let dir = tempdir().unwrap();
    write_config(
        dir.path(),
        "[mrac]\ngamma = 0.0\ntheta0 = 3.0\nduration = 2.0\n",
    );
    assert_eq!(
        code(&cli(dir.path(), &["--config", "run.toml", "dataset"])),
        0
    );
    let text = fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    let thetas: Vec<&str> = text
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert!(thetas.iter().all(|t| *t == "3"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempdir().unwrap();
    write_config(dir.path(), "[plant]\nzeta = 0.7\ndamping = 2\n");
    let out = cli(dir.path(), &["--config", "run.toml", "dataset"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("damping"));
}

#[test]
fn bad_flags_exit_two() {
    let dir = tempdir().unwrap();
    assert_eq!(
        code(&cli(dir.path(), &["simulate", "--direction", "sideways"])),
        2
    );
    assert_eq!(code(&cli(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&cli(dir.path(), &["train"])), 2);
}

#[test]
fn divergent_mrac_exits_one() {
    let dir = tempdir().unwrap();
    write_config(dir.path(), "[mrac]\ngamma = 1e12\nblowup_limit = 1e3\n");
    let out = cli(dir.path(), &["--config", "run.toml", "dataset"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverg"));
}

#[test]
fn single_direction_and_layer_mismatch() {
    let dir = tempdir().unwrap();
    write_config(dir.path(), QUICK);
    for stage in ["dataset", "train"] {
        assert_eq!(code(&cli(dir.path(), &["--config", "run.toml", stage])), 0);
    }
    let report = fs::read_to_string(dir.path().join("train_report.toml")).unwrap();
    for key in [
        "epochs = 40",
        "gradient",
        "training_loss",
        "validation_loss",
        "r_value",
    ] {
        assert!(report.contains(key), "{key} missing from report");
    }

    let out = cli(
        dir.path(),
        &[
            "--config",
            "run.toml",
            "--out",
            "ulnar",
            "simulate",
            "--direction",
            "ulnar",
            "--weights",
            "weights.txt",
            "--normalizer",
            "normalizer.txt",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut written: Vec<String> = fs::read_dir(dir.path().join("ulnar"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    written.sort();
    assert_eq!(written, ["plot_ulnar.csv", "trace_ulnar.csv"]);
    let trace = fs::read_to_string(dir.path().join("ulnar/trace_ulnar.csv")).unwrap();
    assert_eq!(
        trace.lines().nth(1),
        Some("t,r,y_ref,y_plant,e,u_force_N,tendon1,tendon2,tendon4,tendon5")
    );

    let mut other = QUICK.replace("max_epochs = 40", "max_epochs = 40\nlayers = [1, 4, 1]");
    other.push('\n');
    write_config(dir.path(), &other);
    let out = cli(dir.path(), &["--config", "run.toml", "simulate"]);
    assert_eq!(code(&out), 2);
}

fn write_synthetic_trace(path: &Path, y_plant: impl Fn(usize) -> f64) {
    let mut text = String::from("t,r,y_ref,y_plant,e,u_force_N,tendon1,tendon2,tendon4,tendon5\n");
    for k in 0..3001 {
        let t = k as f64 * 1e-3;
        let y = y_plant(k);
        text.push_str(&format!("{t},0.02,0.02,{y},{},0,0,0,0,0\n", y - 0.02));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn evaluate_perfect_and_unsettled_traces() {
    let dir = tempdir().unwrap();
    write_synthetic_trace(&dir.path().join("perfect.csv"), |_| 0.02);
    write_synthetic_trace(&dir.path().join("late.csv"), |k| {
        if k == 3000 {
            0.0
        } else {
            0.02
        }
    });

    let out = cli(dir.path(), &["evaluate", "perfect.csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out),
        "direction,rmse_m,settling_s,ss_error_m\nperfect,0,0,0\n"
    );

    let out = cli(dir.path(), &["evaluate", "perfect.csv", "late.csv"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("\nlate,"));
    assert!(text.lines().last().unwrap().starts_with("average,"));

    fs::write(dir.path().join("broken.csv"), "t,r\n1,2\n").unwrap();
    let out = cli(dir.path(), &["evaluate", "broken.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.csv"));
}

#[test]
fn gradcheck_cases() {
    let dir = tempdir().unwrap();
    let out = cli(dir.path(), &["gradcheck"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("PASS"));

    write_config(dir.path(), "[nn]\nlayers = [1, 1]\n");
    let out = cli(
        dir.path(),
        &["--config", "run.toml", "gradcheck", "--tol", "1e-12"],
    );
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    fs::write(dir.path().join("nan.txt"), "1 1\n0.5\nNaN\n").unwrap();
    let out = cli(
        dir.path(),
        &["--config", "run.toml", "gradcheck", "--weights", "nan.txt"],
    );
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAIL"));
}
