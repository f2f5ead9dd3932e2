use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embedscat"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn shipped_configs_validate() {
    for name in ["example.toml", "well.toml", "line.toml", "convergence.toml"] {
        let path = config(name);
        let o = run(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn bad_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(config("example.toml")).unwrap();

    let large_ka = dir.path().join("ka.toml");
    std::fs::write(&large_ka, good.replace("k = 1.0", "k = 20.0")).unwrap();
    let o = run(&["validate", "--config", large_ka.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ka"));

    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "[wave\nk = 1").unwrap();
    let o = run(&["converge", "--config", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let missing = dir.path().join("nope.toml");
    let o = run(&["solve-ls", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "").unwrap();
    let out = file.join("sub");
    let o = run(&["converge-1d", "--config", config("line.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn converge_writes_report_timings_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["converge", "--config", config("example.toml").to_str().unwrap(), "--out", out, "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("a,M,"));
    assert!(lines[1].starts_with("0.08,"));
    let timings = std::fs::read_to_string(dir.path().join("timings.csv")).unwrap();
    assert!(timings.starts_with("stage,a,seconds"));
    assert!(dir.path().join("convergence.gp").exists());
}

#[test]
fn place_then_solve_from_cloud_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = config("example.toml");
    let o = run(&["place", "--config", cfg.to_str().unwrap(), "--out", out, "--radius", "0.08"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cloud = dir.path().join("cloud_a0.08.txt");
    assert!(cloud.exists());
    for mode in ["dense", "iterative"] {
        let o = run(&[
            "solve-fl",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out,
            "--cloud",
            cloud.to_str().unwrap(),
            "--mode",
            mode,
            "--grid",
            "5",
        ]);
        assert_eq!(o.status.code(), Some(0), "{mode}: {}", stderr(&o));
    }
    for name in ["fl_values.csv", "fl_grid.csv", "fl_farfield.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let grid = std::fs::read_to_string(dir.path().join("fl_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 125);
}

#[test]
fn effective_and_far_field_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = config("example.toml");
    let o = run(&["solve-ls", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["farfield", "--config", cfg.to_str().unwrap(), "--out", out, "--solver", "fl", "--radius", "0.08"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ff = std::fs::read_to_string(dir.path().join("fl_farfield.csv")).unwrap();
    assert_eq!(ff.lines().count(), 1 + 18 * 36);
    assert!(dir.path().join("ls_grid.csv").exists());
    assert!(dir.path().join("ls_farfield.csv").exists());

    let o = run(&["farfield", "--config", cfg.to_str().unwrap(), "--out", out, "--solver", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn one_dimensional_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = config("line.toml");
    let o = run(&["solve-1d", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("fl_1d.csv").exists());
    let o = run(&["converge-1d", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("report_1d.csv")).unwrap();
    assert_eq!(report.lines().count(), 4);

    let o = run(&["solve-fl", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_ne!(o.status.code(), Some(0));
}
