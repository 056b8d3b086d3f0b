//! End-to-end runs of the `sastep` binary.

use std::path::Path;
use std::process::{Command, Output};

fn sastep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sastep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_drift_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("drift");
    let o = sastep(&["run", "drift", "--episodes", "50", "--paths", "3", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("pass+pc: l2_error at step 50"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("step,metric,value,algo,policy,seed\n"));
    assert!(out.join("curves.svg").exists());
}

#[test]
fn config_compare_runs_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("drift.conf");
    std::fs::write(
        &cfg,
        "[experiment]\nenvironment = drift\ncompare = rl:inv@1, rl:pc, saga:pc, pass:pc\nepisodes = 20\npaths = 2\n[drift]\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = sastep(&["run", "drift", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for label in ["rl+inv@1", "rl+pc", "saga+pc", "pass+pc"] {
        assert!(text.contains(label), "{label} missing from {text}");
    }
}

#[test]
fn run_placement_and_execution() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p");
    let o = sastep(&[
        "run",
        "placement",
        "--episodes",
        "20",
        "--paths",
        "2",
        "--out",
        path(&p),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(p.join("control_reference.svg").exists());
    assert!(p.join("control_pass_pc.svg").exists());

    let e = dir.path().join("e");
    let o = sastep(&[
        "run",
        "execution",
        "--iterations",
        "2000",
        "--paths",
        "2",
        "--out",
        path(&e),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("l2_error at step 2000"), "{}", stdout(&o));
    assert!(e.join("value_reference.svg").exists());
}

#[test]
fn reference_reports_a_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    for env in ["placement", "execution"] {
        let out = dir.path().join(env);
        let o = sastep(&["reference", env, "--out", path(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let line = stdout(&o)
            .lines()
            .find(|l| l.starts_with("bellman residual"))
            .unwrap()
            .to_string();
        let value: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(value <= 1e-10, "{line}");
        assert!(out.join("reference.csv").exists());
    }
}

#[test]
fn bounds_from_a_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b.conf");
    std::fs::write(
        &cfg,
        "[experiment]\nenvironment = drift\n[drift]\n[bounds]\nhorizon = 30\nreplications = 1000\nlemma5_instances = 3\nlemma5_n = 20\n",
    )
    .unwrap();
    let out = dir.path().join("b");
    let o = sastep(&["bounds", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("one-step contraction: violations = 0"),
        "{}",
        stdout(&o)
    );
    assert!(out.join("bounds.csv").exists());
    assert!(out.join("bound.svg").exists());
}

#[test]
fn config_prints_a_parseable_default() {
    let o = sastep(&["config", "execution"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("[execution]"));
    let parsed: sastep::ExperimentConfig = text.parse().unwrap();
    assert_eq!(
        parsed,
        sastep::ExperimentConfig::default_for(sastep::harness::config::Environment::Execution)
    );
}

#[test]
fn bad_config_exits_with_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "[experiment]\nenvironment = drift\nepsiodes = 10\n[drift]\n").unwrap();
    let o = sastep(&[
        "run",
        "drift",
        "--config",
        path(&cfg),
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("did you mean `episodes`"), "{err}");
    assert!(err.contains("error kind=config"), "{err}");

    let o = sastep(&["run", "placement", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_fails_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("file");
    std::fs::write(&file, "x").unwrap();
    let o = sastep(&[
        "run",
        "drift",
        "--episodes",
        "10",
        "--paths",
        "1",
        "--out",
        path(&file.join("sub")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error kind=output"), "{}", stderr(&o));
}
