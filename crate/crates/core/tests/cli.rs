use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn treepark(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treepark"))
        .args(args)
        .env_remove("TREEPARK_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_subcritical() {
    let cfg = config("subcritical.toml");
    let o = treepark(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("0.2443750000"), "{text}");
    assert!(text.contains("Subcritical"), "{text}");

    let o = treepark(&["classify", "--json", "--config", cfg.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.to_string().contains("Subcritical"));
}

#[test]
fn bad_inputs_exit_two() {
    let o = treepark(&["classify", "--config", config("degenerate.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("subcritical.toml")).unwrap();
    std::fs::write(&bad, format!("{text}\n[surprise]\nx = 1\n")).unwrap();
    assert_eq!(treepark(&["classify", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(treepark(&["--bogus"]).status.code(), Some(2));
    let missing = dir.path().join("nothing.txt");
    assert_eq!(treepark(&["park", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn park_reference_instance() {
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/eleven_vertex.txt");
    let dir = tempfile::tempdir().unwrap();
    let o = treepark(&["park", fixture.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.split_whitespace().eq(["root_flux", "2"])), "{text}");
    let vertices = std::fs::read_to_string(dir.path().join("vertices.csv")).unwrap();
    assert_eq!(vertices.lines().count(), 12);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "park");
}

#[test]
fn simulate_writes_outputs() {
    let cfg = config("subcritical.toml");
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--experiment",
        "root-parked",
        "--reps",
        "2000",
        "--seed",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ];
    let o = treepark(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let reps = std::fs::read_to_string(dir.path().join("replicates.csv")).unwrap();
    assert_eq!(reps.lines().count(), 2001);
    assert!(dir.path().join("summary.json").exists());

    // Same seed, same replicates.
    let again = tempfile::tempdir().unwrap();
    let mut args2 = args;
    args2[10] = again.path().to_str().unwrap();
    treepark(&args2);
    assert_eq!(reps, std::fs::read_to_string(again.path().join("replicates.csv")).unwrap());
}

#[test]
fn law_and_series() {
    let cfg = config("subcritical.toml");
    let o = treepark(&["law", "--config", cfg.to_str().unwrap(), "--truncation", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let o = treepark(&["series", "--config", cfg.to_str().unwrap(), "--order", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let o = treepark(&["giant", "--config", cfg.to_str().unwrap(), "--reps", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repro_first_criterion() {
    let o = treepark(&["repro", "--only", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
}
