use std::process::{Command, Output};

fn ckp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn count_paths_to_one_one() {
    let o = ckp(&["count-paths", "--to", "1,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1");
}

#[test]
fn count_paths_json() {
    let o = ckp(&["--format", "json", "count-paths", "--from", "1,1", "--to", "3,1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["count"].as_str().unwrap().parse::<u64>().unwrap() > 0);
}

#[test]
fn clambda_one() {
    let o = ckp(&["clambda", "--partition", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("D = 1"), "{s}");
    let closed = ckp(&["clambda", "--partition", "3,1", "--mode", "closed", "--format", "json"]);
    let engine = ckp(&["clambda", "--partition", "3,1", "--format", "json"]);
    let closed: serde_json::Value = serde_json::from_slice(&closed.stdout).unwrap();
    let engine: serde_json::Value = serde_json::from_slice(&engine.stdout).unwrap();
    let even: Vec<_> = engine["hat_c"].as_array().unwrap().iter().filter(|m| m["odd"].as_array().unwrap().is_empty()).cloned().collect();
    assert_eq!(closed["hat_c"].as_array().unwrap(), &even);
    assert_eq!(closed["D"], engine["D"]);
}

#[test]
fn pfhf_seeded_is_reproducible() {
    let a = ckp(&["--format", "json", "verify", "pfhf", "--orders", "4", "--trials", "1", "--seed", "7"]);
    let b = ckp(&["--format", "json", "--jobs", "2", "verify", "pfhf", "--orders", "4", "--trials", "1", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["suite"], "pfhf");
    assert_eq!(v["items"][0]["status"], "pass");
}

#[test]
fn small_suites_pass() {
    for args in [
        &["verify", "cl", "--cap", "3"][..],
        &["verify", "qdim", "--cap", "4"],
        &["verify", "supermiwa", "--k", "1", "--cap", "2"],
        &["verify", "hirota", "--g", "identity;diag:U1/2=1/3,U3/2=1/5", "--cap", "2"],
        &["hirota", "--g", "soliton:1/2,1/3,1", "--cap", "2"],
    ] {
        let o = ckp(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stdout(&o));
    }
}

#[test]
fn tau_diagonal() {
    let o = ckp(&["tau", "--g", "diag:U1/2=1/3,U3/2=1/5", "--cap", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().count() >= 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ckp(&["clambda", "--partition", "2"]).status.code(), Some(2));
    assert_eq!(ckp(&["verify", "pfhf", "--orders", "3"]).status.code(), Some(2));
    assert_eq!(ckp(&["tau", "--g", "nonsense"]).status.code(), Some(2));
    assert_eq!(ckp(&["verify", "nope"]).status.code(), Some(2));
    assert_eq!(ckp(&["--jobs", "0", "verify", "qdim"]).status.code(), Some(2));
}
