use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use dialogue_rl::harness::baseline_policies;
use dialogue_rl::harness::files::write_policy;
use dialogue_rl::space::StateSpace;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dialogue-rl"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["pipeline", "--seed", "11", "--n", "120", "--n-test", "60", "--policies", "30", "--out", p(out)]);
    }
    for f in ["train.jsonl", "test.jsonl", "mdp.txt", "policy.txt", "sim.conf", "report.txt"] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty(), "{f} empty");
        assert_eq!(x, y, "{f} differs between identical runs");
    }
}

#[test]
fn stage_commands_compose() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    let mdp = dir.path().join("m.txt");
    let policy = dir.path().join("learned.txt");
    let conf = configs().join("default.conf");
    ok(&["collect", "--config", p(&conf), "--seed", "5", "--n", "60", "--out", p(&corpus)]);
    assert_eq!(std::fs::read_to_string(&corpus).unwrap().lines().count(), 60);
    ok(&["estimate", "--corpus", p(&corpus), "--measure", "weak", "--out", p(&mdp)]);
    ok(&["optimize", "--mdp", p(&mdp), "--out", p(&policy)]);
    let text = ok(&["evaluate", "--policy", p(&policy), "--corpus", p(&corpus), "--measure", "weak"]);
    assert!(text.contains("consistent dialogues:"));
    let text = ok(&["baselines", "--corpus", p(&corpus), "--mdp", p(&mdp), "--measure", "weak"]);
    for name in ["SysNoconfirm", "SysConfirm", "UserNoconfirm", "UserConfirm", "Mixed", "Learned"] {
        assert!(text.contains(name), "missing {name} in\n{text}");
    }
    let text = ok(&["goodness", "--corpus", p(&corpus), "--seed", "2", "--policies", "10", "--thresholds", "0,2"]);
    assert_eq!(text.lines().count(), 4);

    // A corpus collected under the learned policy is refused without --allow-biased.
    let fixed = dir.path().join("f.jsonl");
    ok(&["collect", "--seed", "6", "--n", "12", "--policy", p(&policy), "--out", p(&fixed)]);
    assert!(!run(&["evaluate", "--policy", p(&policy), "--corpus", p(&fixed)]).status.success());
    ok(&["evaluate", "--policy", p(&policy), "--corpus", p(&fixed), "--allow-biased"]);
}

#[test]
fn estimate_accepts_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.jsonl");
    std::fs::write(&corpus, "").unwrap();
    let mdp = dir.path().join("m.txt");
    let out = run(&["estimate", "--corpus", p(&corpus), "--out", p(&mdp)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert!(std::fs::read_to_string(&mdp).unwrap().contains("states 62"));
}

#[test]
fn noiseless_chat_with_system_initiative() {
    let dir = tempfile::tempdir().unwrap();
    let space = StateSpace::bundled();
    let (_, policy) = baseline_policies(&space, None).into_iter().find(|(n, _)| n == "SysNoconfirm").unwrap();
    let path = dir.path().join("sys.txt");
    std::fs::write(&path, write_policy(&policy, &space, "sys")).unwrap();

    let conf = configs().join("noiseless.conf");
    let mut child = bin()
        .args(["chat", "--config", p(&conf), "--seed", "3", "--task", "1", "--policy", p(&path), "--verbatim"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"museums\nMorristown\nafternoon\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("S: ")).count(), 4, "{text}");
    assert!(text.contains("rewards: binary=1 weak=3 asr=3"), "{text}");
}

#[test]
fn bad_invocations_fail() {
    assert!(!run(&["collect", "--n", "3", "--out", "/dev/null"]).status.success());
    assert!(!run(&["pipeline", "--seed", "1", "--out", "/tmp/x", "--frobnicate"]).status.success());
    assert!(!run(&["estimate", "--corpus", "/nonexistent/c.jsonl", "--out", "/dev/null"]).status.success());
    assert!(!run(&["chat", "--seed", "1", "--task", "9"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "p_silent = 2\n").unwrap();
    let out = run(&["collect", "--config", p(&conf), "--seed", "1", "--n", "1", "--out", "/dev/null"]);
    assert!(!out.status.success());
}
