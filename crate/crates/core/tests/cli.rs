use std::fs;
use std::process::Command;

fn ddopg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddopg"))
}

#[test]
fn selftest_passes() {
    let out = ddopg().arg("selftest").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 5, "{text}");
}

#[test]
fn benchmark_writes_curves_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# tiny run\nagent.ddopg.hidden = 8\nagent.reinforce.hidden = 8\n").unwrap();
    let out = ddopg()
        .args(["benchmark", "--agents", "ddopg,reinforce", "--seeds", "3,4", "--max-steps", "600"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .args(["--set", "agent.reinforce.batch_steps=300"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["ddopg_seed3.csv", "ddopg_seed4.csv", "reinforce_seed3.csv", "reinforce_seed4.csv", "summary.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("agent.ddopg.hidden=8\n"), "{manifest}");
    assert!(manifest.contains("agent.reinforce.batch_steps=300\n"), "{manifest}");
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("agent,steps,mean,std,runs\n"));
}

#[test]
fn ablation_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = ddopg()
        .args(["ablation", "--sweep", "temperature", "--seeds", "1", "--max-steps", "300"])
        .args(["--set", "agent.ddopg.hidden=4"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    assert!(table.starts_with("variant,seed,auc,final_return,steps\n"));
    assert!(table.lines().count() > 2);
    assert!(dir.path().join("ablation_summary.csv").exists());
}

#[test]
fn unknown_key_is_an_error() {
    let out = ddopg().args(["benchmark", "--set", "agent.ddopg.nonsense=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));
}

#[test]
fn unknown_environment_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ddopg().args(["benchmark", "--env", "swimmer"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
