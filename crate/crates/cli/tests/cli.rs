use std::process::Command;

fn hannrx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hannrx"))
}

#[test]
fn preset_prints_a_loadable_config() {
    let out = hannrx().args(["preset", "paper-shape"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("name = \"paper-shape\""));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    std::fs::write(&cfg, text.replace("trials = 700", "trials = 3")).unwrap();
    let out_dir = dir.path().join("out");
    let run = hannrx()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for f in ["ber_curves.csv", "psd_curves.csv", "audit.csv", "manifest.json", "journal.jsonl"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let table = String::from_utf8(run.stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("hann-theory")));

    // rerun resumes every trial
    let again = hannrx()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&again.stderr).contains("0 trials run, 3 resumed"));
}

#[test]
fn audit_only_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = hannrx()
        .args(["run", "--preset", "paper-full", "--audit", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("612"));
    assert!(dir.path().join("audit.csv").exists());
    assert!(!dir.path().join("ber_curves.csv").exists());
}

#[test]
fn psd_only_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = hannrx()
        .args(["run", "--preset", "paper-shape", "--psd-only", "--seed", "7", "--trials", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("psd_curves.csv").exists());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 7"));
}

#[test]
fn bad_invocations_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--out", "x"],
        vec!["run", "--preset", "nope", "--out", "x"],
        vec!["run", "--preset", "paper-shape", "--audit", "--psd-only", "--out", "x"],
        vec!["preset", "nope"],
    ];
    for args in cases {
        let out = hannrx().current_dir(dir.path()).args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\n").unwrap();
    let out = hannrx()
        .args(["run", "--config", bad.to_str().unwrap(), "--out", "x"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));
}
