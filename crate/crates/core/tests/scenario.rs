use hannrx::scenario::run::config_digest;
use hannrx::scenario::{
    self, output, preset, run_scenario, ReceiverConfig, RunMode, ScenarioConfig, VarianceMode,
};
use hannrx::Error;

fn small() -> ScenarioConfig {
    let mut cfg = preset("paper-shape").unwrap();
    cfg.trials = 6;
    cfg.desired.snr_grid_db = vec![10.0, 30.0];
    cfg
}

#[test]
fn toml_round_trip() {
    for name in hannrx::scenario::PRESETS {
        let cfg = preset(name).unwrap();
        let back = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}

#[test]
fn receiver_defaults_and_ids() {
    let mut cfg = small();
    let mut text = cfg.to_toml().unwrap();
    text = text.replace("combiner = \"gamma-scaled\"\n", "");
    let parsed = ScenarioConfig::from_toml(&text).unwrap();
    assert_eq!(parsed, cfg);

    cfg.receivers.push(ReceiverConfig::Hann {
        iterations: 2,
        variance_mode: VarianceMode::Genie,
        theory_bound: false,
        combiner: hannrx::hann::MrcWeighting::MaxSinr,
    });
    cfg.validate().unwrap();
    assert_eq!(cfg.receivers.last().unwrap().id(), "hann-max-sinr-genie");
    cfg.receivers.push(cfg.receivers[0].clone());
    assert!(cfg.validate().is_err());
}

#[test]
fn validation_names_the_key() {
    let bad = |f: &dyn Fn(&mut ScenarioConfig)| {
        let mut c = small();
        f(&mut c);
        match c.validate() {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    };
    assert_eq!(bad(&|c| c.trials = 0), "trials");
    assert_eq!(bad(&|c| c.estimation.support_len = 12), "estimation.support_len");
    assert_eq!(bad(&|c| c.interferers[0].guard_hz = -1.0), "interferers[0].guard_hz");
    assert_eq!(bad(&|c| c.psd.resolution = 2), "psd.resolution");
    assert_eq!(bad(&|c| c.frame.pilot_symbols.clear()), "frame.pilot_symbols");
    let text = small().to_toml().unwrap().replace("trials = 6", "trials = 6\nbogus = 1");
    assert!(ScenarioConfig::from_toml(&text).is_err());
}

#[test]
fn journal_resume_gives_identical_rows() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let journal = dir.path().join("j.jsonl");
    let full = run_scenario(&cfg, None).unwrap();

    let mut part = cfg.clone();
    part.trials = 2;
    let first = run_scenario(&part, Some(&journal)).unwrap();
    assert_eq!((first.trials_run, first.trials_resumed), (2, 0));
    let resumed = run_scenario(&cfg, Some(&journal)).unwrap();
    assert_eq!((resumed.trials_run, resumed.trials_resumed), (4, 2));
    assert_eq!(resumed.rows, full.rows);
    assert_eq!(resumed.checksums, full.checksums);

    // a different config does not reuse the journal
    let mut other = cfg.clone();
    other.master_seed += 1;
    assert_ne!(config_digest(&other), config_digest(&cfg));
    let fresh = run_scenario(&other, Some(&journal)).unwrap();
    assert_eq!(fresh.trials_resumed, 0);
}

#[test]
fn truncated_journal_line_is_rerun() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let journal = dir.path().join("j.jsonl");
    run_scenario(&cfg, Some(&journal)).unwrap();
    let text = std::fs::read_to_string(&journal).unwrap();
    let cut = text.trim_end().rfind('\n').unwrap() + 20;
    std::fs::write(&journal, &text[..cut]).unwrap();
    let again = run_scenario(&cfg, Some(&journal)).unwrap();
    assert_eq!((again.trials_run, again.trials_resumed), (1, 5));
}

#[test]
fn run_modes_write_their_files() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let m = scenario::run_to_dir(&cfg, dir.path(), RunMode::AuditOnly).unwrap();
    assert_eq!(m.outputs, vec![output::AUDIT_FILE, output::MANIFEST_FILE]);
    assert!(!dir.path().join(output::BER_FILE).exists());

    let dir = tempfile::tempdir().unwrap();
    scenario::run_to_dir(&cfg, dir.path(), RunMode::PsdOnly).unwrap();
    assert!(dir.path().join(output::PSD_FILE).exists());
    assert!(!dir.path().join(output::AUDIT_FILE).exists());

    let dir = tempfile::tempdir().unwrap();
    scenario::run_to_dir(&cfg, dir.path(), RunMode::Full).unwrap();
    let rows = output::read_ber_csv(&dir.path().join(output::BER_FILE)).unwrap();
    let receivers: std::collections::BTreeSet<_> = rows.iter().map(|r| r.receiver.as_str()).collect();
    for id in ["rect", "taper-12", "hann", "hann-theory"] {
        assert!(receivers.contains(id), "{id} missing from {receivers:?}");
    }
    for r in &rows {
        assert_eq!(r.error_count().bits, 6 * 12 * 24);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(output::MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["name"], "paper-shape");
}

#[test]
fn hann_beats_rect_at_low_snr_and_iterations_help() {
    let mut cfg = small();
    cfg.trials = 40;
    let out = run_scenario(&cfg, None).unwrap();
    let ber = |rx: &str, snr: f64, it: usize| {
        out.rows
            .iter()
            .find(|r| r.receiver == rx && r.snr_db == snr && r.iteration == it)
            .unwrap()
            .ber()
    };
    assert!(ber("hann", 30.0, 6) < ber("hann", 30.0, 0) / 10.0);
    assert!(ber("hann-theory", 30.0, 0) <= ber("hann", 30.0, 6));
    assert!(ber("hann", 10.0, 6) < ber("rect", 10.0, 0));
}
