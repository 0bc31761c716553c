//! Config-driven Monte Carlo harness.
//!
//! A trial simulates one frame of the desired user together with its
//! interferers and pushes the same received samples through every
//! configured receiver at every SNR point. All randomness of a trial comes
//! from seeds derived from `(master_seed, name, trial, role)`, and the SNR
//! points of a trial share bits, channels and noise. Trials run in
//! parallel, are journaled as they finish and are summed in trial order,
//! so results do not depend on scheduling or on interruptions.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;
pub mod seeds;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    BandSide, ChannelConfig, DesiredConfig, EstimationConfig, InterfererConfig, PsdConfig,
    ReceiverConfig, ScenarioConfig, VarianceMode,
};
pub use presets::{preset, PRESETS};
pub use run::{aggregate, run_scenario, run_trial, AggregateRow, RunOutcome, TrialResult};
pub use seeds::derive_seed;

use crate::error::{Error, Result};
use crate::metrics::{
    audit_opcounts, single_subcarrier_stream, subcarrier_psd, AuditParams, OpCountReport,
    PsdCurve, PsdWindow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// BER curves, PSD and audit.
    Full,
    AuditOnly,
    PsdOnly,
}

/// Distinct analysis windows of the configured receivers.
pub fn psd_windows(cfg: &ScenarioConfig) -> Vec<PsdWindow> {
    let mut out = Vec::new();
    for r in &cfg.receivers {
        let w = match r {
            ReceiverConfig::Rect { .. } => PsdWindow::Rectangular,
            ReceiverConfig::Taper { tail_len, .. } => PsdWindow::Taper(*tail_len),
            ReceiverConfig::Hann { .. } => PsdWindow::Hann,
        };
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

/// PSD of the configured subcarrier through every receiver window.
pub fn psd_curves(cfg: &ScenarioConfig) -> Result<Vec<(String, PsdCurve)>> {
    let nm = &cfg.desired.numerology;
    let seed = derive_seed(cfg.master_seed, &cfg.name, 0, "psd");
    let stream = single_subcarrier_stream(nm, cfg.psd.subcarrier, cfg.psd.symbols, seed)?;
    let bin = nm.first_data_bin + cfg.psd.subcarrier;
    psd_windows(cfg)
        .into_iter()
        .map(|w| Ok((w.label(), subcarrier_psd(&stream, nm, bin, w, cfg.psd.resolution)?)))
        .collect()
}

pub fn audit_report(cfg: &ScenarioConfig) -> Result<OpCountReport> {
    let nm = &cfg.desired.numerology;
    audit_opcounts(&AuditParams {
        fft_size: nm.fft_size,
        cp_len: nm.cp_len,
        data_width: nm.data_width,
        constellation_size: 4,
        iterations: cfg.max_iterations().max(1),
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub name: String,
    pub version: &'static str,
    pub mode: RunMode,
    pub master_seed: u64,
    pub trials: usize,
    pub seed_scheme: &'static str,
    /// Derived seeds of every trial, by role.
    pub trial_seeds: Vec<BTreeMap<String, u64>>,
    pub trials_run: usize,
    pub trials_resumed: usize,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub config: ScenarioConfig,
}

fn trial_seeds(cfg: &ScenarioConfig) -> Vec<BTreeMap<String, u64>> {
    use seeds::roles;
    (0..cfg.trials as u64)
        .map(|t| {
            let mut names = vec![
                roles::BITS.to_string(),
                roles::DESIRED_CHANNEL.to_string(),
                roles::NOISE.to_string(),
            ];
            for j in 0..cfg.interferers.len() {
                names.push(roles::interferer_stream(j));
                names.push(roles::interferer_channel(j));
            }
            names
                .into_iter()
                .map(|r| {
                    let s = derive_seed(cfg.master_seed, &cfg.name, t, &r);
                    (r, s)
                })
                .collect()
        })
        .collect()
}

/// Runs `cfg` in `mode` and writes the artifacts into `out`.
pub fn run_to_dir(cfg: &ScenarioConfig, out: &Path, mode: RunMode) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let start = std::time::Instant::now();
    let file = |name: &str| -> PathBuf { out.join(name) };
    let mut outputs = Vec::new();
    let (mut run, mut resumed) = (0, 0);

    if mode == RunMode::Full {
        let outcome = run_scenario(cfg, Some(&file(output::JOURNAL_FILE)))?;
        output::write_ber_csv(&file(output::BER_FILE), &outcome.rows)?;
        outputs.push(output::BER_FILE.to_string());
        run = outcome.trials_run;
        resumed = outcome.trials_resumed;
    }
    if mode != RunMode::AuditOnly {
        output::write_psd_csv(&file(output::PSD_FILE), &psd_curves(cfg)?, cfg.psd.span_scs)?;
        outputs.push(output::PSD_FILE.to_string());
    }
    if mode != RunMode::PsdOnly {
        output::write_audit_csv(&file(output::AUDIT_FILE), &audit_report(cfg)?)?;
        outputs.push(output::AUDIT_FILE.to_string());
    }
    outputs.push(output::MANIFEST_FILE.to_string());
    let manifest = Manifest {
        name: cfg.name.clone(),
        version: env!("CARGO_PKG_VERSION"),
        mode,
        master_seed: cfg.master_seed,
        trials: cfg.trials,
        seed_scheme: "first 8 bytes (LE) of SHA-256(master_seed LE, len(name) LE, name, trial LE, role)",
        trial_seeds: if mode == RunMode::Full { trial_seeds(cfg) } else { Vec::new() },
        trials_run: run,
        trials_resumed: resumed,
        outputs,
        wall_time_s: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
    };
    output::write_json(&file(output::MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
