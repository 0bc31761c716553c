//! Monte Carlo trial execution, journaling and aggregation.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ReceiverConfig, ScenarioConfig, VarianceMode};
use super::seeds::{checksum, derive_seed, roles};
use crate::channel::{compose_received, interferer_stream, make_tdl, UserLink};
use crate::error::{invalid, Error, Result};
use crate::hann::sic::{cancel, constellation_llrs};
use crate::hann::{
    build_mrc_with, estimate_frame_hann, extended_demap, hann_receive,
    hann_window, mrc_combine, sic_decode, HannVariant, HannWindow, MrcWeighting,
};
use crate::metrics::{count_llr_errors, ErrorCount, SinrAccumulator};
use crate::rx_baseline::{
    cfr_from_cir, estimate_cir_baseline, genie_disturbance, interpolate_in_time,
    receive_windowed, residual_power_profile, zf_observation, CfrEstimate, RxWindowSpec,
};
use crate::waveform::{
    build_frame, payload_capacity, qpsk_llr, random_bits, Constellation, Frame, Numerology,
};

/// Id of the genie-cancellation path recorded next to a Hann receiver.
pub const THEORY_SUFFIX: &str = "-theory";

/// Errors and SINR sums of one receiver output stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub receiver: String,
    pub iteration: usize,
    pub errors: ErrorCount,
    pub sinr: SinrAccumulator,
}

/// All receivers at one SNR point of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub snr_index: usize,
    /// Digest of the received samples every receiver consumed.
    pub checksum: u64,
    pub stages: Vec<StageResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub points: Vec<PointResult>,
    pub wall_time_s: f64,
}

/// Per-symbol slices of a frame-length buffer.
fn symbols<'a>(y: &'a [Complex64], nm: &Numerology) -> impl Iterator<Item = &'a [Complex64]> {
    y.chunks_exact(nm.symbol_len())
}

struct Link {
    cfg_numerology: Numerology,
    frame: Frame,
    desired: UserLink,
    interferers: Vec<UserLink>,
    noise_seed: u64,
}

fn build_link(cfg: &ScenarioConfig, trial: u64) -> Result<Link> {
    let seed = |role: &str| derive_seed(cfg.master_seed, &cfg.name, trial, role);
    let nm = cfg.desired.numerology;
    let len = cfg.frame_len();
    let fs = nm.sample_rate();

    let mut rng = ChaCha8Rng::seed_from_u64(seed(roles::BITS));
    let bits = random_bits(&mut rng, payload_capacity(&nm, &cfg.frame));
    let frame = build_frame(&nm, &cfg.frame, &bits)?;
    let spec = cfg.desired.channel.to_spec(seed(roles::DESIRED_CHANNEL))?;
    let desired = UserLink {
        samples: frame.samples.clone(),
        snr_db: 0.0,
        realization: make_tdl(&spec, fs, len)?,
        sample_offset: 0,
    };
    let mut interferers = Vec::with_capacity(cfg.interferers.len());
    for (j, icfg) in cfg.interferers.iter().enumerate() {
        let inm = icfg.numerology(&nm)?;
        let count = len.div_ceil(inm.symbol_len());
        let samples = interferer_stream(&inm, icfg.taper_len, seed(&roles::interferer_stream(j)), count)?;
        let ispec = icfg.channel.to_spec(seed(&roles::interferer_channel(j)))?;
        interferers.push(UserLink {
            samples,
            snr_db: icfg.snr_db,
            realization: make_tdl(&ispec, fs, len)?,
            sample_offset: icfg.sample_offset,
        });
    }
    Ok(Link {
        cfg_numerology: nm,
        frame,
        desired,
        interferers,
        noise_seed: seed(roles::NOISE),
    })
}

/// Interpolated channel knowledge for every data symbol.
fn interpolate_all(
    frame: &Frame,
    theta: &[(usize, Vec<Complex64>)],
    var: &[(usize, Vec<f64>)],
) -> Result<Vec<(Vec<Complex64>, Vec<f64>)>> {
    let ta: Vec<(usize, &[Complex64])> = theta.iter().map(|(i, v)| (*i, v.as_slice())).collect();
    let va: Vec<(usize, &[f64])> = var.iter().map(|(i, v)| (*i, v.as_slice())).collect();
    frame
        .data
        .iter()
        .map(|d| {
            Ok((
                interpolate_in_time(&ta, d.symbol_index)?,
                interpolate_in_time(&va, d.symbol_index)?,
            ))
        })
        .collect()
}

fn data_cfr(h: &[Complex64], nm: &Numerology) -> Vec<Complex64> {
    cfr_from_cir(h)[nm.data_bins()].to_vec()
}

fn run_baseline(
    cfg: &ScenarioConfig,
    id: String,
    spec: &RxWindowSpec,
    mode: VarianceMode,
    y: &[Complex64],
    dist: &[Complex64],
    frame: &Frame,
) -> Result<(u64, Vec<StageResult>)> {
    let sum = checksum(y);
    let nm = &cfg.desired.numerology;
    let est = &cfg.estimation;
    let r: Vec<Vec<Complex64>> = symbols(y, nm)
        .map(|s| receive_windowed(s, nm, spec))
        .collect::<Result<_>>()?;
    let mut theta = Vec::new();
    let mut var = Vec::new();
    for p in &frame.pilots {
        let rp = &r[p.symbol_index];
        let fit = estimate_cir_baseline(rp, &p.symbols, nm, est.support_len, est.ridge)?;
        theta.push((p.symbol_index, data_cfr(&fit.h, nm)));
        let scale = fit.residual_scale();
        let v = residual_power_profile(rp, &fit.reconstruction)?;
        var.push((p.symbol_index, v.into_iter().map(|x| x * scale).collect::<Vec<f64>>()));
    }
    // disturbance statistics are taken as constant over the frame
    let pooled: Vec<f64> = (0..var[0].1.len())
        .map(|k| var.iter().map(|(_, v)| v[k]).sum::<f64>() / var.len() as f64)
        .collect();
    for (_, v) in &mut var {
        v.clone_from(&pooled);
    }
    if mode == VarianceMode::Genie {
        let obs: Vec<Vec<Complex64>> = symbols(dist, nm)
            .map(|s| receive_windowed(s, nm, spec))
            .collect::<Result<_>>()?;
        let g = genie_disturbance(&obs)?;
        var = theta.iter().map(|(i, _)| (*i, g.clone())).collect();
    }
    let knowledge = interpolate_all(frame, &theta, &var)?;
    let mut errors = ErrorCount::default();
    let mut sinr = SinrAccumulator::default();
    for (d, (th, v)) in frame.data.iter().zip(knowledge) {
        let cfr = CfrEstimate {
            theta: th,
            per_bin_disturbance: v,
        };
        let (obs, ov) = zf_observation(&r[d.symbol_index], &cfr)?;
        errors += count_llr_errors(&qpsk_llr(&obs, &ov)?, &d.bits)?;
        for (o, t) in obs.iter().zip(&d.symbols) {
            sinr.push(*o, *t);
        }
    }
    Ok((
        sum,
        vec![StageResult {
            receiver: id,
            iteration: 0,
            errors,
            sinr,
        }],
    ))
}

#[allow(clippy::too_many_arguments)]
fn run_hann(
    cfg: &ScenarioConfig,
    id: String,
    iterations: usize,
    mode: VarianceMode,
    theory: bool,
    weighting: MrcWeighting,
    window: &HannWindow,
    y: &[Complex64],
    dist: &[Complex64],
    frame: &Frame,
) -> Result<(u64, Vec<StageResult>)> {
    let sum = checksum(y);
    let nm = &cfg.desired.numerology;
    let est = &cfg.estimation;
    let qpsk = Constellation::qpsk();
    let delta: Vec<Vec<Complex64>> = symbols(y, nm)
        .map(|s| extended_demap(&hann_receive(s, nm, window)?, nm))
        .collect::<Result<_>>()?;
    let obs: Vec<(&[Complex64], &[Complex64])> = frame
        .pilots
        .iter()
        .map(|p| (delta[p.symbol_index].as_slice(), p.symbols.as_slice()))
        .collect();
    let (fits, pooled) = estimate_frame_hann(&obs, nm, est.support_len, est.ridge)?;
    let theta: Vec<(usize, Vec<Complex64>)> = frame
        .pilots
        .iter()
        .zip(&fits)
        .map(|(p, fit)| (p.symbol_index, data_cfr(fit.h(), nm)))
        .collect();
    let mut var: Vec<(usize, Vec<f64>)> =
        frame.pilots.iter().map(|p| (p.symbol_index, pooled.clone())).collect();
    if mode == VarianceMode::Genie {
        let obs: Vec<Vec<Complex64>> = symbols(dist, nm)
            .map(|s| extended_demap(&hann_receive(s, nm, window)?, nm))
            .collect::<Result<_>>()?;
        let g = genie_disturbance(&obs)?;
        var = theta.iter().map(|(i, _)| (*i, g.clone())).collect();
    }
    let knowledge = interpolate_all(frame, &theta, &var)?;
    let stages = iterations + 1;
    let mut errors = vec![ErrorCount::default(); stages];
    let mut sinr = vec![SinrAccumulator::default(); stages];
    let mut bound_errors = ErrorCount::default();
    let mut bound_sinr = SinrAccumulator::default();
    for (d, (th, v)) in frame.data.iter().zip(knowledge) {
        let op = build_mrc_with(&th, &v, weighting)?;
        let dbreve = mrc_combine(&delta[d.symbol_index], &op)?;
        let out = sic_decode(&dbreve, &op, iterations, &qpsk)?;
        for (k, st) in out.history.iter().enumerate() {
            errors[k] += count_llr_errors(&st.llrs, &d.bits)?;
            for (o, t) in st.observation.iter().zip(&d.symbols) {
                sinr[k].push(*o, *t);
            }
        }
        if theory {
            let (obs, ov) = cancel(&dbreve, &op, &d.symbols, &vec![0.0; d.symbols.len()]);
            bound_errors += count_llr_errors(&constellation_llrs(&obs, &ov, &qpsk), &d.bits)?;
            for (o, t) in obs.iter().zip(&d.symbols) {
                bound_sinr.push(*o, *t);
            }
        }
    }
    let mut out: Vec<StageResult> = errors
        .into_iter()
        .zip(sinr)
        .enumerate()
        .map(|(iteration, (errors, sinr))| StageResult {
            receiver: id.clone(),
            iteration,
            errors,
            sinr,
        })
        .collect();
    if theory {
        out.push(StageResult {
            receiver: format!("{id}{THEORY_SUFFIX}"),
            iteration: 0,
            errors: bound_errors,
            sinr: bound_sinr,
        });
    }
    Ok((sum, out))
}

/// Simulates one frame at every SNR point with every receiver.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64) -> Result<TrialResult> {
    let start = Instant::now();
    let mut link = build_link(cfg, trial)?;
    let nm = link.cfg_numerology;
    let len = cfg.frame_len();
    let window = hann_window(nm.fft_size, HannVariant::Periodic)?;

    // disturbance alone: the desired user switched off
    link.desired.snr_db = f64::NEG_INFINITY;
    let dist = compose_received(&link.desired, &link.interferers, Some(link.noise_seed), len)?;

    let mut points = Vec::with_capacity(cfg.desired.snr_grid_db.len());
    for (snr_index, &snr) in cfg.desired.snr_grid_db.iter().enumerate() {
        link.desired.snr_db = snr;
        let y = compose_received(&link.desired, &link.interferers, Some(link.noise_seed), len)?;
        let expected = checksum(&y);
        let mut stages = Vec::new();
        for r in &cfg.receivers {
            let (sum, res) = match r {
                ReceiverConfig::Hann {
                    iterations,
                    variance_mode,
                    theory_bound,
                    combiner,
                } => run_hann(
                    cfg,
                    r.id(),
                    *iterations,
                    *variance_mode,
                    *theory_bound,
                    *combiner,
                    &window,
                    &y,
                    &dist,
                    &link.frame,
                )?,
                _ => {
                    let spec = r.window_spec().expect("baseline receivers have a window");
                    let mode = match r {
                        ReceiverConfig::Rect { variance_mode } | ReceiverConfig::Taper { variance_mode, .. } => *variance_mode,
                        ReceiverConfig::Hann { .. } => unreachable!(),
                    };
                    run_baseline(cfg, r.id(), &spec, mode, &y, &dist, &link.frame)?
                }
            };
            if sum != expected {
                return invalid(format!(
                    "receiver {} consumed a different input in trial {trial}",
                    r.id()
                ));
            }
            stages.extend(res);
        }
        points.push(PointResult {
            snr_index,
            checksum: expected,
            stages,
        });
    }
    Ok(TrialResult {
        trial,
        points,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Aggregate of one `(receiver, snr, iteration)` curve point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub receiver: String,
    pub snr_db: f64,
    pub iteration: usize,
    pub errors: ErrorCount,
    pub sinr: SinrAccumulator,
}

impl AggregateRow {
    pub fn ber(&self) -> f64 {
        self.errors.rate()
    }
}

/// Sums trial results in trial order. Rows come out grouped by receiver
/// (in the order receivers first appear), then SNR, then iteration.
pub fn aggregate(cfg: &ScenarioConfig, trials: &[TrialResult]) -> Vec<AggregateRow> {
    let mut sorted: Vec<&TrialResult> = trials.iter().collect();
    sorted.sort_by_key(|t| t.trial);
    let mut order: Vec<(String, usize, usize)> = Vec::new();
    let mut acc: HashMap<(String, usize, usize), (ErrorCount, SinrAccumulator)> = HashMap::new();
    for t in sorted {
        for p in &t.points {
            for s in &p.stages {
                let key = (s.receiver.clone(), p.snr_index, s.iteration);
                let e = acc.entry(key.clone()).or_insert_with(|| {
                    order.push(key);
                    Default::default()
                });
                e.0 += s.errors;
                e.1.merge(&s.sinr);
            }
        }
    }
    let rank: HashMap<&str, usize> = {
        let mut r = HashMap::new();
        for (name, _, _) in &order {
            let next = r.len();
            r.entry(name.as_str()).or_insert(next);
        }
        r
    };
    let mut keys = order.clone();
    keys.sort_by_key(|(name, snr, it)| (rank[name.as_str()], *snr, *it));
    keys.into_iter()
        .map(|key| {
            let (errors, sinr) = acc[&key];
            AggregateRow {
                receiver: key.0,
                snr_db: cfg.desired.snr_grid_db[key.1],
                iteration: key.2,
                errors,
                sinr,
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct JournalHeader {
    config_digest: String,
}

/// Digest of the config (minus the trial count) and the crate version.
pub fn config_digest(cfg: &ScenarioConfig) -> String {
    let mut c = cfg.clone();
    c.trials = 0;
    let text = serde_json::to_string(&c).expect("config serializes");
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(text.as_bytes());
    let d = h.finalize();
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Completed trials recorded in a journal for this config. A journal for a
/// different config, or a truncated final line, is ignored.
fn read_journal(path: &Path, digest: &str) -> Result<Vec<TrialResult>> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io(e)),
    };
    let mut lines = BufReader::new(file).lines();
    let header: Option<JournalHeader> = match lines.next() {
        Some(l) => serde_json::from_str(&l.map_err(io)?).ok(),
        None => None,
    };
    if header.map(|h| h.config_digest) != Some(digest.to_string()) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for line in lines {
        match serde_json::from_str::<TrialResult>(&line.map_err(io)?) {
            Ok(t) => out.push(t),
            Err(_) => break,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<AggregateRow>,
    pub trials_run: usize,
    pub trials_resumed: usize,
    /// One digest per (trial, SNR) point, in trial order.
    pub checksums: Vec<u64>,
    pub wall_time_s: f64,
}

/// Runs trials `0..cfg.trials`, skipping those already in `journal`, and
/// appends newly finished trials to it.
pub fn run_scenario(cfg: &ScenarioConfig, journal: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let digest = config_digest(cfg);
    let mut done: Vec<TrialResult> = match journal {
        Some(p) => read_journal(p, &digest)?,
        None => Vec::new(),
    };
    done.retain(|t| t.trial < cfg.trials as u64);
    done.sort_by_key(|t| t.trial);
    done.dedup_by_key(|t| t.trial);
    let have: std::collections::HashSet<u64> = done.iter().map(|t| t.trial).collect();
    let pending: Vec<u64> = (0..cfg.trials as u64).filter(|t| !have.contains(t)).collect();
    let resumed = done.len();

    let writer = match journal {
        Some(p) => Some(Mutex::new(open_journal(p, &digest, &done)?)),
        None => None,
    };
    let path_buf: Option<PathBuf> = journal.map(Path::to_path_buf);
    let fresh: Vec<TrialResult> = pending
        .par_iter()
        .map(|&t| {
            let r = run_trial(cfg, t)?;
            if let (Some(w), Some(p)) = (&writer, &path_buf) {
                let line = serde_json::to_string(&r).map_err(|e| Error::Parse(e.to_string()))?;
                let mut f = w.lock().expect("journal lock");
                writeln!(f, "{line}").map_err(|source| Error::Io {
                    path: p.clone(),
                    source,
                })?;
            }
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let trials_run = fresh.len();
    done.extend(fresh);
    done.sort_by_key(|t| t.trial);
    let checksums = done
        .iter()
        .flat_map(|t| t.points.iter().map(|p| p.checksum))
        .collect();
    Ok(RunOutcome {
        rows: aggregate(cfg, &done),
        trials_run,
        trials_resumed: resumed,
        checksums,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Rewrites the journal with its header and the trials kept from before.
fn open_journal(path: &Path, digest: &str, kept: &[TrialResult]) -> Result<File> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(path)
        .map_err(io)?;
    let header = JournalHeader {
        config_digest: digest.to_string(),
    };
    writeln!(f, "{}", serde_json::to_string(&header).expect("header serializes")).map_err(io)?;
    for t in kept {
        writeln!(f, "{}", serde_json::to_string(t).map_err(|e| Error::Parse(e.to_string()))?).map_err(io)?;
    }
    Ok(f)
}
