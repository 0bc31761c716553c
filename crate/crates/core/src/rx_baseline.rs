//! Conventional receive path: windowed CP removal, pilot-based CIR
//! estimation assuming an orthogonal (ICI-free) model, CFR computation and
//! per-bin MMSE equalization.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::raised_cosine_ramp;
use crate::error::{invalid, Result};
use crate::numerics::{dft_in_place, solve_ls, ComplexMatrix, LsProblem};
use crate::waveform::{subcarrier_demap, Numerology};
use crate::EPS;

/// Receive window applied around the CP boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxWindowSpec {
    /// Tail length `K`.
    pub tail_len: usize,
    /// Weights of the last `K` CP samples, rising.
    pub taper: Vec<f64>,
}

impl RxWindowSpec {
    pub fn rectangular() -> Self {
        RxWindowSpec {
            tail_len: 0,
            taper: Vec::new(),
        }
    }

    /// Raised-cosine taper `½(1 − cos(π(i + ½)/K))`.
    pub fn raised_cosine(tail_len: usize) -> Self {
        RxWindowSpec {
            tail_len,
            taper: raised_cosine_ramp(tail_len),
        }
    }

    pub fn validate(&self, numerology: &Numerology) -> Result<()> {
        if self.tail_len > numerology.cp_len {
            return invalid(format!(
                "tail length {} exceeds CP length {}",
                self.tail_len, numerology.cp_len
            ));
        }
        if self.taper.len() != self.tail_len {
            return invalid("taper length must equal the tail length");
        }
        if self.taper.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return invalid("taper values must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Windowed CP removal matrix `B_K` (N×(N+L)).
pub fn cp_removal_matrix(numerology: &Numerology, spec: &RxWindowSpec) -> Result<ComplexMatrix> {
    spec.validate(numerology)?;
    let n = numerology.fft_size;
    let l = numerology.cp_len;
    let k = spec.tail_len;
    let mut b = ComplexMatrix::zeros(n, n + l);
    for i in 0..n - k {
        b[(i, l + i)] = Complex64::new(1.0, 0.0);
    }
    for (i, &w) in spec.taper.iter().enumerate() {
        b[(n - k + i, l - k + i)] = Complex64::new(w, 0.0);
        b[(n - k + i, l + n - k + i)] = Complex64::new(1.0 - w, 0.0);
    }
    Ok(b)
}

/// `B_K·y` without forming the matrix.
pub fn apply_cp_removal(
    y: &[Complex64],
    numerology: &Numerology,
    spec: &RxWindowSpec,
) -> Result<Vec<Complex64>> {
    spec.validate(numerology)?;
    let n = numerology.fft_size;
    let l = numerology.cp_len;
    if y.len() != n + l {
        return invalid(format!("expected {} samples, got {}", n + l, y.len()));
    }
    let k = spec.tail_len;
    let mut out = y[l..].to_vec();
    for (i, &w) in spec.taper.iter().enumerate() {
        out[n - k + i] = w * y[l - k + i] + (1.0 - w) * y[l + n - k + i];
    }
    Ok(out)
}

/// Full windowed spectrum `F_N B_K y`.
pub fn windowed_spectrum(
    y: &[Complex64],
    numerology: &Numerology,
    spec: &RxWindowSpec,
) -> Result<Vec<Complex64>> {
    let mut buf = apply_cp_removal(y, numerology, spec)?;
    dft_in_place(&mut buf, false);
    Ok(buf)
}

/// Received data subcarriers `r = Mᵀ F_N B_K y`.
pub fn receive_windowed(
    y: &[Complex64],
    numerology: &Numerology,
    spec: &RxWindowSpec,
) -> Result<Vec<Complex64>> {
    Ok(subcarrier_demap(numerology, &windowed_spectrum(y, numerology, spec)?))
}

/// CFR `θ_k = Σ_n h_n e^{−j2πkn/N}`: the unitary transform scaled by `√N`,
/// so a unit impulse response gives a unit CFR on every bin.
pub fn cfr_from_cir(h: &[Complex64]) -> Vec<Complex64> {
    let mut buf = h.to_vec();
    dft_in_place(&mut buf, false);
    let scale = (h.len() as f64).sqrt();
    buf.iter_mut().for_each(|x| *x *= scale);
    buf
}

/// `e^{−j2π·bin·tap/N}`, the CFR contribution of one tap on one bin.
pub(crate) fn tap_phasor(bin: usize, tap: usize, n: usize) -> Complex64 {
    let phase = -2.0 * std::f64::consts::PI * ((bin * tap) % n) as f64 / n as f64;
    Complex64::from_polar(1.0, phase)
}

/// Result of a pilot-based CIR fit.
#[derive(Debug, Clone)]
pub struct CirEstimate {
    /// Length-N impulse response, zero beyond the support.
    pub h: Vec<Complex64>,
    pub condition: f64,
    pub ill_conditioned: bool,
    /// Pilot observations predicted by the fitted CIR.
    pub reconstruction: Vec<Complex64>,
    /// Observations used by the fit and number of unknowns.
    pub rows_used: usize,
    pub unknowns: usize,
}

impl CirEstimate {
    /// Scale that removes the degrees-of-freedom bias of fit residuals.
    pub fn residual_scale(&self) -> f64 {
        if self.rows_used > self.unknowns {
            self.rows_used as f64 / (self.rows_used - self.unknowns) as f64
        } else {
            1.0
        }
    }
}

/// Baseline pilot design `diag(d̃)·Mᵀ·F`, restricted to the first
/// `support_len` taps.
pub fn baseline_pilot_design(
    numerology: &Numerology,
    pilots: &[Complex64],
    support_len: usize,
) -> ComplexMatrix {
    let n = numerology.fft_size;
    let first = numerology.first_data_bin;
    ComplexMatrix::from_fn(pilots.len(), support_len, |m, tap| {
        pilots[m] * tap_phasor(first + m, tap, n)
    })
}

/// Ridge LS over the selected rows. Optional per-row weights scale both
/// sides of each equation; the reconstruction always uses the plain design.
pub(crate) fn fit_cir(
    design: &ComplexMatrix,
    obs: &[Complex64],
    rows: &[usize],
    weights: Option<&[f64]>,
    fft_size: usize,
    ridge: f64,
) -> Result<CirEstimate> {
    let support_len = design.ncols();
    let mut reduced = design.select_rows(rows);
    let mut reduced_obs: Vec<Complex64> = rows.iter().map(|&r| obs[r]).collect();
    if let Some(w) = weights {
        for (i, &r) in rows.iter().enumerate() {
            reduced.row_mut(i).scale_mut(w[r]);
            reduced_obs[i] *= w[r];
        }
    }
    let support: Vec<usize> = (0..support_len).collect();
    let sol = solve_ls(&LsProblem {
        design: &reduced,
        observations: &reduced_obs,
        support: &support,
        ridge,
    })?;
    let reconstruction: Vec<Complex64> =
        (design * nalgebra::DVector::from_column_slice(&sol.x)).iter().copied().collect();
    let mut h = vec![Complex64::new(0.0, 0.0); fft_size];
    h[..support_len].copy_from_slice(&sol.x);
    Ok(CirEstimate {
        h,
        condition: sol.condition,
        ill_conditioned: sol.ill_conditioned,
        reconstruction,
        rows_used: rows.len(),
        unknowns: support_len,
    })
}

/// Support-restricted ridge LS estimate of the CIR from received pilot bins.
pub fn estimate_cir_baseline(
    r_pilot: &[Complex64],
    pilots: &[Complex64],
    numerology: &Numerology,
    support_len: usize,
    ridge: f64,
) -> Result<CirEstimate> {
    let d = numerology.data_width;
    if r_pilot.len() != d || pilots.len() != d {
        return invalid(format!("expected {d} pilot observations and symbols"));
    }
    if pilots.iter().any(|p| p.norm_sqr() < EPS) {
        return invalid("pilots must be nonzero on every data bin");
    }
    if support_len == 0 || support_len > numerology.fft_size {
        return invalid(format!("support length {support_len} out of range"));
    }
    let design = baseline_pilot_design(numerology, pilots, support_len);
    let rows: Vec<usize> = (0..d).collect();
    fit_cir(&design, r_pilot, &rows, None, numerology.fft_size, ridge)
}

/// Per-bin residual power `|obs − recon|²`, smoothed by a 3-bin moving
/// average (2 bins at the edges) and clamped to at least `EPS`.
pub fn residual_power_profile(obs: &[Complex64], recon: &[Complex64]) -> Result<Vec<f64>> {
    if obs.len() != recon.len() {
        return invalid("observation and reconstruction lengths differ");
    }
    let raw: Vec<f64> = obs.iter().zip(recon).map(|(a, b)| (a - b).norm_sqr()).collect();
    Ok(moving_average3(&raw).into_iter().map(|v| v.max(EPS)).collect())
}

pub(crate) fn moving_average3(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Time-averaged per-bin power of known disturbance observations (the genie
/// variance).
pub fn genie_disturbance(observations: &[Vec<Complex64>]) -> Result<Vec<f64>> {
    let Some(first) = observations.first() else {
        return invalid("no disturbance observations");
    };
    let mut acc = vec![0.0; first.len()];
    for obs in observations {
        if obs.len() != acc.len() {
            return invalid("disturbance observations differ in length");
        }
        for (a, z) in acc.iter_mut().zip(obs) {
            *a += z.norm_sqr();
        }
    }
    let count = observations.len() as f64;
    Ok(acc.into_iter().map(|a| (a / count).max(EPS)).collect())
}

/// Linear interpolation in time between anchor symbols, holding the first
/// and last anchors beyond the ends. Anchors must be sorted by index.
pub fn interpolate_in_time<T>(anchors: &[(usize, &[T])], symbol: usize) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let Some(&(first_idx, first)) = anchors.first() else {
        return invalid("no anchors to interpolate");
    };
    if anchors.iter().any(|(_, v)| v.len() != first.len()) {
        return invalid("anchor lengths differ");
    }
    if symbol <= first_idx {
        return Ok(first.to_vec());
    }
    for pair in anchors.windows(2) {
        let (i0, v0) = pair[0];
        let (i1, v1) = pair[1];
        if symbol <= i1 {
            let t = (symbol - i0) as f64 / (i1 - i0) as f64;
            return Ok(v0.iter().zip(v1).map(|(&a, &b)| a * (1.0 - t) + b * t).collect());
        }
    }
    Ok(anchors[anchors.len() - 1].1.to_vec())
}

/// Channel knowledge used by the equalizer on the data bins.
#[derive(Debug, Clone, PartialEq)]
pub struct CfrEstimate {
    pub theta: Vec<Complex64>,
    pub per_bin_disturbance: Vec<f64>,
}

impl CfrEstimate {
    pub fn validate(&self) -> Result<()> {
        if self.theta.len() != self.per_bin_disturbance.len() {
            return invalid("CFR and disturbance lengths differ");
        }
        if self.per_bin_disturbance.iter().any(|v| !(*v >= 0.0)) {
            return invalid("disturbance variances must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MmseOutput {
    pub symbols: Vec<Complex64>,
    /// Bins whose denominator hit the epsilon guard.
    pub guarded_bins: Vec<usize>,
}

/// Per-bin MMSE: `d̂_i = θ_i*·r_i / (|θ_i|² + σ²_i)`.
pub fn equalize_mmse(r: &[Complex64], est: &CfrEstimate) -> Result<MmseOutput> {
    est.validate()?;
    if r.len() != est.theta.len() {
        return invalid("observation and CFR lengths differ");
    }
    let mut guarded_bins = Vec::new();
    let symbols = r
        .iter()
        .zip(&est.theta)
        .zip(&est.per_bin_disturbance)
        .enumerate()
        .map(|(i, ((&ri, &th), &var))| {
            let mut den = th.norm_sqr() + var;
            if den < EPS {
                guarded_bins.push(i);
                den = EPS;
            }
            th.conj() * ri / den
        })
        .collect();
    Ok(MmseOutput {
        symbols,
        guarded_bins,
    })
}

/// Unbiased per-bin observation `r/θ` and its disturbance variance
/// `σ²/|θ|²`, the input to the LLR computation.
pub fn zf_observation(r: &[Complex64], est: &CfrEstimate) -> Result<(Vec<Complex64>, Vec<f64>)> {
    est.validate()?;
    if r.len() != est.theta.len() {
        return invalid("observation and CFR lengths differ");
    }
    Ok(r.iter()
        .zip(&est.theta)
        .zip(&est.per_bin_disturbance)
        .map(|((&ri, &th), &var)| {
            let p = th.norm_sqr().max(EPS);
            (ri * th.conj() / p, (var / p).max(EPS))
        })
        .unzip())
}
