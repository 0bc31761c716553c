//! Pilot-based channel and disturbance estimation on the Hann-windowed
//! spectrum. The window spreads every pilot onto its two neighbours, so the
//! observation on extended bin `e` mixes pilots `e−2`, `e−1` and `e`.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::numerics::ComplexMatrix;
use crate::rx_baseline::{fit_cir, moving_average3, tap_phasor, CirEstimate};
use crate::waveform::Numerology;
use crate::EPS;

/// Rows whose filtered pilot is below this fraction of the largest one are
/// dropped from the fit.
pub const NULL_ROW_RATIO: f64 = 1e-6;

fn pilot_at(pilots: &[Complex64], m: isize) -> Complex64 {
    if m >= 0 && (m as usize) < pilots.len() {
        pilots[m as usize]
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// `f_e = p_{e−1} − ½p_{e−2} − ½p_e` on the `D+2` extended bins, the
/// windowed observation of the pilots through a flat channel.
pub fn filtered_pilots(pilots: &[Complex64]) -> Vec<Complex64> {
    (0..pilots.len() as isize + 2)
        .map(|e| pilot_at(pilots, e - 1) - 0.5 * (pilot_at(pilots, e - 2) + pilot_at(pilots, e)))
        .collect()
}

/// `(D+2)×support` design mapping CIR taps to the windowed pilot bins.
pub fn hann_pilot_design(
    numerology: &Numerology,
    pilots: &[Complex64],
    support_len: usize,
) -> ComplexMatrix {
    let n = numerology.fft_size;
    let first = numerology.first_data_bin as isize;
    let d = pilots.len() as isize;
    ComplexMatrix::from_fn(pilots.len() + 2, support_len, |e, tap| {
        let e = e as isize;
        [(e - 1, 1.0), (e - 2, -0.5), (e, -0.5)]
            .iter()
            .filter(|(m, _)| (0..d).contains(m))
            .map(|&(m, k)| pilots[m as usize] * tap_phasor((first + m) as usize, tap, n) * k)
            .sum()
    })
}

#[derive(Debug, Clone)]
pub struct HannCirEstimate {
    pub fit: CirEstimate,
    /// Extended-bin indices left out of the fit.
    pub nulled_bins: Vec<usize>,
}

impl HannCirEstimate {
    pub fn h(&self) -> &[Complex64] {
        &self.fit.h
    }
}

/// Ridge LS CIR fit from the extended windowed pilot spectrum `delta`, all
/// rows weighted equally.
pub fn estimate_cir_hann(
    delta: &[Complex64],
    pilots: &[Complex64],
    numerology: &Numerology,
    support_len: usize,
    ridge: f64,
) -> Result<HannCirEstimate> {
    fit_hann(delta, pilots, numerology, support_len, ridge, None)
}

/// As [`estimate_cir_hann`], with row `e` weighted by `1/σ_e` for the given
/// disturbance variances (normalized to unit mean over the rows used).
pub fn estimate_cir_hann_weighted(
    delta: &[Complex64],
    pilots: &[Complex64],
    numerology: &Numerology,
    support_len: usize,
    ridge: f64,
    row_var: &[f64],
) -> Result<HannCirEstimate> {
    if row_var.len() != numerology.data_width + 2 {
        return invalid(format!(
            "expected {} row variances, got {}",
            numerology.data_width + 2,
            row_var.len()
        ));
    }
    if row_var.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return invalid("row variances must be finite and positive");
    }
    fit_hann(delta, pilots, numerology, support_len, ridge, Some(row_var))
}

fn fit_hann(
    delta: &[Complex64],
    pilots: &[Complex64],
    numerology: &Numerology,
    support_len: usize,
    ridge: f64,
    row_var: Option<&[f64]>,
) -> Result<HannCirEstimate> {
    let d = numerology.data_width;
    if pilots.len() != d || delta.len() != d + 2 {
        return invalid(format!(
            "expected {d} pilots and {} windowed observations",
            d + 2
        ));
    }
    if support_len == 0 || support_len > numerology.fft_size {
        return invalid(format!("support length {support_len} out of range"));
    }
    let f = filtered_pilots(pilots);
    let peak = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak < EPS {
        return invalid("pilots vanish after windowing");
    }
    let (rows, nulled_bins): (Vec<usize>, Vec<usize>) =
        (0..d + 2).partition(|&e| f[e].norm() >= NULL_ROW_RATIO * peak);
    let design = hann_pilot_design(numerology, pilots, support_len);
    let weights = row_var.map(|var| {
        let inv: Vec<f64> = var.iter().map(|v| 1.0 / v.sqrt()).collect();
        let mean = rows.iter().map(|&e| inv[e]).sum::<f64>() / rows.len() as f64;
        inv.into_iter().map(|w| w / mean).collect::<Vec<_>>()
    });
    let fit = fit_cir(&design, delta, &rows, weights.as_deref(), numerology.fft_size, ridge)?;
    Ok(HannCirEstimate { fit, nulled_bins })
}

/// Raw residual power `|δ_e − δ̂_e|²` per extended bin. Nulled rows carry
/// no residual information and borrow the nearest used bin's.
pub fn residual_powers(delta: &[Complex64], est: &HannCirEstimate) -> Result<Vec<f64>> {
    let recon = &est.fit.reconstruction;
    if delta.len() != recon.len() {
        return invalid("observation and reconstruction lengths differ");
    }
    let raw: Vec<f64> = delta.iter().zip(recon).map(|(a, b)| (a - b).norm_sqr()).collect();
    let mut out = raw.clone();
    for &e in &est.nulled_bins {
        let nearest = (0..raw.len())
            .filter(|k| !est.nulled_bins.contains(k))
            .min_by_key(|&k| k.abs_diff(e));
        if let Some(k) = nearest {
            out[e] = raw[k];
        }
    }
    Ok(out)
}

/// Disturbance variance per extended bin from the residual powers of one or
/// more pilot symbols, each already multiplied by its fit's
/// degrees-of-freedom scale.
///
/// The powers are averaged over the symbols. Data bins are then smoothed
/// by a 3-bin moving average among themselves; the two outer bins sit next
/// to the adjacent bands, usually far above the data bins, and are kept
/// apart in both directions.
pub fn pooled_disturbance(residuals: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = residuals.first() else {
        return invalid("no residuals to pool");
    };
    let n = first.len();
    if n < 3 || residuals.iter().any(|r| r.len() != n) {
        return invalid("residual profiles must share a length of at least 3");
    }
    let mut mean = vec![0.0; n];
    for r in residuals {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / residuals.len() as f64;
        }
    }
    let mut out = mean.clone();
    out[1..n - 1].copy_from_slice(&moving_average3(&mean[1..n - 1]));
    Ok(out.into_iter().map(|v| v.max(EPS)).collect())
}

/// Disturbance variance per extended bin from a single pilot symbol.
pub fn estimate_disturbance(delta: &[Complex64], est: &HannCirEstimate) -> Result<Vec<f64>> {
    let scale = est.fit.residual_scale();
    let raw = residual_powers(delta, est)?;
    pooled_disturbance(&[raw.into_iter().map(|v| v * scale).collect()])
}

/// Channel and disturbance estimates from all pilot symbols of a frame.
///
/// A first pass fits every symbol with equal row weights and pools the
/// residuals into a disturbance profile. A second pass refits each symbol
/// with rows weighted by that profile, so bins flooded by adjacent-band
/// leakage stop dominating the fit, and pools its residuals again.
pub fn estimate_frame_hann(
    observations: &[(&[Complex64], &[Complex64])],
    numerology: &Numerology,
    support_len: usize,
    ridge: f64,
) -> Result<(Vec<HannCirEstimate>, Vec<f64>)> {
    let pool = |fits: &[HannCirEstimate]| -> Result<Vec<f64>> {
        let raw = observations
            .iter()
            .zip(fits)
            .map(|((delta, _), est)| {
                let scale = est.fit.residual_scale();
                Ok(residual_powers(delta, est)?.into_iter().map(|v| v * scale).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        pooled_disturbance(&raw)
    };
    let first = observations
        .iter()
        .map(|(delta, pilots)| estimate_cir_hann(delta, pilots, numerology, support_len, ridge))
        .collect::<Result<Vec<_>>>()?;
    let var = pool(&first)?;
    let fits = observations
        .iter()
        .map(|(delta, pilots)| {
            estimate_cir_hann_weighted(delta, pilots, numerology, support_len, ridge, &var)
        })
        .collect::<Result<Vec<_>>>()?;
    let var = pool(&fits)?;
    Ok((fits, var))
}
