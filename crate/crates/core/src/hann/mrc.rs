use nalgebra::DMatrix;
use num_complex::Complex64;

use super::kernel::{
    combine_step, combiner_step, disruption_step, gains_step, sinr_step, BandChannel, MrcWeighting,
};
use crate::error::{invalid, Result};
use crate::numerics::ComplexMatrix;
use crate::EPS;

/// Everything the combiner and the cancellation loop need for one OFDM
/// symbol. Dense matrices are kept for inspection; the banded fields drive
/// the per-subcarrier processing.
#[derive(Debug, Clone)]
pub struct MrcOperator {
    /// `H̃`, (D+2)×D.
    pub ext_channel: ComplexMatrix,
    /// Unequalized combiner `C̃`, D×(D+2).
    pub raw_combiner: ComplexMatrix,
    /// Equalized combiner `C`, D×(D+2).
    pub combiner: ComplexMatrix,
    /// `G = C·H̃ − I`, D×D.
    pub residual_gain: ComplexMatrix,
    /// `ρ`, length D.
    pub residual_power: Vec<f64>,
    /// `γ̃`, D×(D+2), zero off the three branches of each subcarrier.
    pub sinr: DMatrix<f64>,
    /// `Σ̂`, D×(D+2).
    pub disruption: DMatrix<f64>,
    /// Set when some subcarrier has no usable branch.
    pub degenerate: bool,
    pub weighting: MrcWeighting,
    pub combiner_band: Vec<[Complex64; 3]>,
    pub gain_band: Vec<[Complex64; 5]>,
    pub gain_power_band: Vec<[f64; 5]>,
}

impl MrcOperator {
    pub fn width(&self) -> usize {
        self.residual_power.len()
    }
}

fn check_inputs(theta: &[Complex64], sigma2: &[f64]) -> Result<()> {
    if theta.len() < 2 {
        return invalid("need at least two subcarriers");
    }
    if sigma2.len() != theta.len() + 2 {
        return invalid(format!(
            "expected {} disturbance variances, got {}",
            theta.len() + 2,
            sigma2.len()
        ));
    }
    if sigma2.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid("disturbance variances must be finite and nonnegative");
    }
    if theta.iter().any(|t| !(t.re.is_finite() && t.im.is_finite())) {
        return invalid("CFR must be finite");
    }
    Ok(())
}

/// Builds the combiner from the data-bin CFR `θ̂` (length D) and the
/// extended-bin disturbance variances `σ²` (length D+2).
pub fn build_mrc(theta: &[Complex64], sigma2: &[f64]) -> Result<MrcOperator> {
    build_mrc_with(theta, sigma2, MrcWeighting::MaxSinr)
}

/// [`build_mrc`] with an explicit branch weighting.
pub fn build_mrc_with(theta: &[Complex64], sigma2: &[f64], weighting: MrcWeighting) -> Result<MrcOperator> {
    check_inputs(theta, sigma2)?;
    let d = theta.len();
    let sigma2: Vec<f64> = sigma2.iter().map(|v| v.max(EPS)).collect();
    let band = BandChannel::new(theta);
    let (gamma, disrupt) = sinr_step(&band, &sigma2);
    let (weights, degenerate) = combiner_step(&band, &gamma, &disrupt, weighting);
    let gains = gains_step(&band, &weights);
    let rho = disruption_step(&weights, &sigma2);

    let ext_channel = ComplexMatrix::from_fn(d + 2, d, |e, m| band.entry(e as isize, m as isize));
    let mut combiner = ComplexMatrix::zeros(d, d + 2);
    let mut raw_combiner = ComplexMatrix::zeros(d, d + 2);
    let mut sinr = DMatrix::zeros(d, d + 2);
    let mut disruption = DMatrix::zeros(d, d + 2);
    let mut residual_gain = ComplexMatrix::zeros(d, d);
    for m in 0..d {
        for j in 0..3 {
            combiner[(m, m + j)] = weights[m][j];
            raw_combiner[(m, m + j)] = match weighting {
                MrcWeighting::MaxSinr => ext_channel[(m + j, m)].conj() / disrupt[m][j],
                MrcWeighting::GammaScaled => ext_channel[(m + j, m)].conj() * gamma[m][j],
            };
            sinr[(m, m + j)] = gamma[m][j];
        }
        for k in 0..d + 2 {
            // off-branch entries of Σ̂ come from the same formula
            let e = k as isize;
            let others: f64 = (e - 2..=e)
                .filter(|&t| t != m as isize)
                .map(|t| band.power(e, t))
                .sum();
            disruption[(m, k)] = (sigma2[k] + others).max(EPS);
        }
        for (o, g) in gains[m].iter().enumerate() {
            let col = m as isize + o as isize - 2;
            if o != 2 && col >= 0 && (col as usize) < d {
                residual_gain[(m, col as usize)] = *g;
            }
        }
    }
    let gain_power_band = gains.iter().map(|row| row.map(|g| g.norm_sqr())).collect();
    Ok(MrcOperator {
        ext_channel,
        raw_combiner,
        combiner,
        residual_gain,
        residual_power: rho,
        sinr,
        disruption,
        degenerate: degenerate || theta.iter().all(|t| t.norm_sqr() < EPS),
        weighting,
        combiner_band: weights,
        gain_band: gains,
        gain_power_band,
    })
}

/// The same operator computed as the dense matrix chain
/// `H̃ → Σ → σ → Σ̂ → C̃ → C → G → ρ`.
pub fn build_mrc_dense(theta: &[Complex64], sigma2: &[f64], weighting: MrcWeighting) -> Result<MrcOperator> {
    check_inputs(theta, sigma2)?;
    let d = theta.len();
    let sigma2: Vec<f64> = sigma2.iter().map(|v| v.max(EPS)).collect();
    let h = ComplexMatrix::from_fn(d + 2, d, |e, m| match e as isize - m as isize {
        1 => theta[m],
        0 | 2 => -0.5 * theta[m],
        _ => Complex64::new(0.0, 0.0),
    });
    let sigma_mat = h.map(|v| v.norm_sqr());
    let row_power: Vec<f64> = (0..d + 2).map(|k| sigma_mat.row(k).sum()).collect();
    let disruption =
        DMatrix::from_fn(d, d + 2, |m, k| (sigma2[k] + row_power[k] - sigma_mat[(k, m)]).max(EPS));
    let raw = ComplexMatrix::from_fn(d, d + 2, |m, k| match weighting {
        MrcWeighting::MaxSinr => h[(k, m)].conj() / disruption[(m, k)],
        MrcWeighting::GammaScaled => h[(k, m)].conj() * sigma_mat[(k, m)] / disruption[(m, k)],
    });
    let gain_diag: Vec<Complex64> = (0..d).map(|m| (raw.row(m) * h.column(m))[(0, 0)]).collect();
    let combiner =
        ComplexMatrix::from_fn(d, d + 2, |m, k| raw[(m, k)] / gain_diag[m].re.max(EPS));
    let residual_gain = &combiner * &h - ComplexMatrix::identity(d, d);
    let rho = (0..d)
        .map(|m| (0..d + 2).map(|k| combiner[(m, k)].norm_sqr() * sigma2[k]).sum())
        .collect();
    let sinr = DMatrix::from_fn(d, d + 2, |m, k| sigma_mat[(k, m)] / disruption[(m, k)]);
    let combiner_band = (0..d)
        .map(|m| [combiner[(m, m)], combiner[(m, m + 1)], combiner[(m, m + 2)]])
        .collect();
    let gain_band: Vec<[Complex64; 5]> = (0..d)
        .map(|m| {
            let mut row = [Complex64::new(0.0, 0.0); 5];
            for (o, slot) in row.iter_mut().enumerate() {
                let col = m as isize + o as isize - 2;
                if o != 2 && col >= 0 && (col as usize) < d {
                    *slot = residual_gain[(m, col as usize)];
                }
            }
            row
        })
        .collect();
    let gain_power_band = gain_band.iter().map(|row| row.map(|g| g.norm_sqr())).collect();
    Ok(MrcOperator {
        ext_channel: h,
        raw_combiner: raw,
        combiner,
        residual_gain,
        residual_power: rho,
        sinr,
        disruption,
        degenerate: theta.iter().all(|t| t.norm_sqr() < EPS),
        weighting,
        combiner_band,
        gain_band,
        gain_power_band,
    })
}

fn check_extended(dcheck: &[Complex64], op: &MrcOperator) -> Result<()> {
    if dcheck.len() != op.width() + 2 {
        return invalid(format!(
            "expected {} extended observations, got {}",
            op.width() + 2,
            dcheck.len()
        ));
    }
    Ok(())
}

/// `d̆ = C·ď` over the three branches of each subcarrier.
pub fn mrc_combine(dcheck: &[Complex64], op: &MrcOperator) -> Result<Vec<Complex64>> {
    check_extended(dcheck, op)?;
    Ok(combine_step(&op.combiner_band, dcheck))
}

/// Scalar form: the weighted average of the per-branch zero-forcing
/// estimates `ď_κ / H̃[κ, d]`, with weights `γ̃` or `γ̃|H̃|²`.
pub fn combine_explicit(dcheck: &[Complex64], op: &MrcOperator) -> Result<Vec<Complex64>> {
    check_extended(dcheck, op)?;
    Ok((0..op.width())
        .map(|d| {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for k in d..d + 3 {
                let h = op.ext_channel[(k, d)];
                let g = match op.weighting {
                    MrcWeighting::MaxSinr => op.sinr[(d, k)],
                    MrcWeighting::GammaScaled => op.sinr[(d, k)] * h.norm_sqr(),
                };
                if h.norm_sqr() > 0.0 {
                    num += g * dcheck[k] / h;
                }
                den += g;
            }
            num / den.max(EPS)
        })
        .collect())
}

/// Model-predicted SINR of subcarrier `d` combined with `weights`
/// (length D+2), treating every other contribution on a branch as
/// independent disturbance of power `Σ̂[d, k]`.
pub fn model_sinr(weights: &[Complex64], d: usize, op: &MrcOperator) -> f64 {
    let mut gain = Complex64::new(0.0, 0.0);
    let mut noise = 0.0;
    for (k, w) in weights.iter().enumerate() {
        gain += w * op.ext_channel[(k, d)];
        noise += w.norm_sqr() * op.disruption[(d, k)];
    }
    gain.norm_sqr() / noise.max(f64::MIN_POSITIVE)
}

/// Perfect-cancellation output `d̆ − G·d_true`.
pub fn genie_bound(dbreve: &[Complex64], op: &MrcOperator, d_true: &[Complex64]) -> Result<Vec<Complex64>> {
    if dbreve.len() != op.width() || d_true.len() != op.width() {
        return invalid("combined symbols, truth and operator widths differ");
    }
    let prior_var = vec![0.0; op.width()];
    Ok(super::sic::cancel(dbreve, op, d_true, &prior_var).0)
}
