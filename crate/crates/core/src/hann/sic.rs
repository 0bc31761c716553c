//! Soft parallel interference cancellation on the combiner output.
//!
//! Each iteration turns the previous LLRs into per-symbol soft means and
//! variances, subtracts `G·μ` from the combiner output, adds `|G|²·v` to the
//! residual disturbance and recomputes the LLRs under a Gaussian
//! approximation of what is left. New soft statistics are blended with the
//! previous ones before they are used as priors.

use num_complex::Complex64;

use super::kernel::{cancel_step, residual_var_step, soft_mean_step, soft_var_step};
use super::mrc::MrcOperator;
use crate::error::{invalid, Result};
use crate::waveform::Constellation;
use crate::EPS;

/// Weight of the fresh soft statistics in the prior update. Undamped
/// updates oscillate once neighbouring gains approach ½.
pub const SIC_DAMPING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SoftSymbolState {
    pub iteration: usize,
    /// Observation after cancellation, `ž`.
    pub observation: Vec<Complex64>,
    /// Disturbance variance assumed for `ž`.
    pub noise_var: Vec<f64>,
    /// Bit LLRs, `bits_per_symbol` per subcarrier.
    pub llrs: Vec<f64>,
    /// Damped soft statistics, the priors of the next iteration.
    pub soft_mean: Vec<Complex64>,
    pub soft_var: Vec<f64>,
}

/// One cancellation pass with the given priors. Returns `ž` and its
/// variance.
pub fn cancel(
    dbreve: &[Complex64],
    op: &MrcOperator,
    prior_mean: &[Complex64],
    prior_var: &[f64],
) -> (Vec<Complex64>, Vec<f64>) {
    let obs = cancel_step(dbreve, &op.gain_band, prior_mean);
    let var = residual_var_step(&op.residual_power, &op.gain_power_band, prior_var);
    (obs, var)
}

/// Exact bit LLRs `ln Σ_{s:b=0} e^{−|z−s|²/v} − ln Σ_{s:b=1} e^{−|z−s|²/v}`.
pub fn constellation_llrs(obs: &[Complex64], var: &[f64], cons: &Constellation) -> Vec<f64> {
    let k = cons.bits_per_symbol();
    let mut out = Vec::with_capacity(obs.len() * k);
    let mut metric = vec![0.0; cons.size()];
    for (z, &v) in obs.iter().zip(var) {
        let v = v.max(EPS);
        for (m, s) in metric.iter_mut().zip(&cons.points) {
            *m = -(z - s).norm_sqr() / v;
        }
        for b in 0..k {
            let lse = |bit: u8| {
                let best = cons
                    .labels
                    .iter()
                    .zip(&metric)
                    .filter(|(lab, _)| lab[b] == bit)
                    .map(|(_, &m)| m)
                    .fold(f64::NEG_INFINITY, f64::max);
                best + cons
                    .labels
                    .iter()
                    .zip(&metric)
                    .filter(|(lab, _)| lab[b] == bit)
                    .map(|(_, &m)| (m - best).exp())
                    .sum::<f64>()
                    .ln()
            };
            out.push(lse(0) - lse(1));
        }
    }
    out
}

/// `[P(b=0), P(b=1)]` from an LLR; infinite LLRs give certain bits.
#[inline]
pub fn bit_probability(llr: f64) -> [f64; 2] {
    let p0 = 1.0 / (1.0 + (-llr).exp());
    let p1 = 1.0 / (1.0 + llr.exp());
    [p0, p1]
}

/// Soft means and variances per symbol from bit LLRs.
pub fn soft_symbols(llrs: &[f64], cons: &Constellation) -> (Vec<Complex64>, Vec<f64>) {
    let k = cons.bits_per_symbol();
    let energy: Vec<f64> = cons.points.iter().map(|p| p.norm_sqr()).collect();
    llrs.chunks(k)
        .map(|chunk| {
            let bp: Vec<[f64; 2]> = chunk.iter().map(|&l| bit_probability(l)).collect();
            let (probs, mean) = soft_mean_step(&bp, &cons.points, &cons.labels);
            (mean, soft_var_step(&probs, &energy, mean))
        })
        .unzip()
}

#[derive(Debug, Clone)]
pub struct SicOutput {
    /// Iteration 0 (plain combiner output) followed by one entry per
    /// cancellation iteration.
    pub history: Vec<SoftSymbolState>,
}

impl SicOutput {
    pub fn final_llrs(&self) -> &[f64] {
        &self.history.last().expect("history is never empty").llrs
    }
}

/// Runs `iterations` cancellation passes after the plain combiner output
/// with the default damping.
pub fn sic_decode(
    dbreve: &[Complex64],
    op: &MrcOperator,
    iterations: usize,
    cons: &Constellation,
) -> Result<SicOutput> {
    sic_decode_damped(dbreve, op, iterations, cons, SIC_DAMPING)
}

/// As [`sic_decode`], with priors `β·new + (1−β)·previous` after the first
/// pass. `β = 1` is the undamped update.
pub fn sic_decode_damped(
    dbreve: &[Complex64],
    op: &MrcOperator,
    iterations: usize,
    cons: &Constellation,
    beta: f64,
) -> Result<SicOutput> {
    if !(beta > 0.0 && beta <= 1.0) {
        return invalid(format!("damping must lie in (0, 1], got {beta}"));
    }
    let d = op.width();
    if dbreve.len() != d {
        return invalid(format!("expected {d} combined symbols, got {}", dbreve.len()));
    }
    if cons.size() == 0 || cons.bits_per_symbol() == 0 {
        return invalid("empty constellation");
    }
    let mut mean = vec![Complex64::new(0.0, 0.0); d];
    let mut var = vec![cons.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / cons.size() as f64; d];
    let mut history = Vec::with_capacity(iterations + 1);
    for iteration in 0..=iterations {
        let (observation, noise_var) = cancel(dbreve, op, &mean, &var);
        let llrs = constellation_llrs(&observation, &noise_var, cons);
        let (m, v) = soft_symbols(&llrs, cons);
        if iteration == 0 {
            mean = m;
            var = v;
        } else {
            for (old, new) in mean.iter_mut().zip(m) {
                *old = new * beta + *old * (1.0 - beta);
            }
            for (old, new) in var.iter_mut().zip(v) {
                *old = beta * new + (1.0 - beta) * *old;
            }
        }
        history.push(SoftSymbolState {
            iteration,
            observation,
            noise_var,
            llrs,
            soft_mean: mean.clone(),
            soft_var: var.clone(),
        });
    }
    Ok(SicOutput { history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_noise;
    use crate::hann::mrc::{build_mrc, genie_bound, mrc_combine};
    use crate::numerics::mat_vec;
    use crate::waveform::{qpsk_llr, qpsk_modulate, random_bits};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_llrs_match_qpsk_formula() {
        let q = Constellation::qpsk();
        let z = complex_noise(Some(1), 50);
        let v: Vec<f64> = (0..50).map(|i| 0.1 + 0.05 * i as f64).collect();
        let a = constellation_llrs(&z, &v, &q);
        let b = qpsk_llr(&z, &v).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn certain_bits_give_exact_symbols() {
        let q = Constellation::qpsk();
        let (m, v) = soft_symbols(&[f64::INFINITY, f64::NEG_INFINITY, 0.0, 0.0], &q);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m[0] - Complex64::new(s, -s)).norm() < 1e-15);
        assert!(v[0].abs() < 1e-15);
        assert!(m[1].norm() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_gain_means_no_change() {
        // a single flat subcarrier pair with infinite side disturbance has G = 0
        let theta = vec![Complex64::new(1.0, 0.0); 4];
        let mut sigma2 = vec![1e12; 6];
        for v in &mut sigma2[1..5] {
            *v = 0.3;
        }
        let mut op = build_mrc(&theta, &sigma2).unwrap();
        op.gain_band.iter_mut().for_each(|g| *g = [Complex64::new(0.0, 0.0); 5]);
        op.gain_power_band.iter_mut().for_each(|g| *g = [0.0; 5]);
        let y = complex_noise(Some(3), 4);
        let out = sic_decode(&y, &op, 4, &Constellation::qpsk()).unwrap();
        assert_eq!(out.history.len(), 5);
        for st in &out.history[1..] {
            assert_eq!(st.llrs, out.history[0].llrs);
        }
    }

    #[test]
    fn genie_priors_reach_the_bound() {
        let theta = complex_noise(Some(5), 12);
        let op = build_mrc(&theta, &vec![0.2; 14]).unwrap();
        let d = qpsk_modulate(&random_bits(&mut ChaCha8Rng::seed_from_u64(6), 24)).unwrap();
        let noise = complex_noise(Some(7), 14);
        let dcheck: Vec<_> = mat_vec(&op.ext_channel, &d)
            .iter()
            .zip(&noise)
            .map(|(a, b)| a + 0.3 * b)
            .collect();
        let dbreve = mrc_combine(&dcheck, &op).unwrap();
        let (obs, var) = cancel(&dbreve, &op, &d, &vec![0.0; 12]);
        let bound = genie_bound(&dbreve, &op, &d).unwrap();
        for i in 0..12 {
            assert!((obs[i] - bound[i]).norm() < 1e-10);
            assert!((var[i] - op.residual_power[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn damping_blends_priors() {
        let theta = complex_noise(Some(9), 8);
        let op = build_mrc(&theta, &vec![0.4; 10]).unwrap();
        let y = complex_noise(Some(10), 8);
        let q = Constellation::qpsk();
        let full = sic_decode_damped(&y, &op, 3, &q, 1.0).unwrap();
        for st in &full.history {
            let (m, v) = soft_symbols(&st.llrs, &q);
            assert_eq!(st.soft_mean, m);
            assert_eq!(st.soft_var, v);
        }
        let half = sic_decode_damped(&y, &op, 3, &q, 0.5).unwrap();
        assert_eq!(half.history[0], full.history[0]);
        for w in half.history.windows(2) {
            let (m, _) = soft_symbols(&w[1].llrs, &q);
            for i in 0..8 {
                let want = 0.5 * m[i] + 0.5 * w[0].soft_mean[i];
                assert!((w[1].soft_mean[i] - want).norm() < 1e-15);
            }
        }
        for beta in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(sic_decode_damped(&y, &op, 1, &q, beta).is_err());
        }
        assert!(sic_decode(&y[1..], &op, 1, &q).is_err());
    }
}
