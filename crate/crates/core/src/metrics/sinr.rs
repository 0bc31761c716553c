use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Reported SINR never exceeds this.
pub const SINR_CAP_DB: f64 = 150.0;
/// Fewer samples per subcarrier than this flag the measurement.
pub const MIN_SINR_SAMPLES: u64 = 1000;

/// Running sums from which a scale-corrected SINR is computed. Merging is
/// a plain sum, so partial accumulators can be combined in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SinrAccumulator {
    /// `Σ x̂·s*`.
    pub cross_re: f64,
    pub cross_im: f64,
    /// `Σ|s|²`.
    pub truth_energy: f64,
    /// `Σ|x̂|²`.
    pub estimate_energy: f64,
    pub count: u64,
}

impl SinrAccumulator {
    pub fn push(&mut self, estimate: Complex64, truth: Complex64) {
        let c = estimate * truth.conj();
        self.cross_re += c.re;
        self.cross_im += c.im;
        self.truth_energy += truth.norm_sqr();
        self.estimate_energy += estimate.norm_sqr();
        self.count += 1;
    }

    pub fn merge(&mut self, other: &SinrAccumulator) {
        self.cross_re += other.cross_re;
        self.cross_im += other.cross_im;
        self.truth_energy += other.truth_energy;
        self.estimate_energy += other.estimate_energy;
        self.count += other.count;
    }

    /// SINR after removing the best complex scale `a = Σx̂s*/Σ|s|²`:
    /// `|a|²Σ|s|² / Σ|x̂ − a·s|²`.
    pub fn finish(&self) -> SinrMeasurement {
        let cross2 = self.cross_re * self.cross_re + self.cross_im * self.cross_im;
        let signal = if self.truth_energy > 0.0 {
            cross2 / self.truth_energy
        } else {
            0.0
        };
        let error = (self.estimate_energy - signal).max(0.0);
        let db = if signal <= 0.0 {
            f64::NEG_INFINITY
        } else if error <= 0.0 {
            SINR_CAP_DB
        } else {
            (10.0 * (signal / error).log10()).min(SINR_CAP_DB)
        };
        SinrMeasurement {
            sinr_db: db,
            samples: self.count,
            insufficient: self.count < MIN_SINR_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrMeasurement {
    pub sinr_db: f64,
    pub samples: u64,
    /// Set when fewer than [`MIN_SINR_SAMPLES`] samples went in.
    pub insufficient: bool,
}

/// Per-subcarrier SINR of `estimates[t][d]` against `truth[t][d]` over the
/// symbols `t`. With `remove_scaling` the best complex gain per subcarrier
/// is divided out first, otherwise the estimates are taken as unbiased.
pub fn measure_sinr(
    estimates: &[Vec<Complex64>],
    truth: &[Vec<Complex64>],
    remove_scaling: bool,
) -> Result<Vec<SinrMeasurement>> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return invalid("estimates and truth must be nonempty and of equal length");
    }
    let d = truth[0].len();
    if estimates.iter().chain(truth).any(|row| row.len() != d) {
        return invalid("all symbols must have the same width");
    }
    Ok((0..d)
        .map(|k| {
            if remove_scaling {
                let mut acc = SinrAccumulator::default();
                for (e, t) in estimates.iter().zip(truth) {
                    acc.push(e[k], t[k]);
                }
                acc.finish()
            } else {
                let (mut sig, mut err) = (0.0, 0.0);
                for (e, t) in estimates.iter().zip(truth) {
                    sig += t[k].norm_sqr();
                    err += (e[k] - t[k]).norm_sqr();
                }
                let db = if err <= 0.0 {
                    SINR_CAP_DB
                } else {
                    (10.0 * (sig / err).log10()).min(SINR_CAP_DB)
                };
                SinrMeasurement {
                    sinr_db: db,
                    samples: estimates.len() as u64,
                    insufficient: (estimates.len() as u64) < MIN_SINR_SAMPLES,
                }
            }
        })
        .collect())
}
