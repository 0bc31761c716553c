use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Result};
use crate::waveform::hard_bits;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCount {
    pub errors: u64,
    pub bits: u64,
}

impl ErrorCount {
    pub fn rate(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// 95 % Wilson interval of the rate.
    pub fn ci95(&self) -> (f64, f64) {
        wilson_ci(self.errors, self.bits, 1.959_963_984_540_054)
    }
}

impl Add for ErrorCount {
    type Output = ErrorCount;
    fn add(self, rhs: ErrorCount) -> ErrorCount {
        ErrorCount {
            errors: self.errors + rhs.errors,
            bits: self.bits + rhs.bits,
        }
    }
}

impl AddAssign for ErrorCount {
    fn add_assign(&mut self, rhs: ErrorCount) {
        *self = *self + rhs;
    }
}

/// Hamming distance between decided and true bits.
pub fn count_errors(decided: &[u8], truth: &[u8]) -> Result<ErrorCount> {
    if decided.len() != truth.len() {
        return invalid(format!(
            "{} decisions for {} bits",
            decided.len(),
            truth.len()
        ));
    }
    let errors = decided.iter().zip(truth).filter(|(a, b)| (**a != 0) != (**b != 0)).count();
    Ok(ErrorCount {
        errors: errors as u64,
        bits: truth.len() as u64,
    })
}

/// Errors of hard decisions on LLRs (negative LLR decides 1).
pub fn count_llr_errors(llrs: &[f64], truth: &[u8]) -> Result<ErrorCount> {
    count_errors(&hard_bits(llrs), truth)
}

/// Wilson score interval for `errors` successes out of `bits` trials.
pub fn wilson_ci(errors: u64, bits: u64, z: f64) -> (f64, f64) {
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Gaussian tail `Q(x) = ½·erfc(x/√2)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Gray-mapped QPSK bit error rate at symbol SNR `snr` (linear).
pub fn qpsk_ber(snr: f64) -> f64 {
    q_function(snr.max(0.0).sqrt())
}
