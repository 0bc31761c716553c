//! Standard CP-OFDM transmit chain: QPSK mapping, subcarrier mapping, CP
//! insertion and frame assembly. Nothing here depends on the receiver.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{dft_in_place, ComplexMatrix};

/// Frame geometry of one OFDM user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerology {
    pub fft_size: usize,
    pub cp_len: usize,
    pub data_width: usize,
    pub first_data_bin: usize,
    pub scs_hz: f64,
}

impl Numerology {
    pub fn new(
        fft_size: usize,
        cp_len: usize,
        data_width: usize,
        first_data_bin: usize,
        scs_hz: f64,
    ) -> Result<Self> {
        let n = Numerology {
            fft_size,
            cp_len,
            data_width,
            first_data_bin,
            scs_hz,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.fft_size;
        if !(self.cp_len > 0 && self.cp_len < n) {
            return invalid(format!("cp_len {} must be in (0, {n})", self.cp_len));
        }
        if n < 4 || self.data_width < 2 || self.data_width > n - 2 {
            return invalid(format!(
                "data_width {} must be in [2, {}]",
                self.data_width,
                n.saturating_sub(2)
            ));
        }
        if self.first_data_bin < 1 || self.first_data_bin + self.data_width > n - 1 {
            return invalid(format!(
                "band [{}, {}) must leave one guard bin to the wrap edge of {n} bins",
                self.first_data_bin,
                self.first_data_bin + self.data_width
            ));
        }
        if !(self.scs_hz > 0.0) {
            return invalid("scs_hz must be positive");
        }
        Ok(())
    }

    /// Samples per CP-OFDM symbol, `N + L`.
    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn sample_rate(&self) -> f64 {
        self.fft_size as f64 * self.scs_hz
    }

    /// FFT bins carrying data.
    pub fn data_bins(&self) -> Range<usize> {
        self.first_data_bin..self.first_data_bin + self.data_width
    }

    /// Data bins plus one neighbour on each side.
    pub fn extended_bins(&self) -> Range<usize> {
        self.first_data_bin - 1..self.first_data_bin + self.data_width + 1
    }
}

/// Which OFDM symbols of a frame carry pilots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSchedule {
    pub symbols_per_frame: usize,
    pub pilot_symbols: Vec<usize>,
    pub pilot_seed: u64,
}

impl FrameSchedule {
    pub fn validate(&self) -> Result<()> {
        for w in self.pilot_symbols.windows(2) {
            if w[1] <= w[0] {
                return invalid("pilot symbol indices must be strictly increasing");
            }
        }
        if let Some(&last) = self.pilot_symbols.last() {
            if last >= self.symbols_per_frame {
                return invalid(format!(
                    "pilot symbol {last} outside frame of {} symbols",
                    self.symbols_per_frame
                ));
            }
        }
        Ok(())
    }

    /// Every `period`-th symbol starting at `first`.
    pub fn periodic(symbols_per_frame: usize, first: usize, period: usize, pilot_seed: u64) -> Self {
        let pilot_symbols = (first..symbols_per_frame).step_by(period.max(1)).collect();
        FrameSchedule {
            symbols_per_frame,
            pilot_symbols,
            pilot_seed,
        }
    }

    pub fn is_pilot(&self, symbol: usize) -> bool {
        self.pilot_symbols.binary_search(&symbol).is_ok()
    }

    pub fn data_symbols(&self) -> Vec<usize> {
        (0..self.symbols_per_frame)
            .filter(|s| !self.is_pilot(*s))
            .collect()
    }
}

/// Gray-labelled QPSK point for a bit pair: bit 0 drives the real sign,
/// bit 1 the imaginary sign, `0 → +`.
#[inline]
pub fn qpsk_point(b0: u8, b1: u8) -> Complex64 {
    let re = if b0 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let im = if b1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

pub fn qpsk_modulate(bits: &[u8]) -> Result<Vec<Complex64>> {
    if bits.len() % 2 != 0 {
        return invalid(format!("QPSK needs an even bit count, got {}", bits.len()));
    }
    if bits.iter().any(|&b| b > 1) {
        return invalid("bits must be 0 or 1");
    }
    Ok(bits.chunks(2).map(|p| qpsk_point(p[0], p[1])).collect())
}

/// Bit LLRs `ln P(b=0)/P(b=1)` for unit-gain QPSK observations with
/// per-symbol complex noise variance `noise_var`.
pub fn qpsk_llr(obs: &[Complex64], noise_var: &[f64]) -> Result<Vec<f64>> {
    if obs.len() != noise_var.len() {
        return invalid("observation and variance lengths differ");
    }
    if noise_var.iter().any(|&v| !(v > 0.0)) {
        return invalid("noise variance must be positive");
    }
    let k = 2.0 * std::f64::consts::SQRT_2;
    Ok(obs
        .iter()
        .zip(noise_var)
        .flat_map(|(z, &v)| [k * z.re / v, k * z.im / v])
        .collect())
}

/// Hard decisions from LLRs: negative means bit 1.
pub fn hard_bits(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
}

/// A labelled constellation; SIC soft statistics are computed over it.
#[derive(Debug, Clone)]
pub struct Constellation {
    pub points: Vec<Complex64>,
    /// `labels[i][b]` is bit `b` of point `i`.
    pub labels: Vec<Vec<u8>>,
}

impl Constellation {
    pub fn qpsk() -> Self {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for b0 in 0..2u8 {
            for b1 in 0..2u8 {
                points.push(qpsk_point(b0, b1));
                labels.push(vec![b0, b1]);
            }
        }
        Constellation { points, labels }
    }

    /// Cardinality `M`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.labels.first().map_or(0, Vec::len)
    }
}

pub fn subcarrier_map(numerology: &Numerology, d: &[Complex64]) -> Result<Vec<Complex64>> {
    if d.len() != numerology.data_width {
        return invalid(format!(
            "expected {} data symbols, got {}",
            numerology.data_width,
            d.len()
        ));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); numerology.fft_size];
    out[numerology.data_bins()].copy_from_slice(d);
    Ok(out)
}

/// Transpose of [`subcarrier_map`]: picks the data bins out of a spectrum.
pub fn subcarrier_demap(numerology: &Numerology, spectrum: &[Complex64]) -> Vec<Complex64> {
    spectrum[numerology.data_bins()].to_vec()
}

/// One CP-OFDM symbol: unitary IDFT of the mapped data with the last `L`
/// samples prepended.
pub fn ofdm_modulate(numerology: &Numerology, d: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut body = subcarrier_map(numerology, d)?;
    dft_in_place(&mut body, true);
    let n = numerology.fft_size;
    let l = numerology.cp_len;
    let mut out = Vec::with_capacity(n + l);
    out.extend_from_slice(&body[n - l..]);
    out.extend_from_slice(&body);
    Ok(out)
}

/// CP addition matrix `A` ((N+L)×N): rows `0..L` copy the last `L` body
/// samples, rows `L..` are the identity.
pub fn cp_addition_matrix(numerology: &Numerology) -> ComplexMatrix {
    let n = numerology.fft_size;
    let l = numerology.cp_len;
    ComplexMatrix::from_fn(n + l, n, |r, c| {
        let src = if r < l { n - l + r } else { r - l };
        if src == c {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Uniform random bits from a seeded generator.
pub fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// Seeded pseudo-random QPSK pilot sequence, one row of `width` symbols per
/// pilot-carrying OFDM symbol.
pub fn pilot_sequence(seed: u64, count: usize, width: usize) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let bits = random_bits(&mut rng, 2 * width);
            bits.chunks(2).map(|p| qpsk_point(p[0], p[1])).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotRecord {
    pub symbol_index: usize,
    pub symbols: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataRecord {
    pub symbol_index: usize,
    pub bits: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub samples: Vec<Complex64>,
    pub pilots: Vec<PilotRecord>,
    pub data: Vec<DataRecord>,
}

/// Number of payload bits a schedule carries (QPSK on every data bin).
pub fn payload_capacity(numerology: &Numerology, schedule: &FrameSchedule) -> usize {
    schedule.data_symbols().len() * numerology.data_width * 2
}

/// Concatenated CP-OFDM symbols with pilots on the scheduled symbols and the
/// payload spread over the rest in order.
pub fn build_frame(
    numerology: &Numerology,
    schedule: &FrameSchedule,
    payload_bits: &[u8],
) -> Result<Frame> {
    numerology.validate()?;
    schedule.validate()?;
    let capacity = payload_capacity(numerology, schedule);
    if payload_bits.len() != capacity {
        return invalid(format!(
            "payload has {} bits, schedule carries {capacity}",
            payload_bits.len()
        ));
    }
    let width = numerology.data_width;
    let pilot_rows = pilot_sequence(schedule.pilot_seed, schedule.pilot_symbols.len(), width);
    let mut pilot_iter = pilot_rows.into_iter();
    let mut bit_chunks = payload_bits.chunks(2 * width);

    let mut samples = Vec::with_capacity(schedule.symbols_per_frame * numerology.symbol_len());
    let mut pilots = Vec::new();
    let mut data = Vec::new();
    for s in 0..schedule.symbols_per_frame {
        let symbols = if schedule.is_pilot(s) {
            let symbols = pilot_iter.next().expect("one pilot row per pilot symbol");
            pilots.push(PilotRecord {
                symbol_index: s,
                symbols: symbols.clone(),
            });
            symbols
        } else {
            let bits = bit_chunks.next().expect("capacity checked").to_vec();
            let symbols = qpsk_modulate(&bits)?;
            data.push(DataRecord {
                symbol_index: s,
                bits,
                symbols: symbols.clone(),
            });
            symbols
        };
        samples.extend(ofdm_modulate(numerology, &symbols)?);
    }
    Ok(Frame {
        samples,
        pilots,
        data,
    })
}
