use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::raised_cosine_ramp;
use crate::error::{invalid, Result};
use crate::hann::{hann_window, HannVariant};
use crate::numerics::dft_in_place;
use crate::waveform::{ofdm_modulate, qpsk_modulate, random_bits, Numerology};

/// Receive window through which the PSD is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsdWindow {
    Rectangular,
    /// Raised-cosine tail of `K` samples on each side of the FFT block.
    Taper(usize),
    Hann,
}

impl PsdWindow {
    pub fn label(&self) -> String {
        match self {
            PsdWindow::Rectangular => "rect".into(),
            PsdWindow::Taper(k) => format!("taper-{k}"),
            PsdWindow::Hann => "hann".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdCurve {
    /// Offsets from the subcarrier in subcarrier spacings, ascending.
    pub offsets: Vec<f64>,
    /// Power in dB relative to the peak.
    pub power_db: Vec<f64>,
    /// True at integer offsets (the FFT sampling points).
    pub marker: Vec<bool>,
}

impl PsdCurve {
    /// Level at an integer offset.
    pub fn marker_level(&self, offset: i64) -> Option<f64> {
        self.offsets
            .iter()
            .zip(&self.marker)
            .position(|(&o, &m)| m && (o - offset as f64).abs() < 1e-9)
            .map(|i| self.power_db[i])
    }

    /// Sidelobe peaks `(|offset|, dB)` with `lo ≤ |offset| ≤ hi`, both sides.
    pub fn sidelobe_peaks(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let p = &self.power_db;
        (1..p.len().saturating_sub(1))
            .filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1])
            .map(|i| (self.offsets[i].abs(), p[i]))
            .filter(|(o, _)| (lo..=hi).contains(o))
            .collect()
    }

    /// Decay of the sidelobe peaks in dB per octave: minus the least-squares
    /// slope of peak level against `log2(offset)` over `[lo, hi]`.
    pub fn sidelobe_decay(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .sidelobe_peaks(lo, hi)
            .into_iter()
            .map(|(o, db)| (o.log2(), db))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| -sxy / sxx)
    }
}

/// CP-OFDM symbols carrying random QPSK on the single in-band subcarrier
/// `subcarrier`, all other subcarriers empty.
pub fn single_subcarrier_stream(
    numerology: &Numerology,
    subcarrier: usize,
    symbols: usize,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if subcarrier >= numerology.data_width {
        return invalid(format!("subcarrier {subcarrier} outside the band"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(symbols * numerology.symbol_len());
    let mut d = vec![Complex64::new(0.0, 0.0); numerology.data_width];
    for _ in 0..symbols {
        d[subcarrier] = qpsk_modulate(&random_bits(&mut rng, 2))?[0];
        out.extend(ofdm_modulate(numerology, &d)?);
    }
    Ok(out)
}

/// Time-domain weights of the analysis segment and its start within a
/// symbol.
fn analysis_window(numerology: &Numerology, window: PsdWindow) -> Result<(usize, Vec<f64>)> {
    let n = numerology.fft_size;
    let l = numerology.cp_len;
    Ok(match window {
        PsdWindow::Rectangular => (l, vec![1.0; n]),
        PsdWindow::Hann => (l, hann_window(n, HannVariant::Periodic)?.coefficients),
        PsdWindow::Taper(k) => {
            if k > l {
                return invalid(format!("taper {k} exceeds CP length {l}"));
            }
            // the segment before folding: rising tail in the CP, falling
            // tail at the end of the block
            let ramp = raised_cosine_ramp(k);
            let mut w = ramp.clone();
            w.extend(std::iter::repeat_n(1.0, n - k));
            w.extend(ramp.iter().map(|r| 1.0 - r));
            (l - k, w)
        }
    })
}

/// Averaged zero-padded periodogram of `stream` around FFT bin `bin`, seen
/// through `window`, with `resolution` points per subcarrier spacing.
pub fn subcarrier_psd(
    stream: &[Complex64],
    numerology: &Numerology,
    bin: usize,
    window: PsdWindow,
    resolution: usize,
) -> Result<PsdCurve> {
    if resolution < 4 {
        return invalid(format!("resolution factor {resolution} below 4"));
    }
    let n = numerology.fft_size;
    let sym = numerology.symbol_len();
    if bin >= n {
        return invalid(format!("bin {bin} outside the FFT"));
    }
    if stream.is_empty() || stream.len() % sym != 0 {
        return invalid("stream must hold a whole number of symbols");
    }
    let (start, w) = analysis_window(numerology, window)?;
    let size = n * resolution;
    let mut acc = vec![0.0; size];
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for s in stream.chunks(sym) {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (i, &wi) in w.iter().enumerate() {
            buf[i] = s[start + i] * wi;
        }
        dft_in_place(&mut buf, false);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr();
        }
    }
    let peak = acc.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return invalid("stream carries no power");
    }
    let half = size as isize / 2;
    let centre = (bin * resolution) as isize;
    let mut offsets = Vec::with_capacity(size);
    let mut power_db = Vec::with_capacity(size);
    let mut marker = Vec::with_capacity(size);
    for rel in -half..half {
        let j = (centre + rel).rem_euclid(size as isize) as usize;
        offsets.push(rel as f64 / resolution as f64);
        power_db.push(10.0 * (acc[j] / peak).max(1e-300).log10());
        marker.push(rel % resolution as isize == 0);
    }
    Ok(PsdCurve {
        offsets,
        power_db,
        marker,
    })
}
