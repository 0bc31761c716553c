use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{apply_banded, dft_in_place};
use crate::waveform::Numerology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HannVariant {
    /// `w[n] = 1 − cos(2πn/N)`.
    #[default]
    Periodic,
    /// `sin²(πn/(N−1))` scaled so that the coefficients sum to `N`.
    PaperSymmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HannWindow {
    pub variant: HannVariant,
    pub coefficients: Vec<f64>,
    /// Factor multiplying the raw `sin²` shape.
    pub scale: f64,
}

pub fn hann_window(n: usize, variant: HannVariant) -> Result<HannWindow> {
    if n < 3 {
        return invalid(format!("Hann window needs at least 3 samples, got {n}"));
    }
    let nf = n as f64;
    let (scale, coefficients) = match variant {
        HannVariant::Periodic => {
            let w = (0..n).map(|i| 1.0 - (2.0 * PI * i as f64 / nf).cos()).collect();
            (2.0, w)
        }
        HannVariant::PaperSymmetric => {
            let m = nf - 1.0;
            let scale =
                4.0 * nf / (2.0 * nf + ((PI - 2.0 * PI * nf) / m).sin() / (PI / m).sin() - 1.0);
            let w = (0..n)
                .map(|i| scale * (PI * i as f64 / m).sin().powi(2))
                .collect();
            (scale, w)
        }
    };
    Ok(HannWindow {
        variant,
        coefficients,
        scale,
    })
}

/// Windowed spectrum `r̃ = F_N·W·y`: the CP is dropped and the remaining
/// `N` samples are weighted by the window.
pub fn hann_receive(
    y: &[Complex64],
    numerology: &Numerology,
    window: &HannWindow,
) -> Result<Vec<Complex64>> {
    let n = numerology.fft_size;
    let l = numerology.cp_len;
    if y.len() != n + l {
        return invalid(format!("expected {} samples, got {}", n + l, y.len()));
    }
    if window.coefficients.len() != n {
        return invalid("window length differs from the FFT size");
    }
    let mut buf: Vec<Complex64> = y[l..]
        .iter()
        .zip(&window.coefficients)
        .map(|(s, &w)| s * w)
        .collect();
    dft_in_place(&mut buf, false);
    Ok(buf)
}

/// The three-tap ICI kernel of the periodic Hann window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IciKernel {
    pub center: f64,
    pub off: f64,
    /// Whether the corner entries of the circulant are kept.
    pub wrap_present: bool,
}

impl IciKernel {
    /// Circulant operator on the full spectrum.
    pub fn full_spectrum() -> Self {
        IciKernel {
            center: 1.0,
            off: -0.5,
            wrap_present: true,
        }
    }

    /// Banded Toeplitz view on a demapped band.
    pub fn band_view() -> Self {
        IciKernel {
            wrap_present: false,
            ..Self::full_spectrum()
        }
    }

    pub fn apply(&self, spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
        apply_banded(
            Complex64::new(self.center, 0.0),
            Complex64::new(self.off, 0.0),
            spectrum,
            self.wrap_present,
        )
    }
}

/// Largest entry of `|F·diag(w)·Fᴴ − K|`, where `K` is the circulant with
/// first row `[1, −½, 0, …, 0, −½]`.
///
/// Column `m` of the product is the transform of `w` times the `m`-th
/// inverse-DFT basis vector, so the full matrix is built with `N` FFTs.
pub fn ici_operator_check(n: usize, window: &HannWindow) -> Result<f64> {
    if n < 4 || window.coefficients.len() != n {
        return invalid(format!("need N >= 4 and a window of length {n}"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut worst: f64 = 0.0;
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for m in 0..n {
        for (i, (c, &w)) in col.iter_mut().zip(&window.coefficients).enumerate() {
            let phase = 2.0 * PI * ((i * m) % n) as f64 / n as f64;
            *c = Complex64::from_polar(scale * w, phase);
        }
        dft_in_place(&mut col, false);
        for (k, v) in col.iter().enumerate() {
            let dist = (k + n - m) % n;
            let want = match dist {
                0 => 1.0,
                1 => -0.5,
                d if d == n - 1 => -0.5,
                _ => 0.0,
            };
            worst = worst.max((v - want).norm());
        }
    }
    Ok(worst)
}

/// Bins `first−1 … first+D` of a full spectrum.
pub fn extended_demap(spectrum: &[Complex64], numerology: &Numerology) -> Result<Vec<Complex64>> {
    if spectrum.len() != numerology.fft_size {
        return invalid("spectrum length differs from the FFT size");
    }
    Ok(spectrum[numerology.extended_bins()].to_vec())
}
