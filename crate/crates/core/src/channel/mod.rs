//! Time-varying multipath channels and multi-user signal composition.
//!
//! A channel realization stores one complex gain time series per tap,
//! indexed by absolute receive sample, plus the tap's integer lag. The gain
//! applied to input sample `k` when producing output sample `n` is the
//! sum of the gains at time `n` of all taps with lag `n − k`.

mod interferer;
mod profile;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::ComplexMatrix;

pub use interferer::{interferer_stream, raised_cosine_ramp};
pub use profile::{rms_delay_spread, TdlProfile};

pub const DEFAULT_SINUSOIDS: usize = 32;

/// A tapped-delay-line channel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdlSpec {
    /// Tap delays in seconds, nonnegative and ascending.
    pub tap_delays: Vec<f64>,
    /// Linear tap powers summing to one.
    pub tap_powers: Vec<f64>,
    pub rms_ds_target: f64,
    pub doppler_hz: f64,
    pub seed: u64,
    pub num_sinusoids: usize,
}

impl TdlSpec {
    /// Scales `profile` so that its RMS delay spread equals `rms_ds`.
    pub fn from_profile(
        profile: &TdlProfile,
        rms_ds: f64,
        doppler_hz: f64,
        seed: u64,
        num_sinusoids: usize,
    ) -> Result<Self> {
        let base = profile.rms_delay_spread();
        let scale = if base > 0.0 { rms_ds / base } else { 0.0 };
        let spec = TdlSpec {
            tap_delays: profile.delays_s.iter().map(|d| d * scale).collect(),
            tap_powers: profile.powers.clone(),
            rms_ds_target: rms_ds,
            doppler_hz,
            seed,
            num_sinusoids,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Single tap at delay zero.
    pub fn flat(doppler_hz: f64, seed: u64) -> Self {
        TdlSpec {
            tap_delays: vec![0.0],
            tap_powers: vec![1.0],
            rms_ds_target: 0.0,
            doppler_hz,
            seed,
            num_sinusoids: DEFAULT_SINUSOIDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tap_delays.is_empty() || self.tap_delays.len() != self.tap_powers.len() {
            return invalid("tap delays and powers must be nonempty and of equal length");
        }
        if self.tap_delays.iter().any(|d| !(*d >= 0.0)) {
            return invalid("tap delays must be nonnegative");
        }
        if self.tap_delays.windows(2).any(|w| w[1] < w[0]) {
            return invalid("tap delays must be sorted");
        }
        let total: f64 = self.tap_powers.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.tap_powers.iter().any(|p| *p < 0.0) {
            return invalid(format!("tap powers must be nonnegative and sum to 1, got {total}"));
        }
        let realized = self.realized_rms_ds();
        if (realized - self.rms_ds_target).abs() > 0.01 * self.rms_ds_target {
            return invalid(format!(
                "realized RMS delay spread {realized:e} s differs from target {:e} s",
                self.rms_ds_target
            ));
        }
        if !(self.doppler_hz >= 0.0) {
            return invalid("doppler_hz must be nonnegative");
        }
        if self.num_sinusoids == 0 {
            return invalid("num_sinusoids must be positive");
        }
        Ok(())
    }

    pub fn realized_rms_ds(&self) -> f64 {
        rms_delay_spread(&self.tap_delays, &self.tap_powers)
    }

    /// Largest tap delay, in seconds.
    pub fn max_excess_delay(&self) -> f64 {
        self.tap_delays.last().copied().unwrap_or(0.0)
    }
}

/// Gain time series of one tap.
#[derive(Debug, Clone, PartialEq)]
pub struct TapSeries {
    pub lag: usize,
    pub gains: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<TapSeries>,
    /// Number of receive samples covered.
    pub span: usize,
}

impl ChannelRealization {
    /// Time-invariant channel with the given impulse response.
    pub fn static_cir(cir: &[Complex64], span: usize) -> Self {
        let taps = cir
            .iter()
            .enumerate()
            .filter(|(_, g)| g.norm_sqr() > 0.0)
            .map(|(lag, &g)| TapSeries {
                lag,
                gains: vec![g; span],
            })
            .collect();
        ChannelRealization { taps, span }
    }

    pub fn identity(span: usize) -> Self {
        Self::static_cir(&[Complex64::new(1.0, 0.0)], span)
    }

    pub fn max_lag(&self) -> usize {
        self.taps.iter().map(|t| t.lag).max().unwrap_or(0)
    }

    /// Impulse response seen at receive sample `n`, `len` lags long.
    pub fn cir_at(&self, n: usize, len: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); len];
        for tap in &self.taps {
            if tap.lag < len {
                h[tap.lag] += tap.gains[n];
            }
        }
        h
    }

    /// Impulse response averaged over receive samples `range`.
    pub fn mean_cir(&self, range: std::ops::Range<usize>, len: usize) -> Vec<Complex64> {
        let count = range.len().max(1) as f64;
        let mut h = vec![Complex64::new(0.0, 0.0); len];
        for tap in &self.taps {
            if tap.lag < len {
                let sum: Complex64 = tap.gains[range.clone()].iter().sum();
                h[tap.lag] += sum / count;
            }
        }
        h
    }

    /// Explicit convolution matrix for the window `[start, start + len)`:
    /// entry `(n, k)` is the gain applied to input `start + k` at output
    /// `start + n`. Inputs before the window are not represented.
    pub fn explicit_matrix(&self, start: usize, len: usize) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(len, len);
        for tap in &self.taps {
            for n in tap.lag..len {
                h[(n, n - tap.lag)] += tap.gains[start + n];
            }
        }
        h
    }
}

/// Quantizes the tap delays and synthesizes each tap's fading process.
///
/// Each tap is a sum of `num_sinusoids` unit phasors with arrival angles
/// spread uniformly over half a circle (Doppler shifts `f_d·cos α`, the
/// U-shaped classic spectrum) and independent uniform phases drawn from a
/// per-tap stream of the spec seed. Zero Doppler gives a static channel.
pub fn make_tdl(spec: &TdlSpec, sample_rate: f64, duration: usize) -> Result<ChannelRealization> {
    spec.validate()?;
    if duration == 0 {
        return invalid("duration must be positive");
    }
    if !(sample_rate > 0.0) {
        return invalid("sample_rate must be positive");
    }
    let ns = spec.num_sinusoids;
    let mut taps = Vec::with_capacity(spec.tap_delays.len());
    for (index, (&delay, &power)) in spec.tap_delays.iter().zip(&spec.tap_powers).enumerate() {
        let lag = (delay * sample_rate).round() as usize;
        if lag >= duration {
            return invalid(format!(
                "tap {index} lag {lag} does not fit in {duration} samples"
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index as u64);
        let amp = (power / ns as f64).sqrt();
        let mut state: Vec<Complex64> = (0..ns)
            .map(|_| Complex64::from_polar(amp, rng.random_range(0.0..2.0 * PI)))
            .collect();
        let rot: Vec<Complex64> = (0..ns)
            .map(|i| {
                let alpha = PI * (i as f64 + 0.5) / ns as f64;
                let f = spec.doppler_hz * alpha.cos();
                Complex64::from_polar(1.0, 2.0 * PI * f / sample_rate)
            })
            .collect();

        let mut gains = Vec::with_capacity(duration);
        for n in 0..duration {
            gains.push(state.iter().sum());
            for (s, r) in state.iter_mut().zip(&rot) {
                *s *= r;
            }
            if n % 1024 == 1023 {
                for s in state.iter_mut() {
                    *s *= amp / s.norm();
                }
            }
        }
        taps.push(TapSeries { lag, gains });
    }
    Ok(ChannelRealization {
        taps,
        span: duration,
    })
}

/// One transmitter as seen by the receiver.
#[derive(Debug, Clone)]
pub struct UserLink {
    pub samples: Vec<Complex64>,
    pub snr_db: f64,
    pub realization: ChannelRealization,
    /// Delay of this user's stream relative to the desired user, in samples.
    pub sample_offset: usize,
}

impl UserLink {
    /// Transmit sample feeding receive index `m`, zero outside the stream.
    #[inline]
    fn input(&self, m: isize) -> Complex64 {
        let k = m - self.sample_offset as isize;
        if k >= 0 && (k as usize) < self.samples.len() {
            self.samples[k as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

/// Channel output over receive samples `[window_start, window_start + len)`.
///
/// The user's stream is delayed by its sample offset with zeros outside the
/// stream; earlier samples reach the window through the channel memory.
pub fn apply_channel(link: &UserLink, window_start: usize, len: usize) -> Result<Vec<Complex64>> {
    if window_start + len > link.realization.span {
        return invalid(format!(
            "window [{window_start}, {}) exceeds channel span {}",
            window_start + len,
            link.realization.span
        ));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for tap in &link.realization.taps {
        for (i, o) in out.iter_mut().enumerate() {
            let n = window_start + i;
            *o += tap.gains[n] * link.input(n as isize - tap.lag as isize);
        }
    }
    Ok(out)
}

/// Received samples `y = z + Σ_j √γ_j H_j x_j` over `[0, len)`.
///
/// `noise_seed = None` disables the background noise. The desired user must
/// have zero offset.
pub fn compose_received(
    desired: &UserLink,
    interferers: &[UserLink],
    noise_seed: Option<u64>,
    len: usize,
) -> Result<Vec<Complex64>> {
    if desired.sample_offset != 0 {
        return invalid("desired link must have zero sample offset");
    }
    let mut y = complex_noise(noise_seed, len);
    for link in std::iter::once(desired).chain(interferers) {
        let gain = 10f64.powf(link.snr_db / 20.0);
        for (acc, v) in y.iter_mut().zip(apply_channel(link, 0, len)?) {
            *acc += gain * v;
        }
    }
    Ok(y)
}

/// Unit-variance circular complex Gaussian samples (zeros when unseeded).
pub fn complex_noise(seed: Option<u64>, len: usize) -> Vec<Complex64> {
    match seed {
        None => vec![Complex64::new(0.0, 0.0); len],
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            (0..len)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(s * re, s * im)
                })
                .collect()
        }
    }
}
