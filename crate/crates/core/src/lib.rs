//! Link-level simulation of CP-OFDM reception with non-redundant Hann
//! receiver windowing.
//!
//! The transmit side is plain CP-OFDM. On the receive side the crate offers
//! the rectangular and tapered-CP windowed receivers as references, and the
//! Hann-windowed receiver: tridiagonal ICI model, extended-band channel and
//! disturbance estimation, equalized maximal-ratio combining over the three
//! Hann-coupled bins, and soft parallel interference cancellation.
//!
//! Module map:
//! - [`numerics`]: DFT, banded/circulant application, support-restricted LS.
//! - [`waveform`]: numerology, QPSK, CP-OFDM modulation, frame building.
//! - [`channel`]: TDL fading, channel application, multi-user composition.
//! - [`rx_baseline`]: windowed CP removal, LS channel estimate, MMSE.
//! - [`hann`]: Hann window, ICI kernel, estimation, MRC, SIC, genie bound.
//! - [`metrics`]: BER, PSD, SINR and the operation-count audit.
//! - [`scenario`]: config-driven Monte Carlo harness and CSV emitters.

pub mod channel;
pub mod error;
pub mod hann;
pub mod metrics;
pub mod numerics;
pub mod rx_baseline;
pub mod scalar;
pub mod scenario;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Guard used on every division in the receive chain.
pub const EPS: f64 = 1e-12;
