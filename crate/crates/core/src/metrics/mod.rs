//! Measurement instruments: bit-error counting with confidence intervals,
//! per-subcarrier PSD, post-processing SINR and the operation-count audit.

pub mod audit;
pub mod ber;
pub mod psd;
pub mod sinr;

pub use audit::{audit_opcounts, AuditParams, AuditRow, OpCountReport};
pub use ber::{count_errors, count_llr_errors, q_function, qpsk_ber, wilson_ci, ErrorCount};
pub use psd::{single_subcarrier_stream, subcarrier_psd, PsdCurve, PsdWindow};
pub use sinr::{measure_sinr, SinrAccumulator, SinrMeasurement, MIN_SINR_SAMPLES, SINR_CAP_DB};
