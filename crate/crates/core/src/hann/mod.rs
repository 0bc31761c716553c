//! Hann-windowed receiver: periodic Hann window after CP removal, maximum
//! ratio combining over the three bins each subcarrier leaks into, and soft
//! interference cancellation of the residual ICI.

pub mod estimate;
pub mod kernel;
pub mod mrc;
pub mod sic;
pub mod window;

pub use estimate::{
    estimate_cir_hann, estimate_cir_hann_weighted, estimate_disturbance, estimate_frame_hann,
    filtered_pilots, hann_pilot_design, pooled_disturbance, residual_powers, HannCirEstimate,
};
pub use kernel::MrcWeighting;
pub use mrc::{build_mrc, build_mrc_dense, build_mrc_with, genie_bound, mrc_combine, MrcOperator};
pub use sic::{sic_decode, sic_decode_damped, SicOutput, SoftSymbolState, SIC_DAMPING};
pub use window::{extended_demap, hann_receive, hann_window, HannVariant, HannWindow, IciKernel};
