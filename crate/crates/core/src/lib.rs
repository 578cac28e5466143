//! Constellation-shaped, bit-interleaved LDPC-coded APSK over AWGN.
//!
//! The crate covers the transmit chain (LDPC encoding, interleaving, shaping
//! code, APSK mapping), the iterative BICM-ID receiver, coded-modulation
//! information rates with the joint shaping/geometry optimization, and
//! EXIT-chart tools for LDPC degree distribution design.

pub mod channel;
pub mod constellation;
pub mod demod;
pub mod error;
pub mod exitlab;
pub mod infotheory;
pub mod ldpc;
pub mod llr;
pub mod presets;
pub mod shaping;
pub mod txrx;

pub use channel::{convert_snr, transmit_awgn, SnrMode, SnrSpec};
pub use constellation::{
    build_apsk, papr_db, shaped_pmf, Constellation, LabelMap, RingSpec, ShapingStrategy,
};
pub use demod::{demap_symbol, initial_priors, DemapInput, DemapMode, Demapper};
pub use error::{Error, Result};
pub use exitlab::{
    detector_characteristic, optimize_degrees, threshold_search, DetectorModel, DetectorTable,
    ExitCurve,
};
pub use infotheory::{
    information_rate, joint_optimize, p0_grid, required_ebn0, required_esn0, RateMethod,
};
pub use ldpc::{build_eira, DegreeDistribution, LdpcCode};
pub use llr::{max_star, BitStream, LlrBlock, LlrRole, LLR_MAX};
pub use num_complex::Complex64;
pub use shaping::{build_shaping_code, ShapingCode};
pub use txrx::{
    ber_campaign, ber_crossing, overall_rate, receive, transmit, CampaignPoint, Crossing,
    FrameLengths, FrameResult, Schedule, StopRule, SystemConfig,
};
