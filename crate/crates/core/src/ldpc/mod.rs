//! eIRA LDPC codes: construction from degree distributions, systematic
//! encoding, alist interchange and flooding sum-product decoding.

mod alist;
mod code;
mod decoder;
mod degree;

pub use alist::{load_external, parse_alist, to_alist};
pub use code::{build_eira, LdpcCode, Structure};
pub use decoder::{decode_iteration, syndrome_ok, DecoderState, Tanner};
pub use degree::DegreeDistribution;
