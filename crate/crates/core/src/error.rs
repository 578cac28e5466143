use thiserror::Error;

/// Errors raised by the shaping toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid constellation: {0}")]
    Constellation(String),

    #[error("invalid label table (line {line}): {msg}")]
    LabelTable { line: usize, msg: String },

    #[error("invalid shaping strategy: {0}")]
    Strategy(String),

    #[error("invalid shaping code parameters: {0}")]
    ShapingCode(String),

    #[error("invalid degree distribution: {0}")]
    Degrees(String),

    #[error("LDPC construction failed: {0}")]
    Construction(String),

    #[error("malformed alist (line {line}): {msg}")]
    Alist { line: usize, msg: String },

    #[error("code has no systematic encoder: {0}")]
    NoEncoder(String),

    #[error("inconsistent system configuration: {0}")]
    Config(String),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("search interval [{lo} dB, {hi} dB] does not bracket the target")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("quadrature and Monte Carlo disagree by {diff:.4} bpcu at Es/N0 = {esn0_db} dB")]
    QuadratureMismatch { esn0_db: f64, diff: f64 },

    #[error("too few samples: confidence width {width:.4} at I_A = {ia}")]
    InsufficientSamples { ia: f64, width: f64 },

    #[error("EXIT tunnel does not open below {hi_db} dB")]
    TunnelClosed { hi_db: f64 },

    #[error("no feasible degree distribution in the search space")]
    NoFeasibleDistribution,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
