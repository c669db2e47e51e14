use thiserror::Error;

use crate::trajectory::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("dual norm undefined: mean mode is nonzero ({0:e})")]
    NonzeroMean(f64),
    #[error("tabulated forcing profile queried outside its range at t = {t}")]
    Extrapolation { t: f64 },
    #[error("numerical blow-up at t = {time} ({reason})")]
    BlowUp {
        time: f64,
        reason: String,
        partial: Box<Trajectory>,
    },
    #[error("finite-difference sampling failed at D = {d:?}")]
    Sampling { d: [[f64; 2]; 2] },
    #[error("insufficient data: {0}")]
    Span(String),
    #[error("time samples are not strictly increasing at index {0}")]
    NonMonotoneTime(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trajectory file: {0}")]
    Format(String),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Crc { stored: u32, computed: u32 },
    #[error("unsupported trajectory format version {0}")]
    Version(u32),
    #[error("configuration error: {0}")]
    Config(String),
}
