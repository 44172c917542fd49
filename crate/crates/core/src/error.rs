use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("memory guard: {what} needs {required_bytes} bytes but the cap is {cap_bytes} bytes")]
    MemoryGuard {
        what: String,
        required_bytes: u64,
        cap_bytes: u64,
    },
    #[error("search space of {size:.3e} configurations exceeds the limit of {limit:.3e}")]
    SearchSpace { size: f64, limit: f64 },
    #[error("no received power: {0}")]
    NoPower(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Memory,
    Runtime,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Geometry(_) | Error::DegenerateGeometry(_) => ErrorClass::Config,
            Error::MemoryGuard { .. } | Error::SearchSpace { .. } => ErrorClass::Memory,
            _ => ErrorClass::Runtime,
        }
    }
}
