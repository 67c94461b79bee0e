use thiserror::Error;

/// Errors raised by instance construction, analytics, search and the batch harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("edge mask {mask} references edges beyond the instance's {edges} edges")]
    MaskOutOfRange { mask: String, edges: usize },

    #[error("graph has {0} edges; edge masks support at most 128")]
    TooManyEdges(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eta estimate needs E0 > E_gs (got E0 = {e0}, E_gs = {e_gs})")]
    EtaUndefined { e0: f64, e_gs: f64 },

    #[error("every retained coupling is zero; estimated gamma is undefined")]
    NoCouplings,

    #[error("baseline probability is zero; relative improvement is undefined")]
    ZeroBaseline,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
