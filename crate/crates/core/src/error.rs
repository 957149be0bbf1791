use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} out of range: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("cutoff mismatch: n_max {left} vs {right}")]
    CutoffMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("squeeze operator deviates from unitarity by {deviation:e}")]
    Truncation { deviation: f64 },

    #[error("not a density operator: {0}")]
    NotPhysical(String),

    #[error("herald impossible: success probability {probability:e}")]
    HeraldImpossible { probability: f64 },

    #[error("empty homodyne dataset")]
    EmptyDataset,

    #[error("under-determined reconstruction: {samples} samples for {parameters} free parameters")]
    UnderDetermined { samples: usize, parameters: usize },

    #[error("bootstrap: {failed} of {total} resamples failed")]
    BootstrapFailures { failed: usize, total: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn ensure_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}
