use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("mode index {index} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("monomial has {len} ladder factors, enumeration cap is {cap}")]
    TooManyFactors { len: usize, cap: usize },

    #[error("degenerate non-Gaussian state: normalization {0:e} is below threshold")]
    Degenerate(f64),

    #[error(
        "infeasible: minimum added energy {min_energy} exceeds budget {epsilon} (m_max = {m_max})"
    )]
    Infeasible {
        min_energy: f64,
        epsilon: f64,
        m_max: u64,
    },

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("truncation did not converge below the cap of {cap} levels per mode")]
    TruncationCap { cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
