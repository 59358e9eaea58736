use alloc::string::String;

/// Errors raised by the scheduling core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain of a formula or model.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates one of its invariants.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    /// A preference list or candidate set was empty where one is required.
    #[error("empty candidate set: {0}")]
    EmptyCandidates(&'static str),

    /// The URLLC rate target cannot be met at the power cap.
    #[error("rate target {target_bps} bit/s unreachable; {max_rate_bps} bit/s at max power")]
    Unreachable { target_bps: f64, max_rate_bps: f64 },

    /// No price schedule satisfies the contract constraints.
    #[error("infeasible contract bundle: {0}")]
    InfeasibleBundle(String),

    /// A frame-grid operation violated occupancy rules.
    #[error("frame grid: {0}")]
    Grid(String),

    /// Exhaustive search found no assignment satisfying the constraints.
    #[error("infeasible instance: {0}")]
    Infeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field,
        reason: reason.into(),
    }
}
