use alloc::string::String;

/// Failures raised while validating or running a simulation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("slot counter overflow")]
    ClockOverflow,

    /// A sequence number reached the UE twice. Always a stack bug.
    #[error("packet {seq} delivered to the UE twice")]
    DuplicateDelivery { seq: u64 },

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("distance {0} m is below the 1 m validity floor of the path-loss model")]
    DistanceOutOfRange(f64),

    #[error("oracle instance out of bounds: {0}")]
    OracleBounds(String),
}

impl SimError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
