use thiserror::Error;

/// Errors raised by the model, the samplers and the simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EfdError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("lambda * range_r = {product} exceeds the saturation limit {limit}")]
    Saturated { product: f64, limit: f64 },

    #[error("cluster size must be at least 1, got {0}")]
    Domain(u64),

    #[error("vehicle list is not sorted by position at index {index}")]
    Unsorted { index: usize },

    #[error("vehicle {0} is not a member of the cluster")]
    NotMember(u32),

    #[error("gap [{tail}, {head}] does not exceed the radio range {range_r}")]
    Geometry { tail: f64, head: f64, range_r: f64 },

    #[error("traversal exceeded the event ceiling of {0} events")]
    EventCeiling(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("intersection {to} is unreachable from {from}")]
    Unreachable { from: usize, to: usize },
}

pub type Result<T, E = EfdError> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> EfdError {
    EfdError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
