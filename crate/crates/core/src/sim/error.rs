use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("topology sampled with zero users")]
    EmptyTopology,
    #[error("user {user} is associated with an edge server but receives zero edge rate")]
    InconsistentAssociation { user: usize },
    #[error("user {user} falls back to the cloud but the cloud rate is zero")]
    ZeroCloudRate { user: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}
