use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unstable configuration: {0}")]
    UnstableConfig(String),

    #[error("removable singularity in {term} could not be resolved: {lower} vs {upper}")]
    SingularityUnresolved {
        term: &'static str,
        lower: f64,
        upper: f64,
    },

    #[error("configuration is not homogeneous (all generation rates and local rates must be equal)")]
    NotHomogeneous,

    #[error("UE index {index} out of range for {num_ues} UEs")]
    UeOutOfRange { index: usize, num_ues: usize },

    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),

    #[error("insufficient data: need at least {needed} packets, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no offloading ratio in [0, 1] yields a stable system")]
    EmptyStableInterval,

    #[error("delivery order violated for UE {ue}: packet {got} delivered, expected {expected}")]
    DeliveryOrder { ue: usize, expected: u64, got: u64 },
}
