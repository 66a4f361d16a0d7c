//! Exact finite information theory and round elimination at toy scale.

pub mod chain;
pub mod corr;
pub mod dist;
pub mod elim;
pub mod protocol;

use thiserror::Error;

pub use dist::{
    entropy, kahan_sum, pinsker_check, statistical_distance, Distribution, JointTable, PinskerCheck,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("outcome sets differ in size ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("message {index} value {value} does not fit in {bits} bits")]
    MessageTooLong { index: usize, value: u64, bits: u32 },
}
