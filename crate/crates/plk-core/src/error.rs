//! Error type shared by every kernel in the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlkError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("point behind camera (z = {z})")]
    BehindCamera { z: f64 },

    #[error("disparity outside [0, 1) at element {index}: {value}")]
    InvalidDisparity { index: usize, value: f64 },

    #[error("nonpositive or non-finite depth at element {index}: {value}")]
    InvalidDepth { index: usize, value: f64 },

    #[error("probability outside (0, 1) at element {index}: {value}")]
    InvalidProbability { index: usize, value: f64 },

    #[error("label not in {{0, 1}} at element {index}: {value}")]
    InvalidLabel { index: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ground-truth mask is empty")]
    EmptyGroundTruth,

    #[error("oracle function returned a non-finite value at element {index}")]
    OracleFailure { index: usize },

    #[error("fit diverged (non-finite loss) at iteration {iteration}")]
    DivergedFit { iteration: usize },
}

pub type Result<T> = std::result::Result<T, PlkError>;
