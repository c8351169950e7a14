use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must be at least 2x2, got {width}x{height}")]
    GridTooSmall { width: usize, height: usize },

    #[error("expected {expected} values for a {width}x{height} grid, got {actual}")]
    LengthMismatch {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },

    #[error("dimension mismatch: {what} is {}x{}, expected {}x{}", found.0, found.1, expected.0, expected.1)]
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite value at pixel ({x}, {y})")]
    NonFinite { x: usize, y: usize },

    #[error("non-positive value {value} at pixel ({x}, {y}); shift the field before use")]
    NonPositive { x: usize, y: usize, value: f64 },

    #[error("mask is not binary: label {label} at pixel ({x}, {y})")]
    NonBinaryMask { x: usize, y: usize, label: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step {tau} exceeds the explicit stability limit {limit}")]
    StabilityViolation { tau: f64, limit: f64 },

    #[error("zero pivot in line {line} at row {row} (|pivot| = {pivot:e})")]
    ZeroPivot { line: usize, row: usize, pivot: f64 },

    #[error("linear solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image header in {path}: {reason}")]
    CorruptHeader { path: PathBuf, reason: String },
}
