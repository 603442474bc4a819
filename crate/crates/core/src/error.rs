use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A backend was requested on a grid it cannot operate on.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite sample {value} at index ({i}, {j}, {k})")]
    NonFinite {
        i: usize,
        j: usize,
        k: usize,
        value: f64,
    },

    #[error("snapshot header error: {0}")]
    SnapshotHeader(String),

    #[error("snapshot length mismatch: expected {expected} bytes of samples, found {found}")]
    SnapshotLength { expected: usize, found: usize },

    #[error("CFL violation at step {step}: dt*sup|u|/h = {cfl:.4} > 0.5")]
    Cfl { step: usize, cfl: f64 },

    #[error("non-finite velocity after step {step}")]
    Blowup { step: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}
