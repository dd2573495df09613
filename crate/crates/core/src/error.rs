use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("unsupported image format: {0}")]
    Format(String),

    #[error("image too small: {width}x{height} has fewer than 2 pixels")]
    TooSmall { width: usize, height: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot assemble region {region}: {reason}")]
    Assembly { region: u32, reason: String },

    #[error("image dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize, usize), (usize, usize, usize)),

    #[error("malformed SVG: {0}")]
    Svg(String),
}
