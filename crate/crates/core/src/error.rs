use thiserror::Error;

use crate::cache::CacheKey;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed stream: {0}")]
    MalformedStream(String),
    #[error("invalid huffman spec: {0}")]
    InvalidSpec(String),
    #[error(
        "index group {group} spans {span} bytes, more than 16-bit relative offsets can address"
    )]
    GroupSpanOverflow { group: usize, span: usize },
    #[error("mcu {mcu}: quantized DC {value} does not fit in 12 signed bits")]
    DcRangeError { mcu: usize, value: i32 },
    #[error("{0} MCUs exceed the 16-bit MCU id space")]
    TooManyMcus(usize),
    #[error("container version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("corrupt container: {0}")]
    CorruptContainer(String),
    #[error("texture block cache is full ({capacity} blocks); raise the cache capacity above the visible working set")]
    CacheFull { capacity: usize },
    #[error("invalid cache state: {0}")]
    InvalidState(String),
    #[error("block {0:?} is not resident during resolve")]
    MissingBlock(CacheKey),
    #[error("decoding {key:?} failed: {source}")]
    Decode {
        key: CacheKey,
        #[source]
        source: Box<Error>,
    },
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scene: {0}")]
    Scene(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by inputs or configuration, false for broken internal
    /// invariants and environment failures.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidState(_) | Error::MissingBlock(_) => false,
            Error::Decode { source, .. } => source.is_validation(),
            Error::Io(e) => io_is_validation(e),
            Error::Image(image::ImageError::IoError(e)) => io_is_validation(e),
            Error::Image(_) => true,
            _ => true,
        }
    }
}

fn io_is_validation(e: &std::io::Error) -> bool {
    use std::io::ErrorKind::*;
    matches!(
        e.kind(),
        NotFound | InvalidData | InvalidInput | UnexpectedEof
    )
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedStream(msg.into())
}

pub(crate) fn unsupported(msg: impl Into<String>) -> Error {
    Error::UnsupportedFormat(msg.into())
}
