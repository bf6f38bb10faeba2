use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("file size {file_size} is not a multiple of the frame size {frame_size}")]
    SizeMismatch { file_size: u64, frame_size: u64 },

    #[error("sample value {value} exceeds the {bit_depth}-bit range")]
    SampleRange { value: u32, bit_depth: u8 },

    #[error("unsupported bit depth {0}")]
    UnsupportedBitDepth(u8),

    #[error("unsupported chroma format `{0}`")]
    UnsupportedChromaFormat(String),

    #[error("invalid dimensions {width}x{height}: {reason}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        reason: &'static str,
    },

    #[error("unsupported transform block size {0}")]
    UnsupportedBlockSize(usize),

    #[error("block origin ({x0}, {y0}) is outside the {n}x{n} grid of a {width}x{height} plane")]
    OutOfGrid {
        x0: usize,
        y0: usize,
        n: usize,
        width: usize,
        height: usize,
    },

    #[error("QP {0} is outside [0, 51]")]
    InvalidQp(i64),

    #[error("quantisation step {0} must be positive and finite")]
    InvalidQstep(f64),

    #[error("normalised distance {0} is outside [0, 1]")]
    InvalidDistance(f64),

    #[error("coefficient position ({x}, {y}) is outside a {n}x{n} block")]
    PositionOutOfBlock { x: usize, y: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("plane of {width}x{height} is smaller than the {window}x{window} SSIM window")]
    PlaneTooSmall { width: usize, height: usize, window: usize },

    #[error("truncated stream")]
    Truncated,

    #[error("malformed last significant position {0}")]
    MalformedLastPosition(usize),

    #[error("malformed stream: {0}")]
    Malformed(&'static str),

    #[error("bad bitstream header: {0}")]
    BadHeader(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("report has no rows")]
    EmptyReport,

    #[error("codec integrity failure: {0}")]
    CodecIntegrity(String),
}
