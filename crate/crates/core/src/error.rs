use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("event {index} lies outside the {width}x{height} sensor")]
    OutOfBounds { index: usize, width: u32, height: u32 },
    #[error("pixel ({x}, {y}) lies outside the {width}x{height} sensor")]
    PixelOutOfBounds { x: u32, y: u32, width: u32, height: u32 },
    #[error("time window [{t0}, {t1}) is empty or reversed")]
    InvalidWindow { t0: u64, t1: u64 },
    #[error("voxel grid needs at least one temporal bin")]
    InvalidBins,
    #[error("timestamp overflow while transforming event {index}")]
    TimestampOverflow { index: usize },
    #[error("homography is singular or not normalisable")]
    SingularHomography,
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("depth map contains a negative or non-finite value at pixel {index}")]
    NegativeDepth { index: usize },
    #[error("time window [{t0}, {t1}) is empty")]
    EmptyWindow { t0: u64, t1: u64 },
    #[error("sensor geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("image of {width}x{height} is smaller than the {min}x{min} SSIM window")]
    TooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
