use crate::imagery::ColorSpace;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed image header: {0}")]
    MalformedHeader(String),

    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),

    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },

    #[error("operation requires {expected:?} input, found {found:?}")]
    WrongColorSpace {
        expected: ColorSpace,
        found: ColorSpace,
    },

    #[error("no conversion from {input:?} input to a {pattern:?} pattern")]
    SpaceMismatch {
        input: ColorSpace,
        pattern: ColorSpace,
    },

    #[error("invalid smoothing config: {0}")]
    InvalidSmoothing(String),

    #[error("kernel size {kernel_size} exceeds image dimensions {width}x{height}")]
    KernelLargerThanImage {
        kernel_size: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed pattern file: {0}")]
    PatternFormat(String),

    #[error("unsupported pattern file version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("pattern file checksum mismatch")]
    ChecksumMismatch,

    #[error("keypoint {index} at ({x}, {y}) violates the required margin of {margin} px")]
    MarginViolation {
        index: usize,
        x: i64,
        y: i64,
        margin: u32,
    },

    #[error("descriptor length mismatch: {a} vs {b} bits")]
    LengthMismatch { a: usize, b: usize },

    #[error("cannot match against an empty target set")]
    EmptyTargets,

    #[error("malformed descriptor dump: {0}")]
    DescriptorFormat(String),

    #[error("malformed homography file: {0}")]
    HomographyFormat(String),

    #[error("homography is singular (scale-normalized determinant below 1e-9)")]
    SingularHomography,

    #[error("homography maps point ({x}, {y}) to infinity")]
    PointAtInfinity { x: i64, y: i64 },

    #[error("image {width}x{height} is too small (minimum 7x7)")]
    ImageTooSmall { width: usize, height: usize },

    #[error("only {survived} keypoints survive margin filtering (need at least 2)")]
    TooFewKeypoints { survived: usize },

    #[error("malformed manifest line {line}: {msg}")]
    ManifestFormat { line: usize, msg: String },

    #[error("malformed keypoint file line {line}: {msg}")]
    KeypointFormat { line: usize, msg: String },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
