use thiserror::Error;

/// Failures while parsing a binary PGM file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PgmError {
    #[error("bad magic: expected \"P5\"")]
    BadMagic,
    #[error("malformed header field `{0}`")]
    BadField(&'static str),
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("image dimensions must be non-zero")]
    EmptyImage,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("block ({x},{y},{size}) lies outside the {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        size: usize,
        width: usize,
        height: usize,
    },
    #[error("a {size}x{size} domain does not fit inside a {width}x{height} image")]
    ImageTooSmall { size: usize, width: usize, height: usize },
    #[error("unsupported range block size {0} (expected 2, 4, 8 or 16)")]
    UnsupportedRangeSize(usize),
    #[error("pixel buffer holds {found} values, {width}x{height} needs {expected}")]
    BufferSize {
        width: usize,
        height: usize,
        expected: usize,
        found: usize,
    },
}

/// Failures while writing or reading a `.mns` stream.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("bad magic: not an MNS1 stream")]
    BadMagic,
    #[error("truncated stream")]
    Truncated,
    #[error("unknown header flags {0:#04x}")]
    BadFlags(u8),
    #[error("invalid header dimensions {orig_w}x{orig_h} padded to {padded_w}x{padded_h}")]
    BadDimensions {
        orig_w: usize,
        orig_h: usize,
        padded_w: usize,
        padded_h: usize,
    },
    #[error("leaf depth sequence does not fill root at ({x},{y}): found level {found} under level {parent}")]
    DepthMismatch { x: usize, y: usize, found: u8, parent: u8 },
    #[error("non-canonical negative-zero delta")]
    NegativeZeroDelta,
    #[error("{0} trailing bytes after the last leaf")]
    TrailingData(usize),
    #[error("non-zero padding bits after the last leaf")]
    NonZeroPadding,
    #[error("{0} codes cannot be serialized")]
    UnsupportedMode(&'static str),
    #[error("record at ({x},{y}) violates the stream layout: {reason}")]
    InvalidRecord { x: usize, y: usize, reason: &'static str },
    #[error("dimension {0} does not fit in 16 bits")]
    DimensionOverflow(usize),
}

/// Crate-wide error, mostly used by callers that chain several stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("images differ in size: {a_w}x{a_h} vs {b_w}x{b_h}")]
    DimensionMismatch {
        a_w: usize,
        a_h: usize,
        b_w: usize,
        b_h: usize,
    },
    #[error("sweep point {label} failed: {source}")]
    Sweep {
        label: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
