use std::path::PathBuf;

/// Errors raised while reading or writing PGM files.
#[derive(Debug, thiserror::Error)]
pub enum PgmError {
    #[error("unrecognized magic number {0:?} (expected P2 or P5)")]
    BadMagic(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),

    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("sample value {0} exceeds maxval 255")]
    SampleOutOfRange(u32),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("image too small: {0}")]
    ImageTooSmall(String),

    #[error("value outside the domain of {func}: {value}")]
    Domain { func: &'static str, value: f64 },

    #[error("offset ({dy}, {dx}) is not covered by the distribution table")]
    UnknownOffset { dy: i32, dx: i32 },

    #[error("insufficient samples for goodness-of-fit: expected count per bin {expected:.2} < 5 ({samples} samples, {bins} bins)")]
    InsufficientSamples {
        samples: usize,
        bins: usize,
        expected: f64,
    },

    #[error("non-finite weight {weight} at pixel ({row}, {col}), offset ({dy}, {dx})")]
    NonFiniteWeight {
        weight: f64,
        row: usize,
        col: usize,
        dy: i32,
        dx: i32,
    },

    #[error(transparent)]
    Pgm(#[from] PgmError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
