use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lattice size must be at least 2, got {0}")]
    LatticeTooSmall(i32),
    #[error("time extent must be at least 1, got {0}")]
    TimeExtentTooSmall(i32),
    #[error("boundary spec must have exactly two opposite rough faces: {0}")]
    InvalidBoundary(String),
    #[error("{0} is not a star site of this geometry")]
    NotAStarSite(String),
    #[error("{0} is not a plaquette site of this geometry")]
    NotAPlaquetteSite(String),
    #[error("{0} is not a constraint cell of this geometry")]
    NotAConstraintCell(String),
    #[error("operation needs a cubic geometry")]
    UnsupportedGeometry,
    #[error("qubits per site must be positive")]
    ZeroQubitsPerSite,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("chunk scale Q must be at least 6, got {0}")]
    ChunkScaleTooSmall(u64),
    #[error("decomposition overflow: {0}")]
    DecompositionOverflow(String),
    #[error("time {got} does not follow {last}")]
    OutOfOrderTime { last: i64, got: i64 },
    #[error("defect born at {birth} delivered at time {time}")]
    BirthTimeMismatch { birth: i64, time: i64 },
    #[error("unpaired string endpoints at {0} constraint cells")]
    OpenStrings(usize),
    #[error("combined syndrome of error and correction is not empty ({0} defects)")]
    UnneutralisedSyndrome(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("internal fault: {0}")]
    Internal(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
