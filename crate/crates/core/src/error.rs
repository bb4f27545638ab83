use thiserror::Error;

/// Errors raised by geometric and dynamical computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("not collinear (relative singular value {0:.3e})")]
    NotCollinear(f64),

    #[error("degenerate tuple: {0}")]
    DegenerateTuple(&'static str),

    #[error("spectral failure: {0}")]
    SpectralFailure(String),

    #[error("singular matrix")]
    SingularMatrix,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point not in domain{}", if *.near_boundary { " (near boundary)" } else { "" })]
    NotInDomain { near_boundary: bool },

    #[error("segment misses the domain")]
    SegmentMissesDomain,

    #[error("not a geodesic pair")]
    NotGeodesicPair,

    #[error("busemann divergent (extrapolation spread {0:.3e})")]
    BusemannDivergent(f64),

    #[error("point off the line (residual {0:.3e})")]
    OffLine(f64),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("interior point missing or not interior")]
    InteriorPointMissing,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not an automorphism: generator {label} moves a sample point out of the domain")]
    NotAutomorphism { label: String },

    #[error("element cap exceeded ({0} elements)")]
    ElementCap(usize),

    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid fixture: {0}")]
    Fixture(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),
}

pub type Result<T> = core::result::Result<T, GeomError>;
