use thiserror::Error;

/// Errors produced by every analysis in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("coincident characteristic angles for indices ({i}, {j}): gap {gap:e}")]
    CoincidentAngles { i: usize, j: usize, gap: f64 },

    #[error("coincident characteristic speeds for indices ({i}, {j}): gap {gap:e}")]
    CoincidentSpeeds { i: usize, j: usize, gap: f64 },

    #[error("infinite characteristic slope for index {i} (|cos phi| = {cos:e})")]
    InfiniteSlope { i: usize, cos: f64 },

    #[error("pencil is degenerate (identically zero) at this state")]
    DegeneratePencil,

    #[error("ill-conditioned pencil interpolation (condition number {0:e})")]
    IllConditioned(f64),

    #[error("point ({x}, {y}) lies outside the field domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("no characteristic from the initial line reaches ({x}, {y})")]
    NoCharacteristic { x: f64, y: f64 },

    #[error("beyond gradient catastrophe: {roots} characteristics meet near ({x}, {y})")]
    GradientCatastrophe { x: f64, y: f64, roots: usize },

    #[error("root finding did not converge: {0}")]
    NoConvergence(String),

    #[error("not rich on region: staircase orders disagree by {discrepancy:e}")]
    NotRichOnRegion { discrepancy: f64 },

    #[error("degenerate fibre: {0}")]
    Degenerate(String),

    #[error("strict hyperbolicity lost: {0}")]
    NotStrict(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
