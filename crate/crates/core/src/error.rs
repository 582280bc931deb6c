use thiserror::Error;

/// Broad failure category. The CLI maps these to exit codes (usage = 1,
/// data = 2, numeric = 3) and the C ABI maps them to status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration.
    Usage,
    /// Input data violates the format or a pipeline precondition.
    Data,
    /// A numerical procedure failed (degenerate geometry, divergence).
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("session header (line {line}): {reason}")]
    Header { line: usize, reason: String },

    #[error("session contains no usable frames")]
    EmptySession,

    #[error("no extrinsics for sensor {0:?}")]
    UnknownSensor(String),

    #[error("extrinsics for sensor {0:?}: rotation is not a proper orthonormal matrix")]
    BadExtrinsics(String),

    #[error("bearing undefined: points are {0:.3} mm apart horizontally (need > 1 mm)")]
    CoincidentPoints(f64),

    #[error("subject {0:?} has no detection in this frame")]
    UnknownSubject(String),

    #[error("frame unusable: {got} points in region of interest, need at least {need}")]
    TooFewRoiPoints { got: usize, need: usize },

    #[error("head/body split left the {0} cloud empty")]
    EmptySplit(&'static str),

    #[error("head cloud too small for position correction: {got} points, need {need}")]
    TooFewHeadPoints { got: usize, need: usize },

    #[error("ellipse fit needs at least {need} points, got {got}")]
    TooFewEllipsePoints { got: usize, need: usize },

    #[error("ellipse fit degenerate: {0}")]
    DegenerateEllipse(&'static str),

    #[error("pca needs at least one point")]
    EmptyPca,

    #[error("feature schema mismatch: model was trained with {model}, data carries {data}")]
    SchemaMismatch { model: String, data: String },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("training diverged with seed {seed}: {reason}")]
    TrainingDiverged { seed: u64, reason: String },

    #[error(
        "attention regions overlap: references {a:.1} deg and {b:.1} deg \
         with half-width {half_width:.1} deg"
    )]
    OverlappingRegions { a: f64, b: f64, half_width: f64 },

    #[error("need at least {need} frames, got {got}")]
    TooFewFrames { got: usize, need: usize },

    #[error("group too small for a t-test: n = {0}, need at least 2")]
    GroupTooSmall(usize),

    #[error("pooled variance is zero; t statistic and effect size are undefined")]
    ZeroVariance,

    #[error("reference geometry degenerate: {0}")]
    DegenerateGeometry(String),

    #[error("model bundle: {0}")]
    Bundle(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Config(_) => ErrorKind::Usage,
            DegenerateEllipse(_) | TrainingDiverged { .. } | ZeroVariance => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
