use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),
    #[error("degenerate part: {0}")]
    DegeneratePart(String),
    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("empty mask at frame {0}")]
    EmptyMask(usize),
    #[error("bad filter configuration: {0}")]
    BadFilterConfig(String),
    #[error("no motion detected above threshold {0}")]
    NoMotionDetected(f64),
    #[error("no contact: closest robot/part distance {distance:.4} m exceeds radius {radius:.4} m")]
    NoContact { distance: f64, radius: f64 },
    #[error("only {found} candidate point pairs near the joint edges, need {needed}")]
    InsufficientPairs { found: usize, needed: usize },
    #[error("face plane never meets the contact trajectory")]
    NoIntersection,
    #[error("optimization diverged: objective {objective:.6} exceeds limit {limit:.6}")]
    OptimizationDiverged { objective: f64, limit: f64 },
    #[error("bad trajectory split: start {start}, end {end}, length {len}")]
    BadSplit { start: usize, end: usize, len: usize },
    #[error("joint {joint} value {value:.4} outside limits [{lo:.4}, {hi:.4}]")]
    JointLimit { joint: usize, value: f64, lo: f64, hi: f64 },
    #[error("ik did not converge: position error {position_err:.2e} m, orientation error {orientation_err:.2e} rad")]
    IkNoConvergence {
        best: Vec<f64>,
        position_err: f64,
        orientation_err: f64,
    },
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("frame ranges do not line up: {0}")]
    FrameMismatch(String),
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command line: 2 input, 3 detection or
    /// estimation, 4 optimization.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch(..)
            | Error::BadFilterConfig(_)
            | Error::BadSplit { .. }
            | Error::JointLimit { .. }
            | Error::BadConfig(_)
            | Error::FrameMismatch(_)
            | Error::Parse { .. }
            | Error::Input(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::DegenerateCloud(_)
            | Error::DegeneratePart(_)
            | Error::EmptyMask(_)
            | Error::NoMotionDetected(_)
            | Error::NoContact { .. }
            | Error::InsufficientPairs { .. }
            | Error::NoIntersection => 3,
            Error::OptimizationDiverged { .. } | Error::IkNoConvergence { .. } => 4,
        }
    }
}
