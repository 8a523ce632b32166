use crate::graph::ValidationReport;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(ValidationReport),

    #[error("cannot split boundary vertex {0}")]
    SplitBoundaryVertex(usize),

    #[error("edge {0} is a boundary edge")]
    BoundaryEdge(usize),

    #[error("unsupported degree {degree} at vertex {vertex}")]
    UnsupportedDegree { vertex: usize, degree: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("integrator failure at lambda = {lambda}, reached x = {x}")]
    Integrator { lambda: crate::C64, x: f64 },

    #[error("batch element {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("lambda = {lambda} is too close to a pole (|denominator| = {value:e}, floor = {floor:e})")]
    PoleProximity { lambda: crate::C64, value: f64, floor: f64 },

    #[error("Weyl function cross-check failed at lambda = {lambda}: mismatch {mismatch:e}")]
    WeylMismatch { lambda: crate::C64, mismatch: f64 },

    #[error("cannot certify zeros in [{lo}, {hi}]: {reason}")]
    Certification { lo: f64, hi: f64, reason: String },

    #[error("spectrum pairing failed in window [{lo}, {hi}]: {reason}")]
    Pairing { lo: f64, hi: f64, reason: String },

    #[error("insufficient spectra for {problem}: {reason}")]
    InsufficientSpectra { problem: String, reason: String },

    #[error("degenerate coefficients at every grid point")]
    DegenerateCoefficients,

    #[error("root collision near rho = {rho}; try a detour through {suggestion}")]
    RootCollision { rho: crate::C64, suggestion: crate::C64 },

    #[error("root tracking lost continuity near rho = {rho}")]
    TrackingFailure { rho: crate::C64 },

    #[error("cross-check of the two subtree ratio formulas failed at lambda = {lambda}: {mismatch:e}")]
    CrossCheck { lambda: crate::C64, mismatch: f64 },

    #[error("fit stagnated at residual {residual:e} (tolerance {tol:e}) after {iterations} iterations")]
    FitStagnation {
        residual: f64,
        tol: f64,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("certificate failed: max eigenvalue mismatch {max_mismatch:e} exceeds {tol:e}")]
    Certificate {
        max_mismatch: f64,
        tol: f64,
        mismatches: Vec<(String, usize, f64)>,
    },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error with stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::Batch { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
