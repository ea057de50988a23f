use thiserror::Error;

pub type Result<T> = std::result::Result<T, EdError>;

#[derive(Debug, Error)]
pub enum EdError {
    #[error("grid needs at least 8 points per dimension, got {0}")]
    TooFewPoints(usize),

    #[error("grid extent must be positive, got {0}")]
    NonPositiveExtent(f64),

    #[error("grid dimension must be 1 or 2, got {0}")]
    BadDims(usize),

    #[error("field length {found} does not match grid size {expected}")]
    FieldSizeMismatch { expected: usize, found: usize },

    #[error("invalid model parameters: {0}")]
    BadParams(String),

    #[error("quantum-class consistency broken: xi = {xi} but hbar^2/8 = {expected}")]
    XiHbarMismatch { xi: f64, expected: f64 },

    #[error("scenario under-resolved: sigma = {sigma} but grid spacing = {spacing} (need sigma >= 3*spacing)")]
    UnderResolved { sigma: f64, spacing: f64 },

    #[error("stepper got a state of the wrong dynamical class: expected {expected}, got {got}")]
    WrongClass { expected: &'static str, got: &'static str },

    #[error("caustic imminent at t = {time}: max |dv/dx|*dt = {compression} on the bulk support")]
    CausticDetected { time: f64, compression: f64 },

    #[error("density support no longer resolved by the grid at t = {time} (spectral tail fraction {tail_fraction:.2e})")]
    SupportUnderResolved { time: f64, tail_fraction: f64 },

    #[error("Lagrange multiplier must be positive, got {0}")]
    NonPositiveMultiplier(f64),

    #[error("constraint moments infeasible on the lattice: {0}")]
    InfeasibleConstraints(String),

    #[error("dual Newton solve did not converge after {iters} iterations (residual {residual})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("ensemble must contain at least one walker")]
    EmptyEnsemble,

    #[error("field snapshot time {field_time} does not match ensemble time {ensemble_time}")]
    TimeMismatch { field_time: f64, ensemble_time: f64 },

    #[error("negative diffusion scale epsilon = {0}")]
    NegativeEpsilon(f64),

    #[error("walker substep count must be in 1..=16, got {0}")]
    BadSubstepCount(usize),

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed artifact {path}: {reason}")]
    MalformedArtifact { path: String, reason: String },
}
