use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("kernel violates a(-x) = conj(a(x)): max defect {defect:.3e} exceeds {tolerance:.3e}")]
    SymmetryViolation { defect: f64, tolerance: f64 },

    #[error("transform is not real: max imaginary part {imag:.3e} exceeds {tolerance:.3e}")]
    NonRealTransform { imag: f64, tolerance: f64 },

    #[error("potential tends to {offset} at infinity, not 0; pass the force flag to analyse it anyway")]
    OffsetPotential { offset: f64 },

    #[error("cube of side {side} centred at {center:?} does not fit inside the grid box of length {box_length}")]
    CubeOutsideGrid {
        center: Vec<f64>,
        side: f64,
        box_length: f64,
    },

    #[error("coefficient for index {index:?} outside the table (n_max = {n_max})")]
    MissingCoefficient { index: Vec<i64>, n_max: i64 },

    #[error("kernel family {family} has no derivative of order {order} at the origin")]
    NotSmooth { family: String, order: usize },

    #[error("derivative for multi-index {index:?} not available")]
    DerivativesMissing { index: Vec<usize> },

    #[error("kernel mass {mass:.3e} lies outside the convolution padding")]
    WrapAroundRisk { mass: f64 },

    #[error("Gram matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    GramSingular { condition: f64 },

    #[error("dense oracle needs {points} points, cap is {cap}")]
    CapExceeded { points: usize, cap: usize },

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("time step {dt} violates the stability guard; use dt < {suggested}")]
    StabilityGuard { dt: f64, suggested: f64 },

    #[error("trajectory is degenerate: {0}")]
    DegenerateTrajectory(String),

    #[error("second moment of the kernel diverges: outer shell carries {fraction:.1}% of the total")]
    TailDivergence { fraction: f64 },

    #[error("bases are not nested: certified count dropped from {previous} to {current}")]
    NotNested { previous: usize, current: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigensolver failed: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
