use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A convolution integral does not converge for the given source growth.
    #[error("divergent convolution: {0}")]
    DivergentConvolution(String),

    /// The source touches the directions the unperturbed divergence cannot reach.
    #[error("non-invertible sector: {0}")]
    NonInvertibleSector(String),

    #[error("resonant tau: 4 tau^2 = {four_tau_sq} is within {gap:e} of eigenvalue {mu}")]
    ResonantTau { four_tau_sq: f64, mu: f64, gap: f64 },

    #[error("not in kernel: {what} residual {residual:e} exceeds {tol:e}")]
    NotInKernel { what: String, residual: f64, tol: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: String, got: String },

    #[error("metric not positive definite at node {node}")]
    NonPositiveDefinite { node: usize },

    #[error("memory guard: {entries} scalar entries exceeds limit {limit}")]
    MemoryGuard { entries: usize, limit: usize },

    /// A zero-eigenvalue mode was routed to the Green kernel.
    #[error("zero mode in green kernel source: {0}")]
    ZeroModeInGreen(String),

    #[error("trace is not harmonic: laplacian residual {0:e}")]
    NonHarmonicTrace(f64),

    #[error("negative eigenvalue {0} encountered")]
    NegativeEigenvalue(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
