use thiserror::Error;

/// Errors raised by the numerics library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid norm N = {0}: must be strictly positive")]
    InvalidNorm(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("b + mu = 0: the s-reparameterization is undefined")]
    UnsupportedReparameterization,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
    #[error("integration diverged at s = {s}: |kappa| = {kappa}")]
    Divergence { s: f64, kappa: f64 },
    #[error("energy N^2 = {energy} does not exceed the barrier 4 sqrt(c) = {barrier}")]
    EnergyBelowBarrier { energy: f64, barrier: f64 },
    #[error("negative delta: omega0^2 = {omega0_sq} exceeds N^2/4 = {quarter_n_sq}")]
    NegativeDelta { omega0_sq: f64, quarter_n_sq: f64 },
    #[error("state is off the constraint manifold: {0}")]
    OffManifold(String),
    #[error("potential with exponent p = {0} has no interior minimum")]
    NoInteriorMinimum(f64),
    #[error("parameters outside the bounded regime (b > 0, -b < mu < 0): {0}")]
    Regime(String),
    #[error("degenerate modal frequency: sigma^2 = {0}")]
    DegenerateFrequency(f64),
    #[error("inconsistent modal weights: S+ = {s_plus}, S- = {s_minus}")]
    Inconsistency { s_plus: f64, s_minus: f64 },
    #[error("energy basis must have dimension >= 2, got {0}")]
    BasisTooSmall(usize),
    #[error("accuracy loss: {0}")]
    Accuracy(String),
    #[error("no solution found after {iterations} iterations (residual {residual:e})")]
    NoSolutionFound { iterations: usize, residual: f64 },
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("operator is not Hermitian: imaginary residual {0:e}")]
    NonHermitian(f64),
    #[error("ambiguous region: state sits at the continuity point with zero momentum")]
    AmbiguousRegion,
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
