use num_complex::Complex;
use thiserror::Error;

/// Errors surfaced by grid construction, the pole engine and the oracle.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("interval endpoints must be finite, got [{a}, {b}]")]
    NonFiniteInterval { a: f64, b: f64 },
    #[error("interval must satisfy a < b, got [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },
    #[error("a quadrature grid needs at least one panel")]
    NoPanels,
    #[error("sample vector has length {got}, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("a perturbation needs at least one term")]
    EmptyPerturbation,
    #[error("phase factor must have unit modulus, got |phase| = {modulus}")]
    NonUnitPhase { modulus: f64 },
    #[error("non-finite sample at x = {x}")]
    NonFiniteSample { x: f64 },
    #[error("linear system numerically singular (condition estimate {cond:.3e})")]
    NearSingular { cond: f64 },
    #[error(
        "root search stalled after {iterations} iterations (best |F| = {residual:.3e} at k = {k})"
    )]
    NoConvergence {
        k: Complex<f64>,
        residual: f64,
        iterations: usize,
    },
    #[error("kernel probe requires k != 0; use the regularized probe at the threshold")]
    ZeroFrequency,
    #[error("resolvent evaluated too close to its pole (|2F| = {denom:.3e})")]
    AtPole { denom: f64 },
    #[error("eigenfunction requires Re k > 0, got k = {k}")]
    NoDecay { k: Complex<f64> },
    #[error("certified-real operator produced k = {k} with |Im k| above {limit:.3e}")]
    RealityViolation { k: Complex<f64>, limit: f64 },
    #[error("perturbation interval [{a}, {b}] must lie strictly inside (-{half_width}, {half_width})")]
    DomainTooSmall { a: f64, b: f64, half_width: f64 },
    #[error("oracle step {step} too coarse for an interval of length {len}")]
    StepTooCoarse { step: f64, len: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
