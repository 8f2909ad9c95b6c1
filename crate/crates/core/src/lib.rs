//! Decides whether a small localized perturbation of the free 1D Schrödinger
//! operator produces a bound state emerging from the spectral threshold, and
//! if so computes the eigenvalue and eigenfunction.
//!
//! The eigenvalue problem on the whole line is reduced to a compact interval
//! `Q` carrying the perturbation: with the frequency parameter `k` (where
//! `lambda = -k^2`), existence is governed by a scalar pole equation
//! `k = (eps/2) <S_eps(k) L[1]>` solved on a Nyström grid. A pole moving into
//! the half-plane `Re k > 0` is a genuine `L_2` eigenfunction; `Re k <= 0` is
//! a resonance and no eigenvalue emerges.
//!
//! Modules follow the pipeline:
//! - [`grid`]: composite-Simpson quadrature on `Q`, sampled complex functions;
//! - [`perturbation`]: the localized operator as a sum of multiplicative,
//!   derivative, rank-one and Volterra terms, plus its grid matrices;
//! - [`kernel`]: the regularized resolvent kernel and kernel-sum probes;
//! - [`pole`]: the pole equation, asymptotic coefficients, existence decision,
//!   eigenpair and resolvent application;
//! - [`oracle`]: an independent finite-difference spectral cross-check on a
//!   truncated line;
//! - [`linalg`]: dense and banded complex LU used by the solvers.

pub mod error;
pub mod extrapolate;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod perturbation;
pub mod pole;
pub mod probe;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, Interval};
pub use perturbation::{Coefficient, OpMatrices, PerturbationOp, PerturbationTerm, Realness};
pub use pole::{
    AsymptoticCoeffs, Decision, EigenPair, EngineParams, PoleEngine, PoleResult, Samples, Verdict,
};
pub use probe::Probe;

/// Complex scalar used throughout.
pub type Complex = num_complex::Complex<f64>;
