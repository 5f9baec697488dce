//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (dimension mismatch,
    /// asymmetric matrix, non-isotropic basis, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A set of vectors fails the germ axioms (isotropy or positivity).
    #[error("invalid germ: {0}")]
    InvalidGerm(String),

    /// The constraint plane does not inject into the coordinate plane;
    /// the projected state would be supported on a delta function.
    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),

    /// Two independent closed-form routes disagree beyond tolerance.
    /// Reported, never silently averaged.
    #[error("route disagreement: {detail} (|{a} - {b}| beyond tolerance)")]
    RouteDisagreement { a: f64, b: f64, detail: String },

    /// Gaussian integral does not converge for this pair.
    #[error("non-integrable pair: {0}")]
    NotIntegrable(String),

    /// Quadrature box too small: integrand has not decayed at the boundary.
    #[error("quadrature box too small: {0}")]
    BoxTooSmall(String),

    /// Grid cannot resolve the state (spectral tail or boundary mass).
    #[error("grid resolution: {0}")]
    GridResolution(String),

    /// The classical flow does not preserve the constraint plane.
    #[error("equivalence not preserved: {0}")]
    EquivalenceNotPreserved(String),

    /// Hamiltonian is incompatible with the constraints.
    #[error("incompatible hamiltonian: {0}")]
    Incompatible(String),

    /// Numerical degeneracy that valid inputs should not produce.
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    /// Violated internal invariant.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
