//! Algebra of Gaussian states under linear phase-space constraints.
//!
//! The crate implements, in closed form and with brute-force grid oracles:
//!
//! - the skew-scalar product on complexified phase space, isotropic
//!   constraint planes and their gauge duals ([`phase`]);
//! - complex germs of Gaussian states, their ν-orthonormal frames, and the
//!   splitting map whose Jacobian enters the norm formula ([`germ`]);
//! - the degenerate (constraint-averaged) inner product of Gaussians in
//!   independent closed forms, and the projection onto constraint-satisfying
//!   Gaussians ([`gaussian`]);
//! - classical symplectic flows of quadratic Hamiltonians and the transport
//!   of Gaussian data along them, including phase/branch tracking
//!   ([`dynamics`]);
//! - the stability-to-spectrum construction on the constraint quotient:
//!   normal modes, ground Gaussian, ladder algebra ([`stability`]);
//! - grid quadrature and pseudospectral time stepping used as ground truth
//!   for everything above ([`oracle`]).
//!
//! All types are immutable values and all operations are pure functions;
//! data-parallel loops honor the `parallel` feature (see [`par`]).

pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod germ;
pub mod linalg;
pub mod oracle;
pub mod par;
pub mod phase;
#[cfg(feature = "sample")]
pub mod sample;
pub mod stability;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;
