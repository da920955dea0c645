//! Sharp constants of the 2π-periodic magnetic Sobolev embedding
//!
//! ```text
//! mu_q(alpha) = min_u ||u' + i alpha u||_2 / ||u||_q,   q > 2,
//! ```
//!
//! computed by the phase-plane method: the constant function is optimal iff
//! `(q + 2) alpha^2 <= 1`; beyond that threshold the minimizer's modulus runs
//! along an oval selected by the flux equation `M_q(gamma) = 2 pi |alpha|`.

// `!(x < tol)` is used on purpose so that NaN fails a check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
mod gauss;
pub mod lemma_verify;
pub mod oracle;
pub mod period_integrals;
pub mod profile;
pub mod reconstruct;
pub mod solver;
mod spectral;

pub use error::{Error, Result};
pub use period_integrals::QuadratureConfig;
pub use profile::{OvalShape, ProblemParams};
pub use solver::{sharp_constant, OvalSolution, Regime, SharpConstant};
