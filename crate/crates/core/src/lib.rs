//! Dissipative stabilization of finite-energy GKP grid states on a truncated
//! Fock space.
//!
//! * [`fock`]: ladder and quadrature operators, spectral functions, the
//!   stabilizing dissipators and their Heisenberg-picture action.
//! * [`states`], [`wigner`]: codewords, logical states and observables,
//!   fidelities, phase-space maps.
//! * [`lindblad`]: matrix-free generators, adaptive integration, steady states.
//! * [`spectral`]: the reduced one-dimensional operator on the circle, its
//!   spectral gap and the weighted Hardy inequality.
//! * [`experiments`]: stabilization, energy certificates, decay-rate studies
//!   and the reduced-model cross-check.

pub mod error;
pub mod experiments;
pub mod fit;
pub mod fock;
pub mod hermite;
pub mod linalg;
pub mod lindblad;
pub mod output;
pub mod spectral;
pub mod states;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
