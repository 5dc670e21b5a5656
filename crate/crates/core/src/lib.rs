//! Photon-number statistics and charging precision of bosonic quantum batteries.
//!
//! The figure of merit throughout is the signal-to-noise ratio
//! `Γ = δN / ΔN`, where `δN` is the mean photon number stored on top of the
//! passive thermal state and `ΔN` the standard deviation of the total photon
//! number `N = Σᵢ aᵢ†aᵢ`.
//!
//! * [`gaussian`]: covariance-matrix representation of N-mode Gaussian states,
//!   symplectic building blocks, exact photon moments, `Γ` and `g²(0)`.
//! * [`gaussian_opt`]: exact constrained optimum of `Γ` over single-mode
//!   Gaussian states and its high-squeezing closed form.
//! * [`wick`]: exact expectation values of ladder-operator monomials on
//!   photon-added/subtracted Gaussian states by summing perfect matchings
//!   with loops.
//! * [`analytic`]: closed forms for photon-subtracted squeezed thermal
//!   ("kitten") states and the minimal energy cost of photon addition.
//! * [`fock`]: brute-force truncated Fock-space reference used to validate
//!   everything else.
//! * [`variational`]: multi-start simplex search over the Gaussian block of
//!   photon-added states, single and multimode.
//!
//! Units: `ħ = k_B = ω = 1`; all energies are photon numbers.

pub mod analytic;
pub mod error;
pub mod figures;
pub mod fock;
pub mod gaussian;
pub mod gaussian_opt;
pub mod nelder_mead;
pub mod roots;
pub mod sweep;
pub mod variational;
pub mod wick;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, MomentResult, NuConvention, Snr, ThermalSpec};
pub use sweep::SweepTable;

/// Complex scalar used for ladder-operator expectation values.
pub type C64 = num_complex::Complex64;
