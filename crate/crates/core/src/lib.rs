//! Linear response of a driven-dissipative optomechanical cavity coupled to
//! two parametrically modulated mechanical oscillators.
//!
//! All frequencies and rates are expressed in units of the cavity damping
//! rate (κ = 1) unless a [`params::SystemParams`] with another κ is used
//! explicitly. The frequency `omega` is measured in the frame rotating at the
//! cavity resonance.
//!
//! Modules:
//! - [`params`]: model parameters and dimensional/dimensionless conversion.
//! - [`linsys`]: drift matrix, numeric susceptibility and eigenvalue stability.
//! - [`response`]: closed-form self-energies, susceptibilities, Green's
//!   functions, cavity photon spectral function (CPSF) and effective damping.
//! - [`stability`]: collective cooperativities, stability bounds, negativity
//!   test and paramp optimisation.
//! - [`opa`]: detuned degenerate parametric amplifier reference model.
//! - [`noise`]: Keldysh function, effective temperature, scattering matrix and
//!   probe reflectivity.
//! - [`cli`]: configuration files, sweeps and table output used by the `cpsf`
//!   binary.

pub mod cli;
pub mod error;
pub mod linsys;
pub mod noise;
pub mod opa;
pub mod params;
pub mod response;
pub mod stability;

pub use error::{CpsfError, Result};
pub use num_complex::Complex64;
pub use params::{DimensionlessParams, PhysicalDrive, SystemParams};

/// Imaginary unit.
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);
