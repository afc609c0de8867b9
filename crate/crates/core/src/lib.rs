//! # bibee
//!
//! Electrostatic solvation free energies for point charges inside a dielectric
//! cavity embedded in a second dielectric.
//!
//! The crate provides
//!
//! - the exact Kirkwood spherical-harmonic series for a spherical cavity,
//! - the BIBEE family of boundary-integral approximations (CFA, P, a generic
//!   eigenvalue-scaled variant and the monopole-corrected hybrid M),
//! - Generalized Born energies from the Still equation and the GBε model,
//! - a dense boundary-element solver on triangulated surfaces that serves as
//!   a numerical reference for arbitrary cavities,
//! - a seeded experiment harness comparing all of the above.
//!
//! Lengths are in ångström, charges in elementary charges and energies in
//! kcal/mol. Formulas are evaluated in Gaussian units and converted once with
//! [`COULOMB_CONSTANT`] when an energy is assembled.

pub mod bem;
mod error;
pub mod experiments;
pub mod harmonics;
pub mod model;
pub mod pqr;
pub mod sphere;

pub use error::{Error, Result};
pub use model::{
    Charge, ChargeDistribution, DielectricPair, EnergyResult, Method, SphereModel, COULOMB_CONSTANT,
};

/// A point in 3D space (Å)
pub type Vector3 = nalgebra::Vector3<f64>;
