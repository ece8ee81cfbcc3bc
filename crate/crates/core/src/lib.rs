//! Numerics for a gain-stabilized Fock-state oscillator and its phase
//! locking to an external drive.
//!
//! Rates are measured in units of the loss rate `gamma_a`. The main entry
//! points are [`steady::steady_model`], [`steady::lambda0_curve`] and
//! [`phasedyn::phase_cumulants`].

pub mod band;
pub mod error;
pub mod fock;
pub mod fockstab;
pub mod liouville;
pub mod observables;
pub mod params;
pub mod phasedyn;
pub mod specfun;
pub mod steady;
pub mod twomode;

pub use error::{Error, Result};
pub use fock::{FockSpace, Operator, C64};
pub use params::ModelParams;
pub use steady::{DensityMatrix, Quality, TruncationPolicy};
