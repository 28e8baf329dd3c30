//! Pseudo-spectral solvers for periodic two-dimensional quasi-geostrophic /
//! Navier-Stokes flow and three-dimensional continuously stratified
//! quasi-geostrophic flow, advanced in time with the mean-reverting
//! SAV-BDF2 scheme.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] and [`field`] describe periodic grids and Fourier coefficient
//!   arrays,
//! * [`spectral`] holds the collocation primitives (transforms, derivatives,
//!   elliptic and Helmholtz inversion, Jacobian, norms),
//! * [`models`] defines the model equations, forcings and initial data,
//! * [`stepper`] implements the time integrator,
//! * [`diagnostics`] post-processes trajectories.

pub mod diagnostics;
mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod models;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
pub use field::{FieldRole, SpectralField};
pub use grid::{Grid, Wavevector};
pub use models::{Forcing, ForcingSpec, InitialPreset, ManufacturedSolution, ModelSpec};
pub use spectral::Spectral;
pub use stepper::{
    InitialData, Observer, Scheme, Stepper, StepperParams, TwoLevelState,
};
