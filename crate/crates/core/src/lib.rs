//! Output fields of two-level atoms driven by a coherent pump and coupled to
//! a broadband squeezed vacuum whose carrier is detuned from the pump.
//!
//! * [`params`]: physical inputs and derived constants.
//! * [`bloch`]: time-domain mean-field dynamics, harmonic extraction.
//! * [`resonant`]: the `epsilon = 0` stationary relation and its branches.
//! * [`sideband`]: continued-fraction solution for the central and first
//!   sideband modes when `epsilon != 0`.
//! * [`sweep`]: response curves, folds, stability labels and hysteresis.
//! * [`cli`]: configuration and the command-line driver.

pub mod bloch;
pub mod cli;
pub mod compare;
pub mod error;
pub mod fold;
pub mod ode;
pub mod params;
pub mod resonant;
pub mod roots;
pub mod sideband;
pub mod sweep;

pub use error::{Error, Result};
pub use params::{DerivedParams, Model, ModelParams};
