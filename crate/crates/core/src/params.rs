//! Physical parameters and the derived complex constants shared by every
//! solver.
//!
//! Rates are measured in units of the damping constant `gamma`. The dynamic
//! frequency shift of the reservoir is fixed at zero.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dynamic frequency shift of the reservoir. Held at zero.
pub const FREQUENCY_SHIFT: f64 = 0.0;

/// Physical inputs of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Damping rate.
    pub gamma: f64,
    /// Squeeze parameter.
    pub r: f64,
    /// Squeezed-field reference phase (radians), i.e. the pump/squeezed
    /// relative phase.
    pub theta: f64,
    /// Atom-pump detuning `omega_0 - omega`.
    pub delta: f64,
    /// Twice the pump/squeezed-carrier detuning, `2 (omega - omega_s)`.
    pub epsilon: f64,
    /// Effective number of atoms radiating into the polarization field.
    pub n_eff: f64,
    /// Dipole moment.
    pub mu: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            r: 0.0,
            theta: 0.0,
            delta: 0.0,
            epsilon: 0.0,
            n_eff: 1.0,
            mu: 1.0,
        }
    }
}

impl ModelParams {
    /// Validates the fields and returns a copy with `theta` reduced to
    /// `[0, 2pi)`.
    pub fn validated(&self) -> Result<Self> {
        let finite = [
            ("gamma", self.gamma),
            ("r", self.r),
            ("theta", self.theta),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("n_eff", self.n_eff),
            ("mu", self.mu),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return Err(invalid(field, format!("must be finite, got {value}")));
            }
        }
        for (field, value) in [("gamma", self.gamma), ("n_eff", self.n_eff), ("mu", self.mu)] {
            if value <= 0.0 {
                return Err(invalid(field, format!("must be positive, got {value}")));
            }
        }
        if self.r < 0.0 {
            return Err(invalid("r", format!("must be non-negative, got {}", self.r)));
        }
        let mut out = *self;
        out.theta = reduce_phase(self.theta);
        Ok(out)
    }

    /// Evaluates the derived constants.
    pub fn derive(&self) -> Result<DerivedParams> {
        let p = self.validated()?;
        let cosh2r = (2.0 * p.r).cosh();
        let sinh2r = (2.0 * p.r).sinh();
        let half_gamma = 0.5 * p.gamma;
        Ok(DerivedParams {
            omega_c: Complex64::new(p.delta, -half_gamma * cosh2r),
            q: Complex64::from_polar(half_gamma * sinh2r, p.theta),
            lambda_c: Complex64::new(0.0, half_gamma * p.n_eff),
            cosh2r,
            sinh2r,
        })
    }
}

/// Complex constants derived from [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// `delta - i (gamma/2) cosh 2r`.
    pub omega_c: Complex64,
    /// `(gamma/2) e^{i theta} sinh 2r`.
    pub q: Complex64,
    /// `i (gamma/2) n_eff`, the polarization-field coupling.
    pub lambda_c: Complex64,
    pub cosh2r: f64,
    pub sinh2r: f64,
}

/// Validated parameters together with their derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub params: ModelParams,
    pub derived: DerivedParams,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        let params = params.validated()?;
        let derived = params.derive()?;
        Ok(Self { params, derived })
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn mu(&self) -> f64 {
        self.params.mu
    }

    pub fn omega(&self) -> Complex64 {
        self.derived.omega_c
    }

    pub fn q(&self) -> Complex64 {
        self.derived.q
    }

    pub fn lambda(&self) -> Complex64 {
        self.derived.lambda_c
    }

    pub fn cosh2r(&self) -> f64 {
        self.derived.cosh2r
    }

    /// Modulation period `2pi/|epsilon|`, or `None` in the resonant case.
    pub fn period(&self) -> Option<f64> {
        let eps = self.params.epsilon;
        (eps != 0.0).then(|| TAU / eps.abs())
    }

    /// Population inversion of the undriven steady state, `-1/cosh 2r`.
    pub fn vacuum_inversion(&self) -> f64 {
        -1.0 / self.derived.cosh2r
    }

    /// Returns a model with one parameter replaced.
    pub fn with(&self, f: impl FnOnce(&mut ModelParams)) -> Result<Self> {
        let mut p = self.params;
        f(&mut p);
        Model::new(p)
    }
}

fn reduce_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

fn invalid(field: &'static str, reason: String) -> Error {
    Error::InvalidParam { field, reason }
}
