//! Cross-check of the continued-fraction triplet against the harmonics of
//! the time-integrated orbit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{extract_harmonics, settle_from, HarmonicSolution, SettleOptions};
use crate::error::Result;
use crate::params::Model;
use crate::sideband::TripletSolution;

/// Relative deviations of `(a0, a1, a-1)` from the time-domain orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub e0: Complex64,
    pub e_in: Complex64,
    /// `max(|a1|, |a-1|) / |a0|` of the triplet.
    pub sideband_ratio: f64,
    /// The same ratio for the integrated orbit.
    pub oracle_ratio: f64,
    /// Relative errors for `a0`, `a1`, `a-1`.
    pub rel_err: [f64; 3],
    /// Allowed relative error, `max(1%, 10 ratio^2)`.
    pub tolerance: f64,
    pub oracle: HarmonicSolution,
}

impl Comparison {
    pub fn passes(&self) -> bool {
        self.rel_err.iter().all(|&e| e <= self.tolerance)
    }
}

/// Integrates the equations of motion at the triplet's input field, warm
/// started on the triplet's orbit, and compares harmonics.
pub fn compare_point(point: &TripletSolution, model: &Model, opts: &SettleOptions, n_max: usize) -> Result<Comparison> {
    let traj = settle_from(point.initial_state(model), point.e_in, model, opts)?;
    let h = extract_harmonics(&traj, model, n_max.max(1))?;
    let rel = |approx: Complex64, exact: Complex64| {
        let d = (approx - exact).norm();
        if exact.norm() == 0.0 {
            d
        } else {
            d / exact.norm()
        }
    };
    let rel_err = [rel(point.a0, h.a(0)), rel(point.a1, h.a(1)), rel(point.am1, h.a(-1))];
    let sideband_ratio = point.sideband_ratio();
    let oracle_ratio = h.a(1).norm().max(h.a(-1).norm()) / h.a(0).norm();
    let tolerance = 0.01f64.max(10.0 * sideband_ratio * sideband_ratio);
    Ok(Comparison { e0: point.e0, e_in: point.e_in, sideband_ratio, oracle_ratio, rel_err, tolerance, oracle: h })
}
