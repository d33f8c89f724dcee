//! The resonant case `epsilon = 0`: stationary input-output relation,
//! multivalued output branches and their linear stability.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{jacobian, rhs_with_field, AtomicState};
use crate::error::{Error, Result};
use crate::fold::{self, FoldKind};
use crate::params::Model;
use crate::roots::brent;

/// Default number of radial scan points in [`output_branches`].
pub const SCAN_POINTS: usize = 2000;

/// A stationary state of the resonant system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantPoint {
    /// Stationary total (output) field.
    pub e_t: Complex64,
    pub e_in: Complex64,
    pub s0_eq: f64,
    pub sm_eq: Complex64,
    pub stable: bool,
    pub eigen_real_parts: [f64; 3],
}

impl ResonantPoint {
    /// Builds the stationary point whose total field is `e_t`.
    pub fn at_output(e_t: Complex64, model: &Model) -> Result<Self> {
        let state = fixed_point_state(e_t, model)?;
        let e_in = e_t - model.lambda() * state.sm.conj() / model.mu();
        let (stable, eigen_real_parts) = classify(&state, e_in, model)?;
        Ok(Self { e_t, e_in, s0_eq: state.s0, sm_eq: state.sm, stable, eigen_real_parts })
    }

    pub fn state(&self) -> AtomicState {
        AtomicState::new(self.s0_eq, self.sm_eq)
    }
}

fn require_resonant(model: &Model) -> Result<()> {
    if model.epsilon() != 0.0 {
        return Err(Error::Regime(format!(
            "the resonant solver needs epsilon = 0, got {}; use the sideband solver",
            model.epsilon()
        )));
    }
    Ok(())
}

/// Atomic steady state for a prescribed total field.
///
/// With the field fixed the equations of motion are affine in
/// `(Re sm, Im sm, s0)`, so the steady state is one 3x3 linear solve.
pub fn fixed_point_state(e_t: Complex64, model: &Model) -> Result<AtomicState> {
    require_resonant(model)?;
    let f = |v: [f64; 3]| rhs_with_field(0.0, &AtomicState::from_array(&v), e_t, model).to_array();
    let f0 = f([0.0; 3]);
    let mut a = Matrix3::zeros();
    for k in 0..3 {
        let mut unit = [0.0; 3];
        unit[k] = 1.0;
        let col = f(unit);
        for r in 0..3 {
            a[(r, k)] = col[r] - f0[r];
        }
    }
    let rhs = -Vector3::from_row_slice(&f0);
    let x = a
        .lu()
        .solve(&rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Degenerate(format!("singular steady-state system at e_t = {e_t}")))?;
    Ok(AtomicState::from_array(x.as_slice()))
}

/// Input field that sustains the stationary total field `e_t`, from the
/// steady state of the equations of motion.
pub fn input_from_output(e_t: Complex64, model: &Model) -> Result<Complex64> {
    let state = fixed_point_state(e_t, model)?;
    Ok(e_t - model.lambda() * state.sm.conj() / model.mu())
}

/// The same relation written out in closed form, with `Omega_I = Im Omega`.
pub fn input_from_output_closed_form(e_t: Complex64, model: &Model) -> Result<Complex64> {
    require_resonant(model)?;
    let mu = model.mu();
    let g = model.gamma();
    let omega = model.omega();
    let q = model.q();
    let lambda = model.lambda();
    let c = model.cosh2r();
    let num = g * mu * lambda * (omega * e_t - Complex64::i() * q.conj() * e_t.conj());
    let den = 4.0 * mu * mu * omega.im * e_t.norm_sqr()
        - 2.0 * mu * mu * (q * e_t * e_t + q.conj() * e_t.conj() * e_t.conj())
        - g * (omega.norm_sqr() - q.norm_sqr()) * c;
    if den.norm() <= f64::EPSILON * num.norm() || den.norm() == 0.0 {
        return Err(Error::Degenerate(format!("vanishing denominator at e_t = {e_t}")));
    }
    Ok(e_t - num / den)
}

/// Linear stability of a resonant stationary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    pub eigen_real_parts: [f64; 3],
}

/// Recomputes the stability of `point` from the Jacobian at the fixed point.
pub fn stability(point: &ResonantPoint, model: &Model) -> Result<Stability> {
    require_resonant(model)?;
    let (stable, eigen_real_parts) = classify(&point.state(), point.e_in, model)?;
    Ok(Stability { stable, eigen_real_parts })
}

fn classify(state: &AtomicState, e_in: Complex64, model: &Model) -> Result<(bool, [f64; 3])> {
    let eig = eigenvalues(&jacobian(0.0, state, e_in, model))?;
    let mut re = [eig[0].re, eig[1].re, eig[2].re];
    re.sort_by(|a, b| b.total_cmp(a));
    Ok((re.iter().all(|&v| v < 0.0), re))
}

pub(crate) fn eigenvalues(m: &Matrix3<f64>) -> Result<[Complex64; 3]> {
    let schur = m
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("eigenvalue iteration did not converge".into()))?;
    let ev = schur.complex_eigenvalues();
    Ok([ev[0], ev[1], ev[2]])
}

/// The one-parameter family of output fields `e_t = rho e^{i phi(rho)}` on
/// which the input field has the fixed phase `psi`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseFamily<'a> {
    model: &'a Model,
    psi: f64,
}

const PHASE_GRID: usize = 64;

impl<'a> PhaseFamily<'a> {
    pub fn new(model: &'a Model, psi: f64) -> Result<Self> {
        require_resonant(model)?;
        Ok(Self { model, psi })
    }

    fn rotated_input(&self, rho: f64, phi: f64) -> Result<Complex64> {
        Ok(input_from_output(Complex64::from_polar(rho, phi), self.model)? * Complex64::from_polar(1.0, -self.psi))
    }

    /// Output phase at radius `rho`, preferring the root nearest `hint`.
    pub fn phase(&self, rho: f64, hint: Option<f64>) -> Result<f64> {
        let h = |phi: f64| self.rotated_input(rho, phi).map(|z| z.im);
        if let Some(h0) = hint {
            let (a, b) = (h0 - 0.05, h0 + 0.05);
            let (ha, hb) = (h(a)?, h(b)?);
            if ha.signum() != hb.signum() && self.rotated_input(rho, h0)?.re > 0.0 {
                return brent(h, a, b, 1e-15, 200);
            }
        }
        let mut roots = Vec::new();
        let step = 2.0 * PI / PHASE_GRID as f64;
        let start = hint.unwrap_or(self.psi) - PI;
        let mut prev = (start, h(start)?);
        for k in 1..=PHASE_GRID {
            let phi = start + step * k as f64;
            let cur = (phi, h(phi)?);
            if prev.1 == 0.0 || prev.1.signum() != cur.1.signum() {
                let root = brent(h, prev.0, cur.0, 1e-15, 200)?;
                if self.rotated_input(rho, root)?.re > 0.0 {
                    roots.push(root);
                }
            }
            prev = cur;
        }
        let target = hint.unwrap_or(self.psi);
        roots
            .into_iter()
            .min_by(|a, b| circ_dist(*a, target).total_cmp(&circ_dist(*b, target)))
            .ok_or_else(|| Error::Degenerate(format!("no output phase at |e_t| = {rho}")))
    }

    /// Input amplitude along the family, `|E_in| = Re(E_in e^{-i psi})`.
    pub fn input_amplitude(&self, rho: f64, hint: Option<f64>) -> Result<(f64, f64)> {
        let phi = self.phase(rho, hint)?;
        Ok((self.rotated_input(rho, phi)?.re, phi))
    }

    /// Samples the family at the given radii, continuing the phase from
    /// point to point.
    pub fn trace(&self, radii: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let mut hint = None;
        let mut out = Vec::with_capacity(radii.len());
        for &rho in radii {
            if rho == 0.0 {
                out.push((0.0, 0.0, self.psi));
                continue;
            }
            let (amp, phi) = self.input_amplitude(rho, hint)?;
            hint = Some(phi);
            out.push((rho, amp, phi));
        }
        Ok(out)
    }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Log-linear hybrid grid on `(0, radius]`: half the points logarithmic
/// from `radius * 1e-6`, half linear.
pub fn hybrid_grid(radius: f64, points: usize) -> Vec<f64> {
    let half = (points / 2).max(2);
    let lo = radius * 1e-6;
    let mut g: Vec<f64> = (0..half)
        .map(|i| lo * (radius / lo).powf(i as f64 / (half - 1) as f64))
        .chain((1..=points - half).map(|i| radius * i as f64 / (points - half) as f64))
        .collect();
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    g
}

/// All stationary points with `|e_t| <= search_radius` sustained by the
/// input `e_in`.
pub fn output_branches(e_in: Complex64, model: &Model, search_radius: f64) -> Result<Vec<ResonantPoint>> {
    output_branches_with(e_in, model, search_radius, SCAN_POINTS)
}

pub fn output_branches_with(
    e_in: Complex64,
    model: &Model,
    search_radius: f64,
    scan_points: usize,
) -> Result<Vec<ResonantPoint>> {
    require_resonant(model)?;
    if !(search_radius > 0.0) || scan_points < 4 {
        return Err(Error::InvalidParam {
            field: "search_radius",
            reason: "scan grid needs a positive radius and at least 4 points".into(),
        });
    }
    let target = e_in.norm();
    if target == 0.0 {
        return Ok(vec![ResonantPoint::at_output(Complex64::new(0.0, 0.0), model)?]);
    }
    let family = PhaseFamily::new(model, e_in.arg())?;
    let grid = hybrid_grid(search_radius, scan_points);
    let samples = family.trace(&grid)?;

    let mut points = Vec::new();
    for w in samples.windows(2) {
        let ((r0, g0, p0), (r1, g1, p1)) = (w[0], w[1]);
        let (d0, d1) = (g0 - target, g1 - target);
        if d0 == 0.0 {
            points.push(Complex64::from_polar(r0, p0));
            continue;
        }
        if d0.signum() == d1.signum() {
            continue;
        }
        let mid_hint = 0.5 * (p0 + p1);
        let rho = brent(
            |r| family.input_amplitude(r, Some(mid_hint)).map(|(a, _)| a - target),
            r0,
            r1,
            1e-14 * r1,
            200,
        )?;
        let phi = family.phase(rho, Some(mid_hint))?;
        points.push(Complex64::from_polar(rho, phi));
    }
    if let Some(&(r, g, p)) = samples.last() {
        if g == target {
            points.push(Complex64::from_polar(r, p));
        }
    }
    points.into_iter().map(|e_t| ResonantPoint::at_output(e_t, model)).collect()
}

/// Stationary curve on the co-phase family (real positive input) at the
/// given output radii; this is the resonant input-output table.
pub fn response_curve(model: &Model, radii: &[f64]) -> Result<Vec<ResonantPoint>> {
    let family = PhaseFamily::new(model, 0.0)?;
    family
        .trace(radii)?
        .into_iter()
        .map(|(rho, _, phi)| ResonantPoint::at_output(Complex64::from_polar(rho, phi), model))
        .collect()
}

/// A fold of the resonant curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantFold {
    pub e_t_abs: f64,
    pub e_in_star: f64,
    pub kind: FoldKind,
}

/// Folds of `|E_in|` along the co-phase family sampled at `radii`.
pub fn folds(model: &Model, radii: &[f64]) -> Result<Vec<ResonantFold>> {
    let family = PhaseFamily::new(model, 0.0)?;
    let samples = family.trace(radii)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    fold::sign_changes(&xs, &ys)
        .into_iter()
        .map(|(lo, hi, kind)| {
            let hint = Some(samples[lo].2);
            let (x, y) = fold::refine(|r| family.input_amplitude(r, hint).map(|v| v.0), &xs, lo, hi, kind, 1e-12)?;
            Ok(ResonantFold { e_t_abs: x, e_in_star: y, kind })
        })
        .collect()
}

/// Whether the co-phase curve sampled at `radii` is non-monotone.
pub fn is_bistable(model: &Model, radii: &[f64]) -> Result<bool> {
    let family = PhaseFamily::new(model, 0.0)?;
    let samples = family.trace(radii)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    Ok(!fold::sign_changes(&xs, &ys).is_empty())
}

/// Smallest effective atom number for which the co-phase curve sampled at
/// `radii` folds, located by bisection between `lo` (monotone) and `hi`
/// (folded) to relative accuracy `rel_tol`.
pub fn critical_n_eff(model: &Model, radii: &[f64], lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let at = |n: f64| model.with(|p| p.n_eff = n).and_then(|m| is_bistable(&m, radii));
    if at(lo)? {
        return Err(Error::Numerical(format!("curve already folds at n_eff = {lo}")));
    }
    if !at(hi)? {
        return Err(Error::Numerical(format!("curve does not fold at n_eff = {hi}")));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn model(theta: f64, n_eff: f64) -> Model {
        Model::new(ModelParams { r: 0.5, theta, n_eff, ..Default::default() }).unwrap()
    }

    #[test]
    fn unsqueezed_reference_value() {
        let m = Model::new(ModelParams { n_eff: 101.0, ..Default::default() }).unwrap();
        let e = input_from_output(Complex64::new(0.1, 0.0), &m).unwrap();
        let want = 0.1 * (1.0 + 25.25 / 0.27);
        assert!((e.re - want).abs() < 1e-12 * want && e.im.abs() < 1e-12);
    }

    #[test]
    fn sideband_regime_is_refused() {
        let m = model(0.0, 10.0).with(|p| p.epsilon = 1.0).unwrap();
        assert!(matches!(input_from_output(Complex64::new(1.0, 0.0), &m), Err(Error::Regime(_))));
    }

    proptest! {
        #[test]
        fn closed_form_agrees_with_steady_state(
            r in 0.0..1.5f64, theta in 0.0..2.0 * PI, delta in -5.0..5.0f64, n_eff in 0.1..200.0f64,
            rho in 0.0..20.0f64, phi in 0.0..2.0 * PI,
        ) {
            let m = Model::new(ModelParams { r, theta, delta, n_eff, ..Default::default() }).unwrap();
            let e_t = Complex64::from_polar(rho, phi);
            let a = input_from_output(e_t, &m).unwrap();
            let b = input_from_output_closed_form(e_t, &m).unwrap();
            prop_assert!((a - b).norm() <= 1e-8 * (1.0 + a.norm()));
        }

        #[test]
        fn steady_state_is_stationary(rho in 0.0..10.0f64, phi in 0.0..2.0 * PI, theta in 0.0..2.0 * PI) {
            let m = model(theta, 30.0);
            let e_t = Complex64::from_polar(rho, phi);
            let s = fixed_point_state(e_t, &m).unwrap();
            let d = crate::bloch::rhs_with_field(0.0, &s, e_t, &m);
            prop_assert!(d.s0.abs() < 1e-11 && d.sm.norm() < 1e-11);
            prop_assert!(s.bloch_norm_sq() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn branches_round_trip_and_three_in_window() {
        let m = model(PI, 101.0);
        let radii = hybrid_grid(15.0, 800);
        let f = folds(&m, &radii).unwrap();
        assert_eq!(f.len(), 2);
        let (lo, hi) = (f[0].e_in_star.min(f[1].e_in_star), f[0].e_in_star.max(f[1].e_in_star));
        let mid = Complex64::new(0.5 * (lo + hi), 0.0);
        let pts = output_branches(mid, &m, 15.0).unwrap();
        assert_eq!(pts.len(), 3);
        for p in &pts {
            assert!((p.e_in - mid).norm() < 1e-9 * mid.norm());
        }
        let stable: Vec<bool> = pts.iter().map(|p| p.stable).collect();
        assert_eq!(stable, vec![true, false, true]);
        let outside = output_branches(Complex64::new(2.0 * hi, 0.0), &m, 40.0).unwrap();
        assert_eq!(outside.len(), 1);
        assert!(outside[0].stable);
    }

    #[test]
    fn stability_recomputation_matches() {
        let m = model(0.0, 20.0);
        let p = ResonantPoint::at_output(Complex64::new(1.3, 0.2), &m).unwrap();
        let s = stability(&p, &m).unwrap();
        assert_eq!(s.stable, p.stable);
        assert_eq!(s.eigen_real_parts, p.eigen_real_parts);
    }

    #[test]
    fn critical_atom_number_depends_on_phase() {
        let radii = hybrid_grid(30.0, 600);
        let n0 = critical_n_eff(&model(0.0, 1.0), &radii, 1.0, 101.0, 1e-4).unwrap();
        let npi = critical_n_eff(&model(PI, 1.0), &radii, 1.0, 101.0, 1e-4).unwrap();
        assert!(n0 < npi);
        assert!(npi < 101.0);
    }

    #[test]
    fn hybrid_grid_is_increasing() {
        let g = hybrid_grid(10.0, 100);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*g.last().unwrap(), 10.0);
        assert!(g[0] > 0.0);
    }
}
