//! Mean-field Bloch dynamics of a single atom in the self-consistent
//! polarization field, integrated directly in the time domain.
//!
//! Every other solver in the crate is checked against this module.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Dopri5;
use crate::params::Model;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Mean values `<s0>` (inversion) and `<s->` (coherence).
///
/// Physical states lie in the Bloch ball `s0^2 + 4|sm|^2 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomicState {
    pub s0: f64,
    pub sm: Complex64,
}

impl AtomicState {
    pub fn new(s0: f64, sm: Complex64) -> Self {
        Self { s0, sm }
    }

    /// Steady state of the undriven atom, `(-1/cosh 2r, 0)`.
    pub fn vacuum(model: &Model) -> Self {
        Self::new(model.vacuum_inversion(), Complex64::new(0.0, 0.0))
    }

    /// `s0^2 + 4 |sm|^2`.
    pub fn bloch_norm_sq(&self) -> f64 {
        self.s0 * self.s0 + 4.0 * self.sm.norm_sqr()
    }

    /// Component order `(Re sm, Im sm, s0)`.
    pub fn to_array(self) -> [f64; 3] {
        [self.sm.re, self.sm.im, self.s0]
    }

    pub fn from_array(a: &[f64]) -> Self {
        Self::new(a[2], Complex64::new(a[0], a[1]))
    }

    pub fn is_finite(&self) -> bool {
        self.s0.is_finite() && self.sm.re.is_finite() && self.sm.im.is_finite()
    }

    fn max_diff(&self, other: &Self) -> f64 {
        (self.s0 - other.s0)
            .abs()
            .max((self.sm.re - other.sm.re).abs())
            .max((self.sm.im - other.sm.im).abs())
    }
}

/// Sampled solution of the equations of motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AtomicState>,
    /// Total effective field at each sample.
    pub fields_total: Vec<Complex64>,
}

impl Trajectory {
    fn from_samples(times: Vec<f64>, states: Vec<AtomicState>, e_in: Complex64, model: &Model) -> Self {
        let fields_total = states.iter().map(|s| total_field(s, e_in, model)).collect();
        Self { times, states, fields_total }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<AtomicState> {
        self.states.last().copied()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }
}

/// Fourier coefficients of a periodic orbit.
///
/// `a(n)` and `b(n)` are the harmonics of `<s->` and `<s0>` at
/// `e^{i n epsilon t}`; `mode(n)` is the output field amplitude at the same
/// harmonic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSolution {
    pub n_max: usize,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    modes: Vec<Complex64>,
    pub e_in: Complex64,
}

impl HarmonicSolution {
    fn slot(&self, n: i64) -> usize {
        assert!(n.unsigned_abs() as usize <= self.n_max, "harmonic {n} beyond n_max = {}", self.n_max);
        (n + self.n_max as i64) as usize
    }

    pub fn a(&self, n: i64) -> Complex64 {
        self.a[self.slot(n)]
    }

    pub fn b(&self, n: i64) -> Complex64 {
        self.b[self.slot(n)]
    }

    pub fn mode(&self, n: i64) -> Complex64 {
        self.modes[self.slot(n)]
    }

    pub fn harmonics(&self) -> impl Iterator<Item = i64> {
        let m = self.n_max as i64;
        -m..=m
    }
}

/// Total effective field `E_in + Lambda <s->^* / mu`.
pub fn total_field(state: &AtomicState, e_in: Complex64, model: &Model) -> Complex64 {
    e_in + model.lambda() * state.sm.conj() / model.mu()
}

/// Time derivative of the atomic state.
pub fn rhs(t: f64, state: &AtomicState, e_in: Complex64, model: &Model) -> AtomicState {
    rhs_with_field(t, state, total_field(state, e_in, model), model)
}

/// Time derivative with the total field held at `e_t` instead of being
/// computed from the state.
pub fn rhs_with_field(t: f64, state: &AtomicState, e_t: Complex64, model: &Model) -> AtomicState {
    let mu = model.mu();
    let sm = state.sm;
    let s0 = state.s0;
    // 2 i mu (e sm - c.c.) = -4 mu Im(e sm)
    let ds0 = -4.0 * mu * (e_t * sm).im - model.gamma() * (s0 * model.cosh2r() + 1.0);
    let drive = model.q() * Complex64::from_polar(1.0, model.epsilon() * t);
    let dsm = -I * model.omega() * sm + I * mu * e_t.conj() * s0 - drive * sm.conj();
    AtomicState::new(ds0, dsm)
}

/// Jacobian of [`rhs`] in the coordinates `(Re sm, Im sm, s0)`, including
/// the dependence of the total field on `sm`.
pub fn jacobian(t: f64, state: &AtomicState, e_in: Complex64, model: &Model) -> Matrix3<f64> {
    let mu = model.mu();
    let lambda = model.lambda();
    let omega = model.omega();
    let drive = model.q() * Complex64::from_polar(1.0, model.epsilon() * t);
    let z = state.s0;
    let e_t = total_field(state, e_in, model);

    let dsm_dx = -I * omega + I * lambda.conj() * z - drive;
    let dsm_dy = omega - lambda.conj() * z + I * drive;
    let dsm_dz = I * mu * e_t.conj();
    let ds0_dx = -4.0 * mu * e_in.im - 8.0 * lambda.im * state.sm.re;
    let ds0_dy = -4.0 * mu * e_in.re - 8.0 * lambda.im * state.sm.im;
    let ds0_dz = -model.gamma() * model.cosh2r();

    Matrix3::new(
        dsm_dx.re, dsm_dy.re, dsm_dz.re, //
        dsm_dx.im, dsm_dy.im, dsm_dz.im, //
        ds0_dx, ds0_dy, ds0_dz,
    )
}

fn field_fn(e_in: Complex64, model: Model) -> impl FnMut(f64, &[f64; 3]) -> [f64; 3] {
    move |t, y| rhs(t, &AtomicState::from_array(y), e_in, &model).to_array()
}

/// Uniform output spacing used by [`integrate`]: 64 samples per modulation
/// period, or per `2pi/gamma` in the resonant case.
pub fn sample_spacing(model: &Model) -> f64 {
    model.period().unwrap_or(TAU / model.gamma()) / 64.0
}

/// Integrates from `t = 0` to `t_end` with local tolerance `tol`, sampling on
/// a uniform grid (see [`sample_spacing`]) that ends exactly at `t_end`.
pub fn integrate(initial: AtomicState, e_in: Complex64, model: &Model, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParam { field: "tol", reason: format!("must be positive, got {tol}") });
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParam { field: "t_end", reason: format!("must be positive, got {t_end}") });
    }
    if !initial.is_finite() {
        return Err(Error::Integration { time: 0.0, reason: "non-finite initial state".into() });
    }
    let dt = sample_spacing(model);
    let n = (t_end / dt).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|j| j as f64 * dt).collect();
    if t_end - times[n] > 1e-9 * dt {
        times.push(t_end);
    } else {
        times[n] = t_end;
    }
    let states = sample_at(initial, 0.0, &times, e_in, model, tol)?;
    Ok(Trajectory::from_samples(times, states, e_in, model))
}

fn sample_at(
    initial: AtomicState,
    t0: f64,
    times: &[f64],
    e_in: Complex64,
    model: &Model,
    tol: f64,
) -> Result<Vec<AtomicState>> {
    let mut solver = Dopri5::new(field_fn(e_in, *model), t0, initial.to_array(), tol);
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        solver.advance_to(t)?;
        let s = AtomicState::from_array(solver.y());
        if !s.is_finite() {
            return Err(Error::Integration { time: t, reason: "non-finite state".into() });
        }
        states.push(s);
    }
    Ok(states)
}

/// Controls for [`settle`] and [`settle_from`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettleOptions {
    /// Local integrator tolerance.
    pub tol: f64,
    /// Stroboscopic convergence threshold (max norm).
    pub settle_tol: f64,
    pub max_periods: usize,
    /// Uniform samples in the returned period (the endpoint is included on
    /// top of these).
    pub samples_per_period: usize,
}

impl Default for SettleOptions {
    fn default() -> Self {
        Self { tol: 1e-10, settle_tol: 1e-9, max_periods: 5000, samples_per_period: 512 }
    }
}

/// Settles from the undriven steady state. See [`settle_from`].
pub fn settle(e_in: Complex64, model: &Model, opts: &SettleOptions) -> Result<Trajectory> {
    settle_from(AtomicState::vacuum(model), e_in, model, opts)
}

/// Integrates until the motion is asymptotically stationary and returns it.
///
/// For `epsilon != 0` the state is strobed once per period `T`; once two
/// consecutive strobes differ by less than `settle_tol` one further period
/// is sampled uniformly (both endpoints included) and returned. For
/// `epsilon == 0` the state is compared every `1/gamma` instead and the
/// fixed point is returned as a single sample.
///
/// An undriven atom starting with `sm = 0` never leaves the line `sm = 0`
/// and relaxes to the time-independent vacuum state, which is returned as a
/// single sample.
pub fn settle_from(initial: AtomicState, e_in: Complex64, model: &Model, opts: &SettleOptions) -> Result<Trajectory> {
    if !(opts.tol > 0.0 && opts.settle_tol > 0.0) || opts.max_periods == 0 {
        return Err(Error::InvalidParam {
            field: "settle options",
            reason: "tolerances and max_periods must be positive".into(),
        });
    }
    if e_in == Complex64::new(0.0, 0.0) && initial.sm == Complex64::new(0.0, 0.0) {
        let fixed = AtomicState::vacuum(model);
        return Ok(Trajectory::from_samples(vec![0.0], vec![fixed], e_in, model));
    }
    match model.period() {
        Some(period) => settle_periodic(initial, e_in, model, opts, period),
        None => settle_fixed_point(initial, e_in, model, opts),
    }
}

fn settle_periodic(
    initial: AtomicState,
    e_in: Complex64,
    model: &Model,
    opts: &SettleOptions,
    period: f64,
) -> Result<Trajectory> {
    let mut solver = Dopri5::new(field_fn(e_in, *model), 0.0, initial.to_array(), opts.tol);
    let mut prev = initial;
    let mut residual = f64::INFINITY;
    for k in 1..=opts.max_periods {
        let t_k = k as f64 * period;
        solver.advance_to(t_k)?;
        let cur = AtomicState::from_array(solver.y());
        residual = cur.max_diff(&prev);
        prev = cur;
        if residual < opts.settle_tol {
            let m = opts.samples_per_period.max(64);
            let times: Vec<f64> = (0..=m).map(|j| t_k + period * j as f64 / m as f64).collect();
            let states = sample_at(cur, t_k, &times, e_in, model, opts.tol)?;
            return Ok(Trajectory::from_samples(times, states, e_in, model));
        }
    }
    Err(Error::Settle { periods: opts.max_periods, residual })
}

fn settle_fixed_point(initial: AtomicState, e_in: Complex64, model: &Model, opts: &SettleOptions) -> Result<Trajectory> {
    let chunk = 1.0 / model.gamma();
    let chunks = opts.max_periods * 7;
    let mut solver = Dopri5::new(field_fn(e_in, *model), 0.0, initial.to_array(), opts.tol);
    let mut residual = f64::INFINITY;
    let mut prev = initial;
    for k in 1..=chunks {
        solver.advance_to(k as f64 * chunk)?;
        let s = AtomicState::from_array(solver.y());
        residual = s.max_diff(&prev);
        prev = s;
        if residual < opts.settle_tol {
            return Ok(Trajectory::from_samples(vec![solver.t()], vec![s], e_in, model));
        }
        if residual < POLISH_THRESHOLD {
            if let Some(fixed) = polish_fixed_point(s, e_in, model) {
                if fixed.max_diff(&s) < POLISH_THRESHOLD {
                    return Ok(Trajectory::from_samples(vec![solver.t()], vec![fixed], e_in, model));
                }
            }
        }
    }
    Err(Error::Settle { periods: opts.max_periods, residual })
}

const POLISH_THRESHOLD: f64 = 1e-6;

/// Newton iteration on the resonant equations of motion from a nearly
/// settled state.
fn polish_fixed_point(start: AtomicState, e_in: Complex64, model: &Model) -> Option<AtomicState> {
    let mut y = Vector3::from_row_slice(&start.to_array());
    for _ in 0..20 {
        let s = AtomicState::from_array(y.as_slice());
        let f = Vector3::from_row_slice(&rhs(0.0, &s, e_in, model).to_array());
        let step = jacobian(0.0, &s, e_in, model).lu().solve(&-f)?;
        y += step;
        if step.amax() <= 1e-14 * (1.0 + y.amax()) {
            let s = AtomicState::from_array(y.as_slice());
            return s.is_finite().then_some(s);
        }
    }
    None
}

/// Projects one sampled period onto the harmonics `e^{i n epsilon t}`,
/// `|n| <= n_max`, with the trapezoid rule on the trajectory's own grid.
///
/// A single-sample trajectory is a stationary state: its only harmonic is
/// `n = 0`.
pub fn extract_harmonics(traj: &Trajectory, model: &Model, n_max: usize) -> Result<HarmonicSolution> {
    if n_max == 0 {
        return Err(Error::InvalidParam { field: "n_max", reason: "must be at least 1".into() });
    }
    if traj.is_empty() {
        return Err(Error::Numerical("empty trajectory".into()));
    }
    let width = 2 * n_max + 1;
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; width];
    let mut b = vec![zero; width];
    let mut modes = vec![zero; width];

    if traj.len() == 1 {
        a[n_max] = traj.states[0].sm;
        b[n_max] = Complex64::new(traj.states[0].s0, 0.0);
        modes[n_max] = traj.fields_total[0];
    } else {
        let period = model.period().ok_or_else(|| {
            Error::Regime("harmonic extraction of a multi-sample trajectory needs epsilon != 0".into())
        })?;
        let t0 = traj.times[0];
        let span = traj.times[traj.len() - 1] - t0;
        if (span - period).abs() > 0.01 * period {
            return Err(Error::PeriodMismatch { span, period });
        }
        let eps = model.epsilon();
        for (slot, n) in (-(n_max as i64)..=n_max as i64).enumerate() {
            let phase = |t: f64| Complex64::from_polar(1.0, -(n as f64) * eps * t);
            let sm = trapezoid(&traj.times, |j| traj.states[j].sm * phase(traj.times[j]));
            let s0 = trapezoid(&traj.times, |j| phase(traj.times[j]) * traj.states[j].s0);
            let et = trapezoid(&traj.times, |j| traj.fields_total[j] * phase(traj.times[j]));
            a[slot] = sm / span;
            b[slot] = s0 / span;
            modes[slot] = et / span;
        }
    }
    let e_in = modes[n_max] - model.lambda() * a[n_max].conj() / model.mu();
    Ok(HarmonicSolution { n_max, a, b, modes, e_in })
}

fn trapezoid(times: &[f64], f: impl Fn(usize) -> Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut prev = f(0);
    for j in 1..times.len() {
        let cur = f(j);
        acc += (prev + cur) * (0.5 * (times[j] - times[j - 1]));
        prev = cur;
    }
    acc
}

/// Integrates the state together with its variational equations over
/// `[t0, t0 + duration]`; returns the final state and the fundamental
/// matrix (the monodromy matrix when `duration` is one period).
pub fn monodromy(
    initial: AtomicState,
    t0: f64,
    duration: f64,
    e_in: Complex64,
    model: &Model,
    tol: f64,
) -> Result<(AtomicState, Matrix3<f64>)> {
    let m = *model;
    let f = move |t: f64, y: &[f64; 12]| {
        let s = AtomicState::from_array(&y[..3]);
        let mut out = [0.0; 12];
        out[..3].copy_from_slice(&rhs(t, &s, e_in, &m).to_array());
        let jac = jacobian(t, &s, e_in, &m);
        let phi = Matrix3::from_row_slice(&y[3..]);
        let dphi = jac * phi;
        for r in 0..3 {
            for c in 0..3 {
                out[3 + 3 * r + c] = dphi[(r, c)];
            }
        }
        out
    };
    let mut y0 = [0.0; 12];
    y0[..3].copy_from_slice(&initial.to_array());
    y0[3] = 1.0;
    y0[7] = 1.0;
    y0[11] = 1.0;
    let mut solver = Dopri5::new(f, t0, y0, tol);
    solver.advance_to(t0 + duration)?;
    let y = solver.y();
    Ok((AtomicState::from_array(&y[..3]), Matrix3::from_row_slice(&y[3..])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn bistable_model() -> Model {
        Model::new(ModelParams { r: 0.5, theta: PI, epsilon: 2.0, n_eff: 101.0, ..Default::default() }).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rhs_reference_value() {
        let s = AtomicState::new(-0.6, c(0.05, 0.02));
        let d = rhs(0.0, &s, c(0.3, 0.0), &bistable_model());
        assert!((d.s0 - -0.6839516191108539).abs() < 1e-13);
        assert!((d.sm - c(-1.524196986029286, -0.8131828182845905)).norm() < 1e-13);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = bistable_model();
        let e_in = c(0.7, -0.4);
        let s = AtomicState::new(-0.3, c(0.12, -0.08));
        for t in [0.0, 0.4, 1.9] {
            let jac = jacobian(t, &s, e_in, &m);
            let h = 1e-6;
            for k in 0..3 {
                let mut p = s.to_array();
                let mut q = s.to_array();
                p[k] += h;
                q[k] -= h;
                let fp = rhs(t, &AtomicState::from_array(&p), e_in, &m).to_array();
                let fq = rhs(t, &AtomicState::from_array(&q), e_in, &m).to_array();
                for r in 0..3 {
                    let fd = (fp[r] - fq[r]) / (2.0 * h);
                    assert!((fd - jac[(r, k)]).abs() < 1e-6 * (1.0 + fd.abs()), "({r},{k}) {fd} vs {}", jac[(r, k)]);
                }
            }
        }
    }

    #[test]
    fn undriven_vacuum_is_single_sample() {
        let m = bistable_model();
        let traj = settle(c(0.0, 0.0), &m, &SettleOptions::default()).unwrap();
        assert_eq!(traj.len(), 1);
        assert!((traj.states[0].s0 + 1.0 / m.cosh2r()).abs() < 1e-15);
        let h = extract_harmonics(&traj, &m, 3).unwrap();
        assert_eq!(h.a(1), c(0.0, 0.0));
        assert_eq!(h.e_in, c(0.0, 0.0));
    }

    #[test]
    fn settled_orbit_reference_harmonics() {
        let m = bistable_model();
        let traj = settle(c(0.3, 0.0), &m, &SettleOptions::default()).unwrap();
        let span = traj.times[traj.len() - 1] - traj.times[0];
        assert!((span - m.period().unwrap()).abs() < 1e-12);
        let h = extract_harmonics(&traj, &m, 4).unwrap();
        let want = [
            (0, c(1.036259936622704e-07, -0.005805526403043615)),
            (1, c(6.066159070195268e-06, 0.00010149195324337182)),
            (-1, c(-3.966862161019005e-09, 2.3821661003379027e-09)),
        ];
        for (n, w) in want {
            assert!((h.a(n) - w).norm() < 1e-7 * w.norm() + 1e-10 * h.a(0).norm(), "n={n}: {} vs {w}", h.a(n));
        }
        assert!((h.e_in - c(0.3, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn resonant_settle_reaches_fixed_point() {
        let m = Model::new(ModelParams { r: 0.5, n_eff: 4.0, ..Default::default() }).unwrap();
        let traj = settle(c(0.8, 0.0), &m, &SettleOptions::default()).unwrap();
        assert_eq!(traj.len(), 1);
        let d = rhs(0.0, &traj.states[0], c(0.8, 0.0), &m);
        assert!(d.s0.abs() < 1e-8 && d.sm.norm() < 1e-8);
    }

    #[test]
    fn harmonic_projection_of_synthetic_orbit() {
        let m = bistable_model();
        let period = m.period().unwrap();
        let (a0, a1, am1) = (c(0.1, -0.2), c(0.01, 0.03), c(-0.002, 0.001));
        let times: Vec<f64> = (0..=256).map(|j| 5.0 + period * j as f64 / 256.0).collect();
        let states: Vec<AtomicState> = times
            .iter()
            .map(|&t| {
                let w = Complex64::from_polar(1.0, 2.0 * t);
                AtomicState::new(-0.5, a0 + a1 * w + am1 / w)
            })
            .collect();
        let fields_total = states.iter().map(|s| total_field(s, c(1.0, 0.0), &m)).collect();
        let traj = Trajectory { times, states, fields_total };
        let h = extract_harmonics(&traj, &m, 2).unwrap();
        assert!((h.a(0) - a0).norm() < 1e-14);
        assert!((h.a(1) - a1).norm() < 1e-14);
        assert!((h.a(-1) - am1).norm() < 1e-14);
        assert!(h.a(2).norm() < 1e-14);
        assert!((h.b(0) - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((h.e_in - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn wrong_span_is_rejected() {
        let m = bistable_model();
        let times = vec![0.0, 0.5, 1.0];
        let states = vec![AtomicState::vacuum(&m); 3];
        let fields_total = vec![c(0.0, 0.0); 3];
        let traj = Trajectory { times, states, fields_total };
        assert!(matches!(extract_harmonics(&traj, &m, 1), Err(Error::PeriodMismatch { .. })));
    }

    #[test]
    fn monodromy_of_linearised_flow_matches_perturbation() {
        let m = bistable_model();
        let s = AtomicState::new(-0.4, c(0.05, 0.1));
        let e_in = c(0.5, 0.2);
        let (end, phi) = monodromy(s, 0.0, 0.7, e_in, &m, 1e-11).unwrap();
        let h = 1e-6;
        let mut p = s.to_array();
        p[1] += h;
        let (end_p, _) = monodromy(AtomicState::from_array(&p), 0.0, 0.7, e_in, &m, 1e-11).unwrap();
        let fd: Vec<f64> = end_p.to_array().iter().zip(end.to_array()).map(|(a, b)| (a - b) / h).collect();
        for r in 0..3 {
            assert!((fd[r] - phi[(r, 1)]).abs() < 1e-4 * (1.0 + fd[r].abs()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn stays_in_bloch_ball(
            r in 0.0..1.2f64, theta in 0.0..2.0 * PI, delta in -3.0..3.0f64, eps in 0.5..4.0f64,
            n_eff in 0.5..120.0f64, e_re in -5.0..5.0f64, e_im in -5.0..5.0f64,
            z in -1.0..1.0f64, phase in 0.0..2.0 * PI, frac in 0.0..1.0f64,
        ) {
            let m = Model::new(ModelParams { r, theta, delta, epsilon: eps, n_eff, ..Default::default() }).unwrap();
            let rho = frac * (1.0 - z * z).sqrt() / 2.0;
            let s = AtomicState::new(z, Complex64::from_polar(rho, phase));
            let traj = integrate(s, c(e_re, e_im), &m, 6.0, 1e-10).unwrap();
            for st in &traj.states {
                prop_assert!(st.bloch_norm_sq() <= 1.0 + 1e-7, "{}", st.bloch_norm_sq());
            }
        }
    }
}
