//! Response curves over a grid of central amplitudes: turning points,
//! stability labels and hysteresis paths.

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{monodromy, AtomicState};
use crate::error::{Error, Result};
use crate::fold::{self, FoldKind};
use crate::params::Model;
use crate::resonant::eigenvalues;
use crate::roots::brent;
use crate::sideband::{solve_triplet, TripletSolution};

/// Output mode selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `E0`, at the pump frequency.
    Central,
    /// `E+1`, at `omega - epsilon`.
    RedShifted,
    /// `E-1`, at `omega + epsilon`.
    BlueShifted,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Central, Mode::RedShifted, Mode::BlueShifted];

    pub fn modulus(self, s: &TripletSolution) -> f64 {
        match self {
            Mode::Central => s.e0.norm(),
            Mode::RedShifted => s.mode_p1.norm(),
            Mode::BlueShifted => s.mode_m1.norm(),
        }
    }
}

/// Triplet solutions along an increasing grid of `|E0|`.
#[derive(Debug, Clone)]
pub struct ResponseCurve {
    pub model: Model,
    pub depth: usize,
    pub points: Vec<TripletSolution>,
    /// Grid values of `|E0|` where no regular solution could be found.
    pub gaps: Vec<f64>,
}

impl ResponseCurve {
    pub fn e0_abs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.e0.norm()).collect()
    }

    pub fn e_in_abs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.e_in.norm()).collect()
    }

    pub fn mode_abs(&self, mode: Mode) -> Vec<f64> {
        self.points.iter().map(|p| mode.modulus(p)).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Solves at a real central amplitude with this curve's settings.
    pub fn solve_at(&self, e0_abs: f64) -> Result<TripletSolution> {
        solve_triplet(Complex64::new(e0_abs, 0.0), &self.model, self.depth)
    }

    fn e_in_at(&self, e0_abs: f64) -> Result<f64> {
        self.solve_at(e0_abs).map(|s| s.e_in.norm())
    }
}

/// Evenly spaced grid on `[lo, hi]`, linear or logarithmic.
pub fn grid(lo: f64, hi: f64, points: usize, log: bool) -> Vec<f64> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            if log {
                lo * (hi / lo).powf(s)
            } else {
                lo + (hi - lo) * s
            }
        })
        .collect()
}

fn is_singular(e: &Error) -> bool {
    matches!(
        e,
        Error::SingularCoefficient { .. } | Error::SingularFraction { .. } | Error::SingularSolution(_)
    )
}

/// Evaluates the triplet at every grid point (in parallel).
///
/// A singular grid point is retried up to 8 times at successive bisections
/// towards its right neighbour (left neighbour for the last point) before it
/// is recorded as a gap. More than 10% gaps is an error.
pub fn sweep(e0_grid: &[f64], model: &Model, depth: usize) -> Result<ResponseCurve> {
    if e0_grid.is_empty() {
        return Err(Error::InvalidParam { field: "e0_grid", reason: "empty grid".into() });
    }
    if e0_grid.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParam { field: "e0_grid", reason: "grid values must be finite and >= 0".into() });
    }
    if e0_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam { field: "e0_grid", reason: "grid must be strictly increasing".into() });
    }
    let n = e0_grid.len();
    let solved: Vec<Result<Option<TripletSolution>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = e0_grid[i];
            let towards = if i + 1 < n { e0_grid[i + 1] } else if i > 0 { e0_grid[i - 1] } else { x };
            let mut candidate = x;
            for attempt in 0..=8 {
                match solve_triplet(Complex64::new(candidate, 0.0), model, depth) {
                    Ok(s) => return Ok(Some(s)),
                    Err(e) if is_singular(&e) => {
                        candidate = x + (towards - x) / f64::powi(2.0, attempt + 1);
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(None)
        })
        .collect();
    let mut points = Vec::with_capacity(n);
    let mut gaps = Vec::new();
    for (i, r) in solved.into_iter().enumerate() {
        match r? {
            Some(s) => points.push(s),
            None => gaps.push(e0_grid[i]),
        }
    }
    if gaps.len() * 10 > n {
        return Err(Error::SweepQuality { singular: gaps.len(), total: n });
    }
    Ok(ResponseCurve { model: *model, depth, points, gaps })
}

/// A fold of `|E_in|` as a function of `|E0|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub e_in_star: f64,
    pub e0_star: f64,
    pub index_interval: (usize, usize),
    pub kind: FoldKind,
}

/// Folds of the curve, refined by golden-section search on `|E0|`.
pub fn turning_points(curve: &ResponseCurve) -> Result<Vec<TurningPoint>> {
    folds_of(curve, &curve.e0_abs(), &curve.e_in_abs())
}

/// Folds of the planar curve `(|E_in|, |mode|)`.
///
/// Vertical tangents are located as sign changes of `d|E_in|/d sigma`, with
/// `sigma` the cumulative arclength of the mode's own curve (each axis
/// scaled by its range). All modes share the sweep parameter, so they fold
/// at the same inputs.
pub fn mode_turning_points(curve: &ResponseCurve, mode: Mode) -> Result<Vec<TurningPoint>> {
    let xs = curve.e_in_abs();
    let ys = curve.mode_abs(mode);
    let span = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        (hi - lo).max(f64::MIN_POSITIVE)
    };
    let (sx, sy) = (span(&xs), span(&ys));
    let mut sigma = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    for i in 0..xs.len() {
        if i > 0 {
            acc += ((xs[i] - xs[i - 1]) / sx).hypot((ys[i] - ys[i - 1]) / sy).max(f64::EPSILON);
        }
        sigma.push(acc);
    }
    let changes = fold::sign_changes(&sigma, &xs);
    let e0 = curve.e0_abs();
    changes
        .into_iter()
        .map(|(lo, hi, kind)| refine_turning(curve, &e0, lo, hi, kind))
        .collect()
}

fn folds_of(curve: &ResponseCurve, xs: &[f64], ys: &[f64]) -> Result<Vec<TurningPoint>> {
    if curve.len() < 3 {
        return Ok(Vec::new());
    }
    fold::sign_changes(xs, ys)
        .into_iter()
        .map(|(lo, hi, kind)| refine_turning(curve, xs, lo, hi, kind))
        .collect()
}

fn refine_turning(curve: &ResponseCurve, e0: &[f64], lo: usize, hi: usize, kind: FoldKind) -> Result<TurningPoint> {
    let (x, y) = fold::refine(|x| curve.e_in_at(x), e0, lo, hi, kind, 1e-10)?;
    Ok(TurningPoint { e_in_star: y, e0_star: x, index_interval: (lo, hi), kind })
}

/// A maximal run of equally labelled points, `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub stable: bool,
}

/// A response curve with per-point stability labels.
#[derive(Debug, Clone)]
pub struct ClassifiedCurve {
    pub curve: ResponseCurve,
    pub slope_signs: Vec<i8>,
    pub stable: Vec<bool>,
    pub segments: Vec<Segment>,
    pub turning_points: Vec<TurningPoint>,
}

/// Labels each point by the sign of `d|E_in|/d|E0|`: positive slope is
/// stable, negative slope (the middle branch of an S) is unstable.
pub fn classify_branches(curve: ResponseCurve) -> Result<ClassifiedCurve> {
    let turning_points = turning_points(&curve)?;
    let signs = fold::slope_signs(&curve.e0_abs(), &curve.e_in_abs());
    let mut stable: Vec<Option<bool>> = signs.iter().map(|&s| (s != 0).then_some(s > 0)).collect();
    // zero slopes inherit the nearest labelled neighbour
    for i in 1..stable.len() {
        if stable[i].is_none() {
            stable[i] = stable[i - 1];
        }
    }
    for i in (0..stable.len().saturating_sub(1)).rev() {
        if stable[i].is_none() {
            stable[i] = stable[i + 1];
        }
    }
    let stable: Vec<bool> = stable.into_iter().map(|s| s.unwrap_or(true)).collect();
    let mut segments: Vec<Segment> = Vec::new();
    for (i, &s) in stable.iter().enumerate() {
        match segments.last_mut() {
            Some(seg) if seg.stable == s => seg.end = i,
            _ => segments.push(Segment { start: i, end: i, stable: s }),
        }
    }
    Ok(ClassifiedCurve { curve, slope_signs: signs, stable, segments, turning_points })
}

/// Floquet multipliers of the periodic orbit attached to a triplet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetResult {
    pub multipliers: [Complex64; 3],
    /// Orbit state at `t = 0`.
    pub orbit_start: AtomicState,
    /// Newton iterations used to close the orbit.
    pub iterations: usize,
}

impl FloquetResult {
    pub fn max_modulus(&self) -> f64 {
        self.multipliers.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    pub fn stable(&self) -> bool {
        self.max_modulus() < 1.0
    }
}

const SHOOTING_SEGMENTS: usize = 16;

/// Closes the periodic orbit of the full equations of motion near the
/// triplet by multiple shooting over one period, then returns the
/// eigenvalues of its monodromy matrix.
///
/// Splitting the period keeps each segment's map well conditioned, so the
/// strongly unstable middle-branch orbits close as readily as the stable
/// outer ones.
pub fn floquet_check(point: &TripletSolution, model: &Model, tol: f64) -> Result<FloquetResult> {
    let period = model
        .period()
        .ok_or_else(|| Error::Regime("Floquet analysis needs epsilon != 0".into()))?;
    let m = SHOOTING_SEGMENTS;
    let dt = period / m as f64;
    let e_in = point.e_in;
    let mut nodes: Vec<[f64; 3]> = (0..m).map(|k| point.state_at(k as f64 * dt, model).to_array()).collect();

    let shoot = |nodes: &[[f64; 3]]| -> Result<(Vec<f64>, Vec<Matrix3<f64>>)> {
        let segs: Vec<(AtomicState, Matrix3<f64>)> = (0..m)
            .into_par_iter()
            .map(|k| monodromy(AtomicState::from_array(&nodes[k]), k as f64 * dt, dt, e_in, model, tol))
            .collect::<Result<_>>()?;
        let mut res = Vec::with_capacity(3 * m);
        for k in 0..m {
            let end = segs[k].0.to_array();
            let next = nodes[(k + 1) % m];
            res.extend((0..3).map(|i| end[i] - next[i]));
        }
        Ok((res, segs.into_iter().map(|s| s.1).collect()))
    };
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));

    let (mut res, mut jacs) = shoot(&nodes)?;
    let mut norm = max_abs(&res);
    let mut iterations = 0;
    while norm > 1e-11 {
        iterations += 1;
        if iterations > 50 {
            return Err(Error::Numerical(format!("periodic orbit did not close (residual {norm:e})")));
        }
        let n = 3 * m;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..m {
            let nk = (k + 1) % m;
            for r in 0..3 {
                for c in 0..3 {
                    jac[(3 * k + r, 3 * k + c)] = jacs[k][(r, c)];
                }
                jac[(3 * k + r, 3 * nk + r)] -= 1.0;
            }
        }
        let step = jac
            .lu()
            .solve(&-DVector::from_vec(res.clone()))
            .ok_or_else(|| Error::Numerical("singular shooting Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<[f64; 3]> = nodes
                .iter()
                .enumerate()
                .map(|(k, y)| [y[0] + lambda * step[3 * k], y[1] + lambda * step[3 * k + 1], y[2] + lambda * step[3 * k + 2]])
                .collect();
            let attempt = shoot(&trial);
            if let Ok((tr, tj)) = attempt {
                let tn = max_abs(&tr);
                if tn < norm || lambda < 1e-3 {
                    nodes = trial;
                    res = tr;
                    jacs = tj;
                    norm = tn;
                    break;
                }
            } else if lambda < 1e-3 {
                return attempt.map(|_| unreachable!());
            }
            lambda *= 0.5;
        }
    }
    let mono = jacs.iter().fold(Matrix3::identity(), |acc, j| j * acc);
    Ok(FloquetResult { multipliers: eigenvalues(&mono)?, orbit_start: AtomicState::from_array(&nodes[0]), iterations })
}

/// Direction of a hysteresis sweep in `|E_in|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Up,
    Down,
}

/// One jump between stable branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub e_in_at_jump: f64,
    pub e0_before: f64,
    pub e0_after: f64,
    /// `(|E0|, |E+1|, |E-1|)` just before the jump.
    pub before: [f64; 3],
    /// The same moduli on the branch landed on.
    pub after: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisReport {
    pub direction: Direction,
    pub jumps: Vec<Jump>,
}

/// Walks the classified curve monotonically in `|E_in|`, staying on the
/// current stable segment until it ends at a fold, then jumping to the
/// nearest stable segment in the walking direction that covers the fold's
/// input.
pub fn hysteresis(classified: &ClassifiedCurve, direction: Direction) -> Result<HysteresisReport> {
    let curve = &classified.curve;
    let e_in = curve.e_in_abs();
    let e0 = curve.e0_abs();
    let stable: Vec<&Segment> = classified.segments.iter().filter(|s| s.stable).collect();
    let mut jumps = Vec::new();
    if stable.is_empty() {
        return Ok(HysteresisReport { direction, jumps });
    }
    let last = curve.len() - 1;
    let mut current = match direction {
        Direction::Up => 0,
        Direction::Down => stable.len() - 1,
    };
    loop {
        let seg = stable[current];
        let fold_idx = match direction {
            Direction::Up if seg.end < last => seg.end,
            Direction::Down if seg.start > 0 => seg.start,
            _ => break,
        };
        let tp = classified
            .turning_points
            .iter()
            .min_by_key(|tp| tp.index_interval.0.abs_diff(fold_idx).min(tp.index_interval.1.abs_diff(fold_idx)))
            .copied();
        let Some(tp) = tp else { break };
        let star = tp.e_in_star;
        let candidates: Vec<usize> = match direction {
            Direction::Up => (current + 1..stable.len()).collect(),
            Direction::Down => (0..current).rev().collect(),
        };
        let mut landed = None;
        for k in candidates {
            let s = stable[k];
            // extend by one sample so brackets reaching into the fold count
            let lo = s.start.saturating_sub(1);
            let hi = (s.end + 1).min(last);
            let found = (lo..hi).find(|&j| (e_in[j] - star).signum() != (e_in[j + 1] - star).signum());
            if let Some(j) = found {
                let x = brent(|x| curve.e_in_at(x).map(|v| v - star), e0[j], e0[j + 1], 1e-13 * e0[j + 1], 200)?;
                landed = Some((k, x));
                break;
            }
        }
        let Some((k, x_after)) = landed else { break };
        let before = curve.solve_at(tp.e0_star)?.mode_moduli();
        let after = curve.solve_at(x_after)?.mode_moduli();
        jumps.push(Jump { e_in_at_jump: star, e0_before: tp.e0_star, e0_after: x_after, before, after });
        current = k;
    }
    Ok(HysteresisReport { direction, jumps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::sideband::solve_triplet;
    use std::f64::consts::PI;

    fn bistable_model() -> Model {
        Model::new(ModelParams { r: 0.5, theta: PI, epsilon: 2.0, n_eff: 101.0, ..Default::default() }).unwrap()
    }

    fn bistable_curve() -> ClassifiedCurve {
        classify_branches(sweep(&grid(0.0, 20.0, 400, false), &bistable_model(), 2).unwrap()).unwrap()
    }

    #[test]
    fn grid_shapes() {
        let g = grid(0.0, 2.0, 5, false);
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let l = grid(0.01, 100.0, 5, true);
        assert!((l[2] - 1.0).abs() < 1e-12 && l[4] == 100.0);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let m = bistable_model();
        assert!(sweep(&[], &m, 2).is_err());
        assert!(sweep(&[1.0, 0.5], &m, 2).is_err());
        assert!(sweep(&[-1.0, 0.5], &m, 2).is_err());
    }

    #[test]
    fn s_curve_turning_points() {
        let cc = bistable_curve();
        let tp = &cc.turning_points;
        assert_eq!(tp.len(), 2);
        assert_eq!(tp[0].kind, FoldKind::UpperFold);
        assert!((tp[0].e0_star - 0.56909).abs() < 1e-4 && (tp[0].e_in_star - 12.20331).abs() < 1e-4);
        assert_eq!(tp[1].kind, FoldKind::LowerFold);
        assert!((tp[1].e0_star - 3.42243).abs() < 1e-4 && (tp[1].e_in_star - 7.02092).abs() < 1e-4);
        let labels: Vec<bool> = cc.segments.iter().map(|s| s.stable).collect();
        assert_eq!(labels, vec![true, false, true]);
    }

    #[test]
    fn modes_fold_at_common_inputs() {
        let cc = bistable_curve();
        for mode in Mode::ALL {
            let tp = mode_turning_points(&cc.curve, mode).unwrap();
            assert_eq!(tp.len(), 2, "{mode:?}");
            for (a, b) in tp.iter().zip(&cc.turning_points) {
                assert!((a.e_in_star - b.e_in_star).abs() < 1e-6 * b.e_in_star);
            }
        }
    }

    #[test]
    fn hysteresis_jumps() {
        let cc = bistable_curve();
        let up = hysteresis(&cc, Direction::Up).unwrap();
        assert_eq!(up.jumps.len(), 1);
        let j = up.jumps[0];
        assert!((j.e_in_at_jump - 12.20331).abs() < 1e-4);
        assert!((j.e0_after - 11.065).abs() < 1e-2);
        assert!(j.after[0] > j.before[0] && j.after[1] > j.before[1] && j.after[2] < j.before[2]);

        let down = hysteresis(&cc, Direction::Down).unwrap();
        assert_eq!(down.jumps.len(), 1);
        let j = down.jumps[0];
        assert!((j.e_in_at_jump - 7.02092).abs() < 1e-4);
        assert!((j.e0_after - 0.176).abs() < 1e-2);
        assert!(j.after[0] < j.before[0] && j.after[1] < j.before[1] && j.after[2] > j.before[2]);
    }

    #[test]
    fn jumps_sit_on_the_folds() {
        let cc = bistable_curve();
        let stars: Vec<f64> = cc.turning_points.iter().map(|t| t.e_in_star).collect();
        let (lo, hi) = (stars[0].min(stars[1]), stars[0].max(stars[1]));
        assert_eq!(hysteresis(&cc, Direction::Up).unwrap().jumps[0].e_in_at_jump, hi);
        assert_eq!(hysteresis(&cc, Direction::Down).unwrap().jumps[0].e_in_at_jump, lo);
    }

    #[test]
    fn large_pump_sidebands_decay() {
        let cc = bistable_curve();
        let hi = cc.turning_points.iter().map(|t| t.e_in_star).fold(0.0, f64::max);
        let pts: Vec<&TripletSolution> =
            cc.curve.points.iter().filter(|p| p.e_in.norm() > hi && p.e0.norm() > 3.5).collect();
        assert!(pts.len() > 100);
        for w in pts.windows(2) {
            let (a, b) = (w[0].mode_moduli(), w[1].mode_moduli());
            assert!(b[0] > a[0] && b[1] < a[1] && b[2] < a[2]);
        }
    }

    #[test]
    fn red_sideband_drops_harder_than_central() {
        let cc = bistable_curve();
        let j = hysteresis(&cc, Direction::Down).unwrap().jumps[0];
        let drop = |k: usize| (j.before[k] - j.after[k]) / j.before[k];
        assert!(drop(1) > drop(0));
    }

    #[test]
    fn monotone_curve_has_no_jumps() {
        let m = bistable_model().with(|p| p.n_eff = 2.0).unwrap();
        let cc = classify_branches(sweep(&grid(0.0, 10.0, 200, false), &m, 2).unwrap()).unwrap();
        assert!(cc.turning_points.is_empty());
        assert!(cc.stable.iter().all(|&s| s));
        assert!(hysteresis(&cc, Direction::Up).unwrap().jumps.is_empty());
    }

    #[test]
    fn floquet_agrees_with_slope_labels() {
        let m = bistable_model();
        for (e0, want) in [(0.3, true), (2.0, false), (12.0, true)] {
            let p = solve_triplet(Complex64::new(e0, 0.0), &m, 2).unwrap();
            let f = floquet_check(&p, &m, 1e-11).unwrap();
            assert_eq!(f.stable(), want, "e0 = {e0}: {:?}", f.multipliers);
        }
    }
}
