//! Harmonic-balance solution for a pump detuned from the squeezed carrier
//! (`epsilon != 0`).
//!
//! The steady orbit is expanded as `<s-> = sum a_n e^{i n epsilon t}`.
//! Dropping products of sideband coefficients leaves a three-term
//! recurrence
//!
//! ```text
//! B_n a_n + C_n a_{n+1} + D_n a_{n-1} = E_0 delta_{n,0} + H_1 delta_{n,1}
//! ```
//!
//! whose tails are closed with truncated continued fractions. The central
//! output amplitude `E0` is the free parameter; the input field follows from
//! it, so every function here is single valued.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Model;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default continued-fraction depth.
pub const DEFAULT_DEPTH: usize = 2;
/// Largest depth accepted by the solver.
pub const MAX_DEPTH: usize = 20;

/// Recurrence coefficients at one index `n`.
///
/// `e` is the driving coefficient of the recurrence, unrelated to the
/// output mode amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCoeffs {
    pub n: i64,
    pub g: Complex64,
    pub f: Complex64,
    pub y: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub e: Complex64,
    pub h: Complex64,
}

/// Central and first-sideband coefficients of the orbit at one value of
/// the central output amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletSolution {
    /// Central output amplitude `E0` (the sweep parameter).
    pub e0: Complex64,
    pub a0: Complex64,
    pub a1: Complex64,
    pub am1: Complex64,
    /// `a_2 / a_1` from the truncated fraction.
    pub x2: Complex64,
    /// `a_{-2} / a_{-1}` from the truncated fraction.
    pub ym1: Complex64,
    pub e_in: Complex64,
    /// Red-shifted output mode at `omega - epsilon`, `Lambda a_{-1}^*`.
    pub mode_p1: Complex64,
    /// Blue-shifted output mode at `omega + epsilon`, `Lambda a_1^*`.
    pub mode_m1: Complex64,
}

impl TripletSolution {
    /// Moduli `(|E0|, |E+1|, |E-1|)`.
    pub fn mode_moduli(&self) -> [f64; 3] {
        [self.e0.norm(), self.mode_p1.norm(), self.mode_m1.norm()]
    }

    /// Larger of `|a1|/|a0|` and `|a-1|/|a0|`.
    pub fn sideband_ratio(&self) -> f64 {
        self.a1.norm().max(self.am1.norm()) / self.a0.norm()
    }
}

/// Evaluates the per-index quantities that the recurrence is built from.
struct Basis<'a> {
    model: &'a Model,
    e0: Complex64,
    y0: Complex64,
}

impl<'a> Basis<'a> {
    fn new(model: &'a Model, e0: Complex64) -> Result<Self> {
        if model.epsilon() == 0.0 {
            return Err(Error::Regime(
                "epsilon = 0 has no sidebands; use the resonant solver".into(),
            ));
        }
        if !(e0.re.is_finite() && e0.im.is_finite()) {
            return Err(Error::InvalidParam { field: "e0", reason: format!("must be finite, got {e0}") });
        }
        let y0 = Complex64::new(model.gamma() * model.cosh2r(), 0.0);
        Ok(Self { model, e0, y0 })
    }

    fn y(&self, n: i64) -> Complex64 {
        Complex64::new(self.model.gamma() * self.model.cosh2r(), n as f64 * self.model.epsilon())
    }

    fn g(&self, n: i64) -> Complex64 {
        let m = self.model;
        let coop = if n == 0 { Complex64::new(0.0, 0.0) } else { m.gamma() * m.lambda().conj() / self.y0 };
        I * (n as f64 * m.epsilon() + m.omega() + coop) + 2.0 * self.e0.norm_sqr() / self.y(n)
    }

    fn f(&self, n: i64) -> Complex64 {
        let e0c = self.e0.conj();
        -2.0 * e0c * e0c / self.y(n)
    }

    /// `G*_k`, rejecting exact zeros which would make the recurrence
    /// singular at index `n`.
    fn g_conj(&self, k: i64, n: i64) -> Result<Complex64> {
        let v = self.g(k).conj();
        if v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::SingularCoefficient { n });
        }
        Ok(v)
    }

    fn coeffs(&self, n: i64) -> Result<RecurrenceCoeffs> {
        let q = self.model.q();
        let c2r = self.model.cosh2r();
        let g = self.g(n);
        let f = self.f(n);
        let gm = self.g_conj(-n, n)?;
        let gm1 = self.g_conj(1 - n, n)?;
        let b = g - f * self.f(-n).conj() / gm - q.norm_sqr() / gm1;
        let c = -q.conj() * f / gm;
        let d = -q * self.f(1 - n).conj() / gm1;
        let e = -I / c2r * (self.e0 * f / gm + self.e0.conj());
        let h = -I * q * self.e0 / (gm1 * c2r);
        Ok(RecurrenceCoeffs { n, g, f, y: self.y(n), b, c, d, e, h })
    }
}

/// Recurrence coefficients at index `n` for central amplitude `e0`.
pub fn coeffs(n: i64, e0: Complex64, model: &Model) -> Result<RecurrenceCoeffs> {
    Basis::new(model, e0)?.coeffs(n)
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::InvalidParam {
            field: "depth",
            reason: format!("must be in 1..={MAX_DEPTH}, got {depth}"),
        });
    }
    Ok(())
}

fn fraction_x(basis: &Basis, start_n: i64, depth: usize) -> Result<Complex64> {
    // x_n = -D_n / (B_n + C_n x_{n+1}), with x_{start+depth+1} = 0
    let mut x = Complex64::new(0.0, 0.0);
    for n in (start_n..=start_n + depth as i64).rev() {
        let k = basis.coeffs(n)?;
        let den = k.b + k.c * x;
        if den.norm() == 0.0 {
            return Err(Error::SingularFraction { n });
        }
        x = -k.d / den;
    }
    Ok(x)
}

fn fraction_y(basis: &Basis, depth: usize) -> Result<Complex64> {
    // y_{-n} = -C_{-(n+1)} / (B_{-(n+1)} + D_{-(n+1)} y_{-(n+1)}), with
    // y_{-(depth+2)} = 0
    let mut y = Complex64::new(0.0, 0.0);
    for n in (1..=1 + depth as i64).rev() {
        let k = basis.coeffs(-(n + 1))?;
        let den = k.b + k.d * y;
        if den.norm() == 0.0 {
            return Err(Error::SingularFraction { n: -(n + 1) });
        }
        y = -k.c / den;
    }
    Ok(y)
}

/// Ratio `x_{start_n} = a_{start_n} / a_{start_n - 1}` from the descending
/// continued fraction truncated after `depth` further levels. Depth 2 with
/// `start_n = 2` is the nested fraction through `B_4`.
pub fn continued_fraction_x(start_n: i64, depth: usize, e0: Complex64, model: &Model) -> Result<Complex64> {
    check_depth(depth)?;
    if start_n == 0 || start_n == 1 {
        return Err(Error::InvalidParam { field: "start_n", reason: "the fraction is defined for n != 0, 1".into() });
    }
    fraction_x(&Basis::new(model, e0)?, start_n, depth)
}

/// Ratio `y_{-1} = a_{-2} / a_{-1}`, the mirror of [`continued_fraction_x`].
pub fn continued_fraction_y(depth: usize, e0: Complex64, model: &Model) -> Result<Complex64> {
    check_depth(depth)?;
    fraction_y(&Basis::new(model, e0)?, depth)
}

/// Solves for `(a0, a1, a-1)` at central amplitude `e0`.
pub fn solve_triplet(e0: Complex64, model: &Model, depth: usize) -> Result<TripletSolution> {
    check_depth(depth)?;
    let basis = Basis::new(model, e0)?;
    let x2 = fraction_x(&basis, 2, depth)?;
    let ym1 = fraction_y(&basis, depth)?;
    assemble(&basis, x2, ym1)
}

fn assemble(basis: &Basis, x2: Complex64, ym1: Complex64) -> Result<TripletSolution> {
    let model = basis.model;
    let k0 = basis.coeffs(0)?;
    let k1 = basis.coeffs(1)?;
    let km1 = basis.coeffs(-1)?;
    let den_p = k1.b + k1.c * x2;
    let den_m = km1.b + km1.d * ym1;
    if den_p.norm() == 0.0 || den_m.norm() == 0.0 {
        return Err(Error::SingularSolution(format!("sideband denominator vanishes at e0 = {}", basis.e0)));
    }
    let num = k0.e - k0.c * k1.h / den_p;
    let den = k0.b - k0.d * km1.c / den_m - k0.c * k1.d / den_p;
    if den.norm() == 0.0 {
        return Err(Error::SingularSolution(format!("central denominator vanishes at e0 = {}", basis.e0)));
    }
    let a0 = num / den;
    let a1 = (k1.h - k1.d * a0) / den_p;
    let am1 = -km1.c * a0 / den_m;
    let lam = model.lambda() / model.mu();
    let out = TripletSolution {
        e0: basis.e0,
        a0,
        a1,
        am1,
        x2,
        ym1,
        e_in: basis.e0 - lam * a0.conj(),
        mode_p1: lam * am1.conj(),
        mode_m1: lam * a1.conj(),
    };
    if ![out.a0, out.a1, out.am1, out.e_in].iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::SingularSolution(format!("non-finite coefficients at e0 = {}", basis.e0)));
    }
    Ok(out)
}

/// Smallest depth `<= max_depth` at which both continued fractions agree
/// with the previous depth to `rel_tol`, or `max_depth` if none does.
pub fn converged_depth(e0: Complex64, model: &Model, max_depth: usize, rel_tol: f64) -> Result<usize> {
    check_depth(max_depth)?;
    let basis = Basis::new(model, e0)?;
    let mut prev = (fraction_x(&basis, 2, 1)?, fraction_y(&basis, 1)?);
    for depth in 2..=max_depth {
        let cur = (fraction_x(&basis, 2, depth)?, fraction_y(&basis, depth)?);
        let dx = (cur.0 - prev.0).norm() <= rel_tol * cur.0.norm();
        let dy = (cur.1 - prev.1).norm() <= rel_tol * cur.1.norm();
        if dx && dy {
            return Ok(depth);
        }
        prev = cur;
    }
    Ok(max_depth)
}

/// [`solve_triplet`] at the depth chosen by [`converged_depth`] with a
/// `1e-10` relative stopping threshold.
pub fn solve_triplet_converged(e0: Complex64, model: &Model, max_depth: usize) -> Result<TripletSolution> {
    let depth = converged_depth(e0, model, max_depth, 1e-10)?;
    solve_triplet(e0, model, depth)
}

impl TripletSolution {
    /// Inversion harmonics `(b0, b1)` implied by the triplet, with
    /// `b_{-1} = b1^*`.
    pub fn inversion_harmonics(&self, model: &Model) -> (f64, Complex64) {
        let g = model.gamma();
        let mu = model.mu();
        let c = model.cosh2r();
        let b0 = (-4.0 * mu * (self.e0 * self.a0).im - g) / (g * c);
        let direct = self.e0 * self.a1 + self.mode_p1 * self.a0;
        let conj = self.e0.conj() * self.am1.conj() + self.mode_m1.conj() * self.a0.conj();
        let b1 = 2.0 * I * mu * (direct - conj) / Complex64::new(g * c, model.epsilon());
        (b0, b1)
    }

    /// State on the orbit described by the triplet at time `t`, for
    /// warm-starting time integration.
    pub fn state_at(&self, t: f64, model: &Model) -> crate::bloch::AtomicState {
        let w = Complex64::from_polar(1.0, model.epsilon() * t);
        let (b0, b1) = self.inversion_harmonics(model);
        let s0 = b0 + 2.0 * (b1 * w).re;
        crate::bloch::AtomicState::new(s0.clamp(-1.0, 1.0), self.a0 + self.a1 * w + self.am1 / w)
    }

    /// [`state_at`](Self::state_at) at `t = 0`.
    pub fn initial_state(&self, model: &Model) -> crate::bloch::AtomicState {
        self.state_at(0.0, model)
    }
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

    fn near(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1e-12 + b.norm())
    }

    #[test]
    fn coefficients_at_index_one() {
        let k = coeffs(1, c(0.2, 0.0), &bistable_model()).unwrap();
        let want = [
            (k.g, c(33.51762678198801, 1.9749259447397778)),
            (k.f, c(-0.019345644554168054, 0.025074055260222154)),
            (k.b, c(33.098300494005514, 1.974954343227946)),
            (k.c, c(-0.0003121658189810025, 0.00045796900569545433)),
            (k.e, c(0.00010101717831865818, -0.12954199830404758)),
            (k.y, c(1.5430806348152437, 2.0)),
        ];
        for (got, w) in want {
            assert!(near(got, w, 1e-12), "{got} vs {w}");
        }
        assert!((k.d - c(-0.03699821935485445, 0.0)).norm() < 1e-14);
        assert!((k.h - c(0.0, 0.0924955483871361)).norm() < 1e-14);
    }

    #[test]
    fn fractions_and_triplet() {
        let m = bistable_model();
        let s = solve_triplet(c(0.2, 0.0), &m, DEFAULT_DEPTH).unwrap();
        assert!(near(s.x2, c(7.586576685113296e-06, -1.4575060820418004e-05), 1e-10));
        assert!(near(s.ym1, c(1.2629222166319452e-06, 9.550690843618287e-06), 1e-10));
        assert!(near(s.a0, c(0.00011906156144827679, -0.14984540146456693), 1e-11));
        assert!(near(s.a1, c(0.0001563320313282345, 0.002617741256332492), 1e-10));
        assert!(near(s.am1, c(2.1239943693986943e-06, -1.2691117205055118e-06), 1e-10));
        assert!(near(s.e_in, c(7.76719277396063, -0.006012608853137978), 1e-12));
    }

    #[test]
    fn rejects_resonant_and_bad_depth() {
        let m = Model::new(ModelParams { r: 0.5, n_eff: 10.0, ..Default::default() }).unwrap();
        assert!(matches!(solve_triplet(c(1.0, 0.0), &m, 2), Err(Error::Regime(_))));
        let m = bistable_model();
        assert!(solve_triplet(c(1.0, 0.0), &m, 0).is_err());
        assert!(solve_triplet(c(1.0, 0.0), &m, MAX_DEPTH + 1).is_err());
        assert!(continued_fraction_x(1, 2, c(1.0, 0.0), &m).is_err());
    }

    #[test]
    fn no_squeezing_no_sidebands() {
        let m = bistable_model().with(|p| p.r = 0.0).unwrap();
        for e in [0.0, 0.3, 2.0, 9.0] {
            let s = solve_triplet(c(e, 0.0), &m, 2).unwrap();
            assert_eq!(s.a1, c(0.0, 0.0));
            assert_eq!(s.am1, c(0.0, 0.0));
        }
    }

    #[test]
    fn depth_is_converged_by_two() {
        let m = bistable_model();
        for e in [0.1, 1.0, 5.0, 15.0] {
            let a = solve_triplet(c(e, 0.0), &m, 2).unwrap();
            let b = solve_triplet(c(e, 0.0), &m, 8).unwrap();
            assert!(near(a.a1, b.a1, 1e-8) && near(a.am1, b.am1, 1e-6) && near(a.a0, b.a0, 1e-10));
        }
    }

    #[test]
    fn input_recovers_central_field() {
        let m = bistable_model();
        let s = solve_triplet(c(3.0, 0.0), &m, 2).unwrap();
        let back = s.e_in + m.lambda() / m.mu() * s.a0.conj();
        let ulp = f64::EPSILON * (s.e_in.norm() + (m.lambda() * s.a0).norm());
        assert!((back - s.e0).norm() <= 4.0 * ulp);
    }

    proptest! {
        #[test]
        fn theta_only_rotates_sidebands(theta in 0.0..2.0 * PI, e in 0.05..12.0f64) {
            let m = bistable_model();
            let m2 = m.with(|p| p.theta = theta).unwrap();
            let a = solve_triplet(c(e, 0.0), &m, 2).unwrap();
            let b = solve_triplet(c(e, 0.0), &m2, 2).unwrap();
            let dth = m2.params.theta - m.params.theta;
            prop_assert!(near(a.a0, b.a0, 1e-10));
            prop_assert!(near(a.a1 * Complex64::from_polar(1.0, dth), b.a1, 1e-9));
            prop_assert!(near(a.am1 * Complex64::from_polar(1.0, -dth), b.am1, 1e-9));
        }
    }
}
