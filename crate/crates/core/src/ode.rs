//! Adaptive Dormand-Prince 5(4) integrator on fixed-size real state vectors.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth minus embedded fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrator state for `dy/dt = f(t, y)` with `D` real components.
///
/// Error control is mixed absolute/relative with the same tolerance for
/// both: each component must satisfy `|err| <= tol * (1 + |y|)`.
pub struct Dopri5<const D: usize, F> {
    f: F,
    t: f64,
    y: [f64; D],
    dy: [f64; D],
    h: f64,
    tol: f64,
    steps: usize,
}

/// Largest number of attempted steps inside one `advance_to` call.
const MAX_STEPS: usize = 50_000_000;

impl<const D: usize, F> Dopri5<D, F>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    pub fn new(mut f: F, t0: f64, y0: [f64; D], tol: f64) -> Self {
        let dy = f(t0, &y0);
        let scale = dy.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
        let h = (0.01 * tol.powf(0.2) / scale).clamp(1e-8, 0.1);
        Self { f, t: t0, y: y0, dy, h, tol, steps: 0 }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; D] {
        &self.y
    }

    /// Derivative at the current point.
    pub fn dy(&self) -> &[f64; D] {
        &self.dy
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Integrates up to exactly `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let mut attempts = 0usize;
        while self.t < t_end {
            attempts += 1;
            if attempts > MAX_STEPS {
                return Err(fail(self.t, "step budget exhausted"));
            }
            let remaining = t_end - self.t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            let (y_new, dy_new, err) = self.trial(h);
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                self.h *= 0.25;
                if self.h < self.h_floor() {
                    return Err(fail(self.t, "non-finite state"));
                }
                continue;
            }
            if err <= 1.0 {
                self.t = if last { t_end } else { self.t + h };
                self.y = y_new;
                self.dy = dy_new;
                self.steps += 1;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a clamped final step says nothing about the natural size
                if !last || h * grow > self.h {
                    self.h = h * grow;
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                if self.h < self.h_floor() {
                    return Err(fail(self.t, "step size underflow"));
                }
            }
        }
        Ok(())
    }

    fn h_floor(&self) -> f64 {
        1e-14 * self.t.abs().max(1.0)
    }

    fn trial(&mut self, h: f64) -> ([f64; D], [f64; D], f64) {
        let t = self.t;
        let y = &self.y;
        let k1 = self.dy;
        let f = &mut self.f;
        let k2 = f(t + C2 * h, &comb(y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &comb(y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &comb(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &comb(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &comb(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = comb(y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y_new);
        let mut acc = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            acc += (e / sc).powi(2);
        }
        (y_new, k7, (acc / D as f64).sqrt())
    }
}

fn comb<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (a, k) in terms {
        for i in 0..D {
            out[i] += h * a * k[i];
        }
    }
    out
}

fn fail(time: f64, reason: &str) -> Error {
    Error::Integration { time, reason: reason.to_string() }
}
