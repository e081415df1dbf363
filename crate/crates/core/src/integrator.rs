//! Explicit Runge–Kutta integration of small ODE systems.
//!
//! States are fixed-size arrays of [`Component`]s (real or complex), so the
//! shooting systems of the determinant schemes run without allocation.  The
//! adaptive driver uses the Dormand–Prince 5(4) embedded pair with local
//! extrapolation; the fixed driver is classical RK4.

use std::ops::{Add, Mul};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the embedded pair used by [`integrate_adaptive`].
pub const ADAPTIVE_PAIR: &str = "Dormand-Prince 5(4)";

/// Scalar type usable as an ODE state component.
pub trait Component: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Component for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Component for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Mixed absolute/relative tolerance pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-6, rel: 1e-8 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Result<Self, IntegrationError> {
        if abs > 0.0 && rel > 0.0 && abs.is_finite() && rel.is_finite() {
            Ok(Self { abs, rel })
        } else {
            Err(IntegrationError::InvalidTolerance { abs, rel })
        }
    }

    /// Same value for both tolerances.
    pub fn uniform(tol: f64) -> Result<Self, IntegrationError> {
        Self::new(tol, tol)
    }
}

/// Work counters for one integration (or a sum of several).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub rhs_evaluations: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Seconds.
    pub wall_time: f64,
}

impl std::ops::AddAssign for IntegrationStats {
    fn add_assign(&mut self, other: Self) {
        self.rhs_evaluations += other.rhs_evaluations;
        self.accepted_steps += other.accepted_steps;
        self.rejected_steps += other.rejected_steps;
        self.wall_time += other.wall_time;
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("integration interval is empty or not finite ({t0} to {t1})")]
    BadInterval { t0: f64, t1: f64 },
    #[error("tolerances must be positive and finite (abs {abs}, rel {rel})")]
    InvalidTolerance { abs: f64, rel: f64 },
    #[error("fixed-step integration needs at least one step")]
    NoSteps,
}

// Dormand–Prince 5(4) tableau.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order weights minus the embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn combine<C: Component, const N: usize>(y: &[C; N], terms: &[(f64, &[C; N])]) -> [C; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        for &(w, k) in terms {
            *o = *o + k[i] * w;
        }
    }
    out
}

fn all_finite<C: Component, const N: usize>(y: &[C; N]) -> bool {
    y.iter().all(|c| c.is_finite())
}

/// Adaptive integration from `t0` to `t1` (either direction).
pub fn integrate_adaptive<C, const N: usize, F>(
    rhs: F,
    t0: f64,
    t1: f64,
    y0: [C; N],
    tol: Tolerance,
) -> Result<([C; N], IntegrationStats), IntegrationError>
where
    C: Component,
    F: FnMut(f64, &[C; N]) -> [C; N],
{
    integrate_adaptive_observed(rhs, t0, t1, y0, tol, |_, _| {})
}

/// As [`integrate_adaptive`], calling `observe(t, y)` after every accepted step.
pub fn integrate_adaptive_observed<C, const N: usize, F, O>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: [C; N],
    tol: Tolerance,
    mut observe: O,
) -> Result<([C; N], IntegrationStats), IntegrationError>
where
    C: Component,
    F: FnMut(f64, &[C; N]) -> [C; N],
    O: FnMut(f64, &[C; N]),
{
    let start = Instant::now();
    let span = t1 - t0;
    if span == 0.0 || !span.is_finite() {
        return Err(IntegrationError::BadInterval { t0, t1 });
    }
    Tolerance::new(tol.abs, tol.rel)?;
    if !all_finite(&y0) {
        return Err(IntegrationError::NonFinite { t: t0 });
    }
    let dir = span.signum();
    let min_step = 1e-14 * span.abs();
    let mut stats = IntegrationStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut h = span.abs() / 100.0;
    let mut k1 = rhs(t, &y);
    stats.rhs_evaluations += 1;
    let mut last_rejected_nonfinite = false;

    while (t1 - t) * dir > 0.0 {
        if h < min_step {
            return Err(if last_rejected_nonfinite {
                IntegrationError::NonFinite { t }
            } else {
                IntegrationError::StepUnderflow { t }
            });
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let hs = step * dir;

        let k2 = rhs(t + C2 * hs, &combine(&y, &[(hs * A21, &k1)]));
        let k3 = rhs(t + C3 * hs, &combine(&y, &[(hs * A31, &k1), (hs * A32, &k2)]));
        let k4 = rhs(
            t + C4 * hs,
            &combine(&y, &[(hs * A41, &k1), (hs * A42, &k2), (hs * A43, &k3)]),
        );
        let k5 = rhs(
            t + C5 * hs,
            &combine(
                &y,
                &[(hs * A51, &k1), (hs * A52, &k2), (hs * A53, &k3), (hs * A54, &k4)],
            ),
        );
        let t_new = if last { t1 } else { t + hs };
        let k6 = rhs(
            t_new,
            &combine(
                &y,
                &[
                    (hs * A61, &k1),
                    (hs * A62, &k2),
                    (hs * A63, &k3),
                    (hs * A64, &k4),
                    (hs * A65, &k5),
                ],
            ),
        );
        let y_new = combine(
            &y,
            &[(hs * B1, &k1), (hs * B3, &k3), (hs * B4, &k4), (hs * B5, &k5), (hs * B6, &k6)],
        );
        let k7 = rhs(t_new, &y_new);
        stats.rhs_evaluations += 6;

        let mut err = 0.0f64;
        let mut finite = all_finite(&y_new) && all_finite(&k7);
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * hs;
            let scale = tol
                .abs
                .max(tol.rel * y[i].magnitude().max(y_new[i].magnitude()));
            let r = e.magnitude() / scale;
            if !r.is_finite() {
                finite = false;
            }
            err = err.max(r);
        }

        if finite && err <= 1.0 {
            t = t_new;
            y = y_new;
            k1 = k7;
            stats.accepted_steps += 1;
            observe(t, &y);
            last_rejected_nonfinite = false;
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h = step * factor;
        } else {
            stats.rejected_steps += 1;
            last_rejected_nonfinite = !finite;
            let factor = if finite {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            h = step * factor;
        }
    }
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok((y, stats))
}

/// Classical RK4 with `steps` uniform steps; uses exactly `4 * steps` right-hand-side calls.
pub fn integrate_fixed_rk4<C, const N: usize, F>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: [C; N],
    steps: usize,
) -> Result<([C; N], IntegrationStats), IntegrationError>
where
    C: Component,
    F: FnMut(f64, &[C; N]) -> [C; N],
{
    if steps == 0 {
        return Err(IntegrationError::NoSteps);
    }
    if !(t1 - t0).is_finite() {
        return Err(IntegrationError::BadInterval { t0, t1 });
    }
    let start = Instant::now();
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for j in 0..steps {
        let t = t0 + j as f64 * h;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * h, &combine(&y, &[(0.5 * h, &k1)]));
        let k3 = rhs(t + 0.5 * h, &combine(&y, &[(0.5 * h, &k2)]));
        let k4 = rhs(t + h, &combine(&y, &[(h, &k3)]));
        y = combine(
            &y,
            &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)],
        );
    }
    let stats = IntegrationStats {
        rhs_evaluations: 4 * steps,
        accepted_steps: steps,
        rejected_steps: 0,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((y, stats))
}
