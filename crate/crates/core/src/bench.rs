//! Timing and work-count comparisons between determinant schemes.

use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::evans::{evaluate_d, Coordinates, EvansError, MethodId};
use crate::integrator::Tolerance;
use crate::model::Profile;
use crate::stability::{sweep_active, Contour, StabilityError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("benchmarks refuse to run while a parallel sweep is active")]
    SweepActive,
    #[error("benchmark needs at least one method")]
    NoMethods,
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Evans(#[from] EvansError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub method: MethodId,
    /// λ value or contour description.
    pub descriptor: String,
    /// Relative tolerance (adaptive) or attained relative error (fixed mesh).
    pub achieved_tol: Option<f64>,
    /// Seconds.
    pub wall_time: f64,
    /// Accepted steps, or the mesh size N for the fixed-mesh scheme.
    pub points: usize,
    pub rhs_evaluations: usize,
    pub converged: bool,
    pub note: Option<String>,
}

/// Settings of the fixed λ-mesh timing run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedContourConfig {
    pub radius: f64,
    pub inner_radius: f64,
    pub points: usize,
    pub tol: Tolerance,
    pub coords: Coordinates,
    pub repeats: usize,
}

impl Default for FixedContourConfig {
    fn default() -> Self {
        Self {
            radius: 10.0,
            inner_radius: 1e-4,
            points: 55,
            tol: Tolerance { abs: 1e-12, rel: 1e-12 },
            coords: Coordinates::Z,
            repeats: 3,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times each method on the same fixed contour mesh, single-threaded.
///
/// Each method gets one warm-up pass and `repeats` timed passes; the wall
/// time is their median. Work counts come from the warm-up pass.
pub fn bench_fixed_contour(
    methods: &[MethodId],
    profile: &Profile,
    config: &FixedContourConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    if sweep_active() {
        return Err(BenchError::SweepActive);
    }
    if methods.is_empty() {
        return Err(BenchError::NoMethods);
    }
    let contour = Contour::new(config.radius, config.inner_radius)?.with_points(config.points.max(4))?;
    let mut lambdas = contour.points();
    lambdas.truncate(config.points);
    let descriptor = format!("R={} r={} n={}", config.radius, config.inner_radius, config.points);
    let pass = |m: MethodId| -> (usize, usize, Option<String>) {
        let mut steps = 0;
        let mut rhs = 0;
        let mut failure = None;
        for &l in &lambdas {
            match evaluate_d(m, l, profile, config.tol, config.coords) {
                Ok(s) => {
                    steps += s.stats.accepted_steps;
                    rhs += s.stats.rhs_evaluations;
                }
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                }
            }
        }
        (steps, rhs, failure)
    };
    let mut out = Vec::with_capacity(methods.len());
    for &m in methods {
        let (points, rhs_evaluations, note) = pass(m);
        let times: Vec<f64> = (0..config.repeats.max(1))
            .map(|_| {
                let t = Instant::now();
                pass(m);
                t.elapsed().as_secs_f64()
            })
            .collect();
        out.push(BenchRecord {
            method: m,
            descriptor: descriptor.clone(),
            achieved_tol: Some(config.tol.rel),
            wall_time: median(times),
            points,
            rhs_evaluations,
            converged: note.is_none(),
            note,
        });
    }
    Ok(out)
}

/// Absolute tolerance held fixed while the relative tolerance is swept.
pub const SWEEP_ABS_TOL: f64 = 1e-15;
/// Finest relative tolerance tried.
pub const SWEEP_FLOOR: i32 = 13;
/// Consecutive relative change that counts as converged.
pub const CONVERGENCE_TARGET: f64 = 1e-6;
/// Lower end of the target error window for the fixed mesh.
pub const FIXED_WINDOW_LOW: f64 = 9e-7;
/// Tolerance of the adaptive reference for the fixed mesh.
pub const REFERENCE_TOL: Tolerance = Tolerance { abs: 1e-15, rel: 1e-10 };

fn rel_diff(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm()
}

fn describe(l: Complex64) -> String {
    format!("lambda={l}")
}

/// Work needed by `method` to resolve D(λ) to 1e-6.
///
/// Adaptive schemes sweep relTol = 1e-1, 1e-2, … at absTol 1e-15 and stop when
/// consecutive values agree to 1e-6. The fixed mesh doubles N until its error
/// against an adaptive Lee–Stewart reference is below 1e-6, then bisects N
/// toward the (9e-7, 1e-6] window.
pub fn bench_convergence(
    method: MethodId,
    lambda: Complex64,
    profile: &Profile,
    coords: Coordinates,
) -> Result<BenchRecord, BenchError> {
    if sweep_active() {
        return Err(BenchError::SweepActive);
    }
    let degenerate = profile.params().heat_release() == 0.0
        && matches!(method, MethodId::MuX | MethodId::Mu | MethodId::Polar | MethodId::PolarRadial);
    if degenerate {
        return Ok(BenchRecord {
            method,
            descriptor: describe(lambda),
            achieved_tol: None,
            wall_time: 0.0,
            points: 0,
            rhs_evaluations: 0,
            converged: false,
            note: Some("uncoupled system (q = 0): forward renormalized scheme not applicable".into()),
        });
    }
    match method {
        MethodId::LeeStewartFixed(_) => fixed_convergence(lambda, profile),
        _ => adaptive_convergence(method, lambda, profile, coords),
    }
}

fn adaptive_convergence(
    method: MethodId,
    lambda: Complex64,
    profile: &Profile,
    coords: Coordinates,
) -> Result<BenchRecord, BenchError> {
    let mut previous: Option<Complex64> = None;
    let mut last_error = None;
    for j in 1..=SWEEP_FLOOR {
        let rel = 10f64.powi(-j);
        let tol = Tolerance { abs: SWEEP_ABS_TOL, rel };
        let start = Instant::now();
        let sample = match evaluate_d(method, lambda, profile, tol, coords) {
            Ok(s) => s,
            Err(e) => {
                last_error = Some(e.to_string());
                previous = None;
                continue;
            }
        };
        let time = start.elapsed().as_secs_f64();
        if let Some(p) = previous {
            if rel_diff(sample.value, p) < CONVERGENCE_TARGET {
                return Ok(BenchRecord {
                    method,
                    descriptor: describe(lambda),
                    achieved_tol: Some(rel),
                    wall_time: time,
                    points: sample.stats.accepted_steps,
                    rhs_evaluations: sample.stats.rhs_evaluations,
                    converged: true,
                    note: None,
                });
            }
        }
        previous = Some(sample.value);
    }
    Ok(BenchRecord {
        method,
        descriptor: describe(lambda),
        achieved_tol: None,
        wall_time: 0.0,
        points: 0,
        rhs_evaluations: 0,
        converged: false,
        note: Some(last_error.unwrap_or_else(|| format!("no convergence down to relTol 1e-{SWEEP_FLOOR}"))),
    })
}

fn fixed_convergence(lambda: Complex64, profile: &Profile) -> Result<BenchRecord, BenchError> {
    const MAX_STEPS: usize = 1 << 24;
    let reference = evaluate_d(MethodId::LeeStewartAdaptive, lambda, profile, REFERENCE_TOL, Coordinates::X)?.value;
    let error_at = |n: usize| -> Result<(f64, f64, usize), BenchError> {
        let start = Instant::now();
        let s = evaluate_d(MethodId::LeeStewartFixed(n), lambda, profile, REFERENCE_TOL, Coordinates::X);
        let time = start.elapsed().as_secs_f64();
        Ok(match s {
            Ok(s) => (rel_diff(reference, s.value), time, s.stats.rhs_evaluations),
            Err(_) => (f64::INFINITY, time, 0),
        })
    };
    let mut n = 16;
    let mut hit = error_at(n)?;
    while !(hit.0 <= CONVERGENCE_TARGET) {
        if n >= MAX_STEPS {
            return Ok(BenchRecord {
                method: MethodId::LeeStewartFixed(n),
                descriptor: describe(lambda),
                achieved_tol: Some(hit.0),
                wall_time: hit.1,
                points: n,
                rhs_evaluations: hit.2,
                converged: false,
                note: Some(format!("error {:e} at N = {n}", hit.0)),
            });
        }
        n *= 2;
        hit = error_at(n)?;
    }
    let (mut lo, mut hi) = (n / 2, n);
    while hit.0 <= FIXED_WINDOW_LOW && hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let trial = error_at(mid)?;
        if trial.0 <= CONVERGENCE_TARGET {
            hi = mid;
            hit = trial;
        } else {
            lo = mid;
        }
    }
    Ok(BenchRecord {
        method: MethodId::LeeStewartFixed(hi),
        descriptor: describe(lambda),
        achieved_tol: Some(hit.0),
        wall_time: hit.1,
        points: hi,
        rhs_evaluations: hit.2,
        converged: true,
        note: None,
    })
}

/// The same scheme timed in x- and z-coordinates on one λ list.
pub fn bench_coordinate_cost(
    method: MethodId,
    lambdas: &[Complex64],
    profile: &Profile,
    tol: Tolerance,
) -> Result<[BenchRecord; 2], BenchError> {
    if sweep_active() {
        return Err(BenchError::SweepActive);
    }
    let run = |coords: Coordinates| -> Result<BenchRecord, BenchError> {
        let start = Instant::now();
        let mut points = 0;
        let mut rhs = 0;
        for &l in lambdas {
            let s = evaluate_d(method, l, profile, tol, coords)?;
            points += s.stats.accepted_steps;
            rhs += s.stats.rhs_evaluations;
        }
        Ok(BenchRecord {
            method,
            descriptor: format!("{coords:?}-coordinates, {} points", lambdas.len()),
            achieved_tol: Some(tol.rel),
            wall_time: start.elapsed().as_secs_f64(),
            points,
            rhs_evaluations: rhs,
            converged: true,
            note: None,
        })
    };
    Ok([run(Coordinates::X)?, run(Coordinates::Z)?])
}

/// Two-column text table: method label and wall time.
pub fn fixed_contour_table(records: &[BenchRecord]) -> String {
    let width = records.iter().map(|r| r.method.label().chars().count()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | {:>10} | {:>10}", "method", "time (s)", "steps");
    let _ = writeln!(out, "{}", "-".repeat(width + 27));
    for r in records {
        let time = if r.converged { format!("{:.4}", r.wall_time) } else { "-".into() };
        let _ = writeln!(out, "{:<width$} | {:>10} | {:>10}", r.method.label(), time, r.points);
    }
    out
}

/// Method rows against λ columns of (Tol, Time, pnts) triples.
pub fn convergence_table(lambdas: &[Complex64], rows: &[(MethodId, Vec<BenchRecord>)]) -> String {
    let label_width = rows.iter().map(|r| r.0.label().chars().count()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "method");
    for l in lambdas {
        let _ = write!(out, " | {:^28}", format!("λ = {l}"));
    }
    out.push('\n');
    let _ = write!(out, "{:<label_width$}", "");
    for _ in lambdas {
        let _ = write!(out, " | {:>8} {:>10} {:>8}", "Tol", "Time", "pnts");
    }
    out.push('\n');
    for (m, recs) in rows {
        let _ = write!(out, "{:<label_width$}", m.label());
        for r in recs {
            if r.converged {
                let tol = r.achieved_tol.map(|t| format!("{t:.1e}")).unwrap_or_else(|| "-".into());
                let _ = write!(out, " | {:>8} {:>10.4} {:>8}", tol, r.wall_time, r.points);
            } else {
                let _ = write!(out, " | {:>8} {:>10} {:>8}", "-", "-", "-");
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
