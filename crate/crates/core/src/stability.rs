//! Root counting on semicircular contours, truncation radii, parameter
//! sweeps, and the closed-form determinant for φ ≡ 1.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::evans::{comparable_d, Coordinates, DeterminantSample, EvansError, MethodId};
use crate::integrator::{IntegrationStats, Tolerance};
use crate::linalg::Mat2;
use crate::model::{
    numerical_infinity, Convention, IgnitionKind, InfinityStrategy, ModelError, ModelParams, Profile, ProfilePoint,
    NEUMANN_STATE, RATE,
};
use crate::quad::{self, QuadratureError};

/// Largest acceptable relative change of D between neighbouring contour points.
pub const MAX_RELATIVE_STEP: f64 = 0.2;
/// Largest acceptable argument change (radians) between neighbouring contour points.
pub const MAX_ARGUMENT_STEP: f64 = 0.2;
/// Refinement rounds before giving up.
pub const REFINEMENT_CAP: usize = 12;
/// Allowed distance (radians) of the argument sum from a multiple of 2π.
pub const WINDING_SLACK: f64 = 0.1;
/// Largest predicted |Δ log f| on a segment, from the sampled log-derivative.
pub const MAX_PREDICTED_STEP: f64 = 1.0;
/// Probe offset relative to |λ|.
pub const PROBE_OFFSET: f64 = 1e-4;
/// Default indentation radius around the origin.
pub const DEFAULT_INNER_RADIUS: f64 = 1e-4;
/// Default number of initial contour points.
pub const DEFAULT_INITIAL_POINTS: usize = 20;
/// Sample count on the quarter arc used for the high-frequency fit.
pub const FIT_POINTS: usize = 20;
/// End-state tolerance used to size the domain in sweeps.
pub const SWEEP_ENDSTATE_TOL: f64 = 1e-8;

static ACTIVE_SWEEPS: AtomicUsize = AtomicUsize::new(0);

/// Whether a parallel sweep is running in this process.
pub fn sweep_active() -> bool {
    ACTIVE_SWEEPS.load(Ordering::SeqCst) > 0
}

struct SweepGuard;

impl SweepGuard {
    fn new() -> Self {
        ACTIVE_SWEEPS.fetch_add(1, Ordering::SeqCst);
        SweepGuard
    }
}

impl Drop for SweepGuard {
    fn drop(&mut self) {
        ACTIVE_SWEEPS.fetch_sub(1, Ordering::SeqCst);
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("contour needs 0 < inner radius < radius (got {inner} and {radius})")]
    BadContour { radius: f64, inner: f64 },
    #[error("contour needs at least 4 initial points (got {0})")]
    TooFewPoints(usize),
    #[error("mesh still too coarse after {0} refinement rounds")]
    RefinementCap(usize),
    #[error("argument sum {turns} turns is not close to an integer")]
    NonInteger { turns: f64 },
    #[error("determinant vanishes on the contour at lambda = {0}")]
    ZeroOnContour(Complex64),
    #[error("radius doubling exceeded {0}")]
    RadiusCap(f64),
    #[error("radius must be positive (got {0})")]
    BadRadius(f64),
    #[error(transparent)]
    Evans(#[from] EvansError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Boundary of {Re λ ≥ 0, r ≤ |λ| ≤ R}, traversed counterclockwise.
///
/// Parametrized by s ∈ [0, 4): outer arc, upper imaginary axis inward,
/// inner arc, lower imaginary axis outward. On the axes |λ| − r grows
/// quadratically with the distance from the inner arc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Contour {
    pub radius: f64,
    pub inner_radius: f64,
    pub initial_points: usize,
}

impl Contour {
    pub fn new(radius: f64, inner_radius: f64) -> Result<Self, StabilityError> {
        if !(inner_radius > 0.0 && inner_radius < radius && radius.is_finite()) {
            return Err(StabilityError::BadContour { radius, inner: inner_radius });
        }
        Ok(Self { radius, inner_radius, initial_points: DEFAULT_INITIAL_POINTS })
    }

    pub fn with_points(mut self, n: usize) -> Result<Self, StabilityError> {
        if n < 4 {
            return Err(StabilityError::TooFewPoints(n));
        }
        self.initial_points = n;
        Ok(self)
    }

    pub fn point(&self, s: f64) -> Complex64 {
        let (big, small) = (self.radius, self.inner_radius);
        let s = s.rem_euclid(4.0);
        let piece = (s.floor() as usize).min(3);
        let t = s - piece as f64;
        match piece {
            0 => Complex64::from_polar(big, -PI / 2.0 + PI * t),
            1 => Complex64::new(0.0, small + (big - small) * (1.0 - t) * (1.0 - t)),
            2 => Complex64::from_polar(small, PI / 2.0 - PI * t),
            _ => Complex64::new(0.0, -(small + (big - small) * t * t)),
        }
    }

    pub fn initial_parameters(&self) -> Vec<f64> {
        let n = self.initial_points;
        (0..n).map(|j| 4.0 * j as f64 / n as f64).collect()
    }

    /// The initial mesh.
    pub fn points(&self) -> Vec<Complex64> {
        self.initial_parameters().into_iter().map(|s| self.point(s)).collect()
    }
}

/// One evaluated contour point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContourPoint {
    /// Contour parameter in [0, 4).
    pub s: f64,
    pub lambda: Complex64,
    pub value: Complex64,
    /// Estimate of |d log f/dλ| from a nearby probe evaluation.
    pub log_rate: f64,
    /// Work for the point and its probe.
    pub stats: IntegrationStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindingResult {
    pub winding: i64,
    /// Final mesh in contour order; `value` is the function whose argument was counted.
    pub samples: Vec<ContourPoint>,
    pub refinements: usize,
    pub max_step_arg_change: f64,
    pub max_relative_step: f64,
}

impl WindingResult {
    pub fn points(&self) -> usize {
        self.samples.len()
    }

    pub fn total_stats(&self) -> IntegrationStats {
        let mut total = IntegrationStats::default();
        for p in &self.samples {
            total += p.stats;
        }
        total
    }
}

fn values_ok(a: Complex64, b: Complex64) -> bool {
    let rel = (b - a).norm() / a.norm().min(b.norm());
    rel <= MAX_RELATIVE_STEP && (b / a).arg().abs() <= MAX_ARGUMENT_STEP
}

// The rate test catches whole turns between samples, which the value test cannot see.
fn segment_ok(a: &ContourPoint, b: &ContourPoint) -> bool {
    values_ok(a.value, b.value) && a.log_rate.max(b.log_rate) * (b.lambda - a.lambda).norm() <= MAX_PREDICTED_STEP
}

/// Adaptive argument-principle count for any function evaluated along `contour`.
pub fn winding_with<F>(contour: &Contour, f: F) -> Result<WindingResult, StabilityError>
where
    F: Fn(Complex64) -> Result<(Complex64, IntegrationStats), StabilityError> + Sync,
{
    let eval = |params: Vec<f64>| -> Result<Vec<ContourPoint>, StabilityError> {
        params
            .into_par_iter()
            .map(|s| {
                let lambda = contour.point(s);
                let (value, mut stats) = f(lambda)?;
                if value.norm() == 0.0 {
                    return Err(StabilityError::ZeroOnContour(lambda));
                }
                let delta = lambda * PROBE_OFFSET;
                let (probe, probe_stats) = f(lambda + delta)?;
                stats += probe_stats;
                let log_rate = (probe / value).ln().norm() / delta.norm();
                Ok(ContourPoint { s, lambda, value, log_rate, stats })
            })
            .collect()
    };
    let mut mesh = eval(contour.initial_parameters())?;
    let mut refinements = 0;
    loop {
        let n = mesh.len();
        let mut fresh = Vec::new();
        for j in 0..n {
            let a = &mesh[j];
            let b = &mesh[(j + 1) % n];
            if !segment_ok(a, b) {
                let end = if j + 1 == n { 4.0 } else { b.s };
                fresh.push(0.5 * (a.s + end));
            }
        }
        if fresh.is_empty() {
            break;
        }
        if refinements == REFINEMENT_CAP {
            return Err(StabilityError::RefinementCap(REFINEMENT_CAP));
        }
        refinements += 1;
        mesh.extend(eval(fresh)?);
        mesh.sort_by(|a, b| a.s.total_cmp(&b.s));
    }
    let n = mesh.len();
    let mut total = 0.0;
    let mut max_arg = 0.0f64;
    let mut max_rel = 0.0f64;
    for j in 0..n {
        let a = mesh[j].value;
        let b = mesh[(j + 1) % n].value;
        let d = (b / a).arg();
        total += d;
        max_arg = max_arg.max(d.abs());
        max_rel = max_rel.max((b - a).norm() / a.norm().min(b.norm()));
    }
    let turns = total / (2.0 * PI);
    let winding = turns.round();
    if (total - winding * 2.0 * PI).abs() > WINDING_SLACK {
        return Err(StabilityError::NonInteger { turns });
    }
    Ok(WindingResult {
        winding: winding as i64,
        samples: mesh,
        refinements,
        max_step_arg_change: max_arg,
        max_relative_step: max_rel,
    })
}

/// Winding number of D (or D/λ when `reduced`) computed with `method`, via [`comparable_d`].
pub fn winding_number(
    method: MethodId,
    contour: &Contour,
    profile: &Profile,
    tol: Tolerance,
    coords: Coordinates,
    reduced: bool,
) -> Result<WindingResult, StabilityError> {
    winding_with(contour, |lambda| {
        let DeterminantSample { value, stats, .. } = comparable_d(method, lambda, profile, tol, coords)?;
        Ok((if reduced { value / lambda } else { value }, stats))
    })
}

/// Final mesh sizes of the reduced and unreduced winding runs.
pub fn reduced_vs_unreduced_cost(
    method: MethodId,
    contour: &Contour,
    profile: &Profile,
    tol: Tolerance,
    coords: Coordinates,
) -> Result<(usize, usize), StabilityError> {
    let reduced = winding_number(method, contour, profile, tol, coords, true)?;
    let unreduced = winding_number(method, contour, profile, tol, coords, false)?;
    Ok((reduced.points(), unreduced.points()))
}

/// Least-squares fit of log(D/λ) by K0 + K1/λ + K2/λ² on a quarter arc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HighFreqFit {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    /// Complex coefficients of the fit; `k0`, `k1`, `k2` are their real parts.
    pub coefficients: [Complex64; 3],
    /// Maximum over the arc of |D/λ − exp(fit)|/|D/λ|.
    pub rel_error: f64,
    pub radius: f64,
}

/// Complex least squares by modified Gram–Schmidt.
fn least_squares<const P: usize>(rows: &[[Complex64; P]], rhs: &[Complex64]) -> [Complex64; P] {
    let m = rows.len();
    let mut q: Vec<Vec<Complex64>> = (0..P).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut r = [[Complex64::new(0.0, 0.0); P]; P];
    for j in 0..P {
        for i in 0..j {
            let proj: Complex64 = (0..m).map(|k| q[i][k].conj() * q[j][k]).sum();
            r[i][j] = proj;
            for k in 0..m {
                let qi = q[i][k];
                q[j][k] -= proj * qi;
            }
        }
        let n = q[j].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        r[j][j] = Complex64::new(n, 0.0);
        for c in q[j].iter_mut() {
            *c /= n;
        }
    }
    let qtb: Vec<Complex64> = (0..P).map(|j| (0..m).map(|k| q[j][k].conj() * rhs[k]).sum()).collect();
    let mut x = [Complex64::new(0.0, 0.0); P];
    for j in (0..P).rev() {
        let mut acc = qtb[j];
        for i in j + 1..P {
            acc -= r[j][i] * x[i];
        }
        x[j] = acc / r[j][j];
    }
    x
}

/// Fits the reduced determinant on the quarter arc of radius `radius`.
pub fn fit_high_frequency(
    method: MethodId,
    profile: &Profile,
    radius: f64,
    tol: Tolerance,
    coords: Coordinates,
) -> Result<HighFreqFit, StabilityError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(StabilityError::BadRadius(radius));
    }
    let lambdas: Vec<Complex64> = (0..FIT_POINTS)
        .map(|j| Complex64::from_polar(radius, 0.5 * PI * j as f64 / (FIT_POINTS - 1) as f64))
        .collect();
    let values: Vec<Complex64> = lambdas
        .par_iter()
        .map(|&l| Ok(comparable_d(method, l, profile, tol, coords)?.value / l))
        .collect::<Result<_, StabilityError>>()?;
    let mut logs = Vec::with_capacity(values.len());
    let mut previous: Option<f64> = None;
    for v in &values {
        let mut phase = v.arg();
        if let Some(p) = previous {
            phase += 2.0 * PI * ((p - phase) / (2.0 * PI)).round();
        }
        previous = Some(phase);
        logs.push(Complex64::new(v.norm().ln(), phase));
    }
    // Basis scaled by R so the columns have unit size.
    let rows: Vec<[Complex64; 3]> = lambdas
        .iter()
        .map(|&l| {
            let w = radius / l;
            [Complex64::new(1.0, 0.0), w, w * w]
        })
        .collect();
    let c = least_squares(&rows, &logs);
    let coefficients = [c[0], c[1] * radius, c[2] * radius * radius];
    let rel_error = lambdas
        .iter()
        .zip(&values)
        .map(|(&l, &v)| {
            let fit = (coefficients[0] + coefficients[1] / l + coefficients[2] / (l * l)).exp();
            (v - fit).norm() / v.norm()
        })
        .fold(0.0, f64::max);
    Ok(HighFreqFit {
        k0: coefficients[0].re,
        k1: coefficients[1].re,
        k2: coefficients[2].re,
        coefficients,
        rel_error,
        radius,
    })
}

/// Fit error below which a radius is acceptable.
pub const FIT_ERROR_BOUND: f64 = 0.2;
/// Largest accepted error ratio between radius 2R and R.
pub const FIT_DECAY_RATIO: f64 = 0.7;
/// A fit error at or below this level is accepted without the decay test.
pub const FIT_NOISE_FLOOR: f64 = 1e-6;

/// Doubles the radius from `start` until the fit error is at most
/// [`FIT_ERROR_BOUND`] and doubling again shrinks it by [`FIT_DECAY_RATIO`] or better,
/// or until the error is down to [`FIT_NOISE_FLOOR`].
pub fn determine_radius_fit(
    method: MethodId,
    profile: &Profile,
    start: f64,
    tol: Tolerance,
    coords: Coordinates,
) -> Result<HighFreqFit, StabilityError> {
    if !(start > 0.0 && start.is_finite()) {
        return Err(StabilityError::BadRadius(start));
    }
    let cap = start * 2f64.powi(20);
    let mut current = fit_high_frequency(method, profile, start, tol, coords)?;
    loop {
        if current.rel_error <= FIT_NOISE_FLOOR {
            return Ok(current);
        }
        let next = fit_high_frequency(method, profile, 2.0 * current.radius, tol, coords)?;
        if current.rel_error <= FIT_ERROR_BOUND && next.rel_error <= FIT_DECAY_RATIO * current.rel_error {
            return Ok(current);
        }
        if next.radius > cap {
            return Err(StabilityError::RadiusCap(cap));
        }
        current = next;
    }
}

/// γ above which the rigorous bound is reported as not practical.
pub const GAMMA_PRACTICAL_LIMIT: f64 = 50.0;
/// e^γ from which the rigorous bound is flagged as conservative.
pub const CONSERVATIVE_GROWTH: f64 = 10.0;

/// Sampled version of the high-frequency non-vanishing bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusBound {
    pub gamma: f64,
    /// Sampled suprema at the returned radius.
    pub c1: f64,
    pub c2: f64,
    /// Radius with the e^γ factor; `None` when not practical.
    pub radius: Option<f64>,
    /// Radius without the e^γ factor, valid for Re λ ≥ `re_lambda_threshold`.
    pub radius_without_growth: Option<f64>,
    pub re_lambda_threshold: f64,
    pub practical: bool,
    pub conservative: bool,
    /// Always false: C₁ and C₂ are sampled, not proven.
    pub rigorous: bool,
}

/// γ in closed form for each ignition kind.
pub fn growth_exponent(params: &ModelParams) -> f64 {
    let q = params.heat_release();
    let e = params.activation_energy();
    match params.kind() {
        IgnitionKind::Constant => 0.0,
        IgnitionKind::Arrhenius => {
            let u = params.burned_state();
            q * e / (u * u)
        }
        IgnitionKind::ModifiedArrhenius => {
            if q <= 0.375 {
                0.0
            } else {
                4.0 / 3.0 * q * e
            }
        }
    }
}

const BOUND_Z_GRID: usize = 10_000;
const BOUND_EPS_LEVELS: i32 = 10;
const BOUND_DIRECTIONS: usize = 17;

struct Transform {
    a: Complex64,
    b: Complex64,
}

fn transform(p: &ProfilePoint, dir: Complex64, eps: f64, q: f64) -> Transform {
    let k = RATE;
    let react = k * p.dphi * p.z;
    let shift = eps * (k * p.phi + q * react);
    let lc = dir.conj();
    Transform {
        a: react / (-lc * p.u - shift),
        b: q * k * p.phi * (p.u - 1.0) / (lc * p.u + shift),
    }
}

/// Profile points at z = i/N and at z ± h for the finite differences in z.
struct BoundGrid {
    center: Vec<ProfilePoint>,
    below: Vec<ProfilePoint>,
    above: Vec<ProfilePoint>,
}

impl BoundGrid {
    fn new(params: &ModelParams) -> Self {
        let h = 1e-6;
        let zs: Vec<f64> = (0..=BOUND_Z_GRID).map(|i| i as f64 / BOUND_Z_GRID as f64).collect();
        let at = |z: f64| ProfilePoint::at(params, z.clamp(0.0, 1.0));
        Self {
            center: zs.iter().map(|&z| at(z)).collect(),
            below: zs.iter().map(|&z| at(z - h)).collect(),
            above: zs.iter().map(|&z| at(z + h)).collect(),
        }
    }
}

/// B̂₁ and B̂₂ at grid node `i`, with a_x = (da/dz)·kφz̄ and b_x likewise.
fn scaled_remainders(grid: &BoundGrid, i: usize, q: f64, dir: Complex64, eps: f64) -> (Mat2, Mat2) {
    let k = RATE;
    let p = &grid.center[i];
    let (lo, hi) = (&grid.below[i], &grid.above[i]);
    let spacing = hi.z - lo.z;
    let tl = transform(lo, dir, eps, q);
    let th = transform(hi, dir, eps, q);
    let t = transform(p, dir, eps, q);
    let dzdx = p.dz_dx();
    let a_x = (th.a - tl.a) / spacing * dzdx;
    let b_x = (th.b - tl.b) / spacing * dzdx;
    let (a, b) = (t.a, t.b);
    let det = 1.0 - a * b * eps * eps;
    let gap = p.u - 1.0;
    let react = k * p.dphi * p.z;
    let lc = dir.conj();
    let qkphi = q * k * p.phi;
    let b1 = Mat2::new(
        -a * qkphi + b * react / gap - a * b * (lc + k * p.phi),
        -a * a * qkphi + a_x / det,
        b_x / det + b * b * react / gap,
        a * qkphi - b * react / gap - a * b * (lc - q * react) / gap,
    );
    let zero = Complex64::new(0.0, 0.0);
    let b2 = Mat2::new(-a * b_x / det, zero, zero, b * a_x / det);
    let inv = Complex64::new(1.0 / p.phi, 0.0);
    (b1.scale(inv), b2.scale(inv))
}

fn directions() -> Vec<Complex64> {
    (0..BOUND_DIRECTIONS)
        .map(|j| Complex64::from_polar(1.0, -PI / 2.0 + PI * j as f64 / (BOUND_DIRECTIONS - 1) as f64))
        .collect()
}

/// Sampled sup over z of ‖dB̂ⱼ/dz‖ for ε ∈ {0} ∪ {2⁻ʲ ε_max} and unit directions in the right half plane.
fn sampled_constants(grid: &BoundGrid, q: f64, eps_max: f64) -> (f64, f64) {
    let mut eps_grid = vec![0.0];
    eps_grid.extend((0..=BOUND_EPS_LEVELS).map(|j| eps_max * 2f64.powi(-j)));
    let cases: Vec<(f64, Complex64)> =
        eps_grid.iter().flat_map(|&e| directions().into_iter().map(move |d| (e, d))).collect();
    let dz = 1.0 / BOUND_Z_GRID as f64;
    cases
        .par_iter()
        .map(|&(eps, dir)| {
            let mut c = (0.0f64, 0.0f64);
            let mut prev = scaled_remainders(grid, 0, q, dir, eps);
            for i in 1..=BOUND_Z_GRID {
                let cur = scaled_remainders(grid, i, q, dir, eps);
                c.0 = c.0.max((cur.0 - prev.0).norm() / dz);
                c.1 = c.1.max((cur.1 - prev.1).norm() / dz);
                prev = cur;
            }
            c
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)))
}

fn shock_transform_max(params: &ModelParams, eps: f64) -> (f64, f64) {
    let p = ProfilePoint::at(params, 1.0);
    directions()
        .into_iter()
        .map(|dir| transform(&p, dir, eps, params.heat_release()))
        .fold((0.0f64, 0.0f64), |acc, t| (acc.0.max(t.a.norm()), acc.1.max(t.b.norm())))
}

/// Smallest sampled R with R ≥ `requirement(R)`, by doubling or halving then bisection.
fn fixed_point_radius<F: FnMut(f64) -> f64>(mut requirement: F) -> Option<f64> {
    let holds = |r: f64, req: &mut F| req(r) <= r;
    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    if holds(hi, &mut requirement) {
        while holds(lo, &mut requirement) {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-6 {
                return Some(hi);
            }
        }
    } else {
        let mut doublings = 0;
        while !holds(hi, &mut requirement) {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 60 {
                return None;
            }
        }
    }
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if holds(mid, &mut requirement) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Radius beyond which D has no zeros in Re λ ≥ 0, with sampled constants.
pub fn rigorous_radius_bound(params: &ModelParams) -> RadiusBound {
    let k = RATE;
    let q = params.heat_release();
    let gamma = growth_exponent(params);
    let practical = gamma <= GAMMA_PRACTICAL_LIMIT;
    let growth = gamma.exp();
    let phi_shock = params.phi(NEUMANN_STATE);
    let threshold = (0..=BOUND_Z_GRID)
        .map(|i| {
            let p = ProfilePoint::at(params, i as f64 / BOUND_Z_GRID as f64);
            (q * k * p.dphi * p.z - k * p.phi) / p.u
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let grid = BoundGrid::new(params);
    let requirement = |factor: f64| {
        let grid = &grid;
        move |r: f64| {
            let eps = 1.0 / r;
            let (c1, c2) = sampled_constants(grid, q, eps);
            let first = 2.0 * factor / k * (c1 + eps * c2);
            let omega = eps * factor / k * (c1 + eps * c2);
            let (a0, b0) = shock_transform_max(params, eps);
            let denom = 1.0 - eps * a0 * omega;
            let omega2 = if denom > 0.0 { (eps * b0 + omega) / denom } else { f64::INFINITY };
            first.max(0.5 * k * phi_shock * (q + omega2))
        }
    };
    let radius = if practical { fixed_point_radius(requirement(growth)) } else { None };
    let radius_without_growth = if gamma == 0.0 && practical { radius } else { fixed_point_radius(requirement(1.0)) };
    let at = radius.or(radius_without_growth).unwrap_or(f64::INFINITY);
    let (c1, c2) = if at.is_finite() && at > 0.0 { sampled_constants(&grid, q, 1.0 / at) } else { (f64::NAN, f64::NAN) };
    RadiusBound {
        gamma,
        c1,
        c2,
        radius,
        radius_without_growth,
        re_lambda_threshold: threshold,
        practical: practical && radius.is_some(),
        conservative: growth >= CONSERVATIVE_GROWTH,
        rigorous: false,
    }
}

/// Closed-form D(λ) for φ ≡ 1, with the inner integral by quadrature.
pub fn exact_d(lambda: Complex64, q: f64, k: f64) -> Result<Complex64, StabilityError> {
    const TOL: f64 = 1e-10;
    let root = |y: f64| (1.0 - 2.0 * q * (1.0 - (k * y).exp())).sqrt();
    let inner = |y: f64| -> Result<f64, QuadratureError> { quad::integrate(|s: f64| 1.0 / root(s), y, 0.0, 1e-13) };
    let decay = k + lambda.re;
    let length = 14.0 * 10f64.ln() / decay;
    let mut failure: Option<QuadratureError> = None;
    let psi: Complex64 = quad::integrate(
        |y: f64| match inner(y) {
            Ok(i) => (-lambda * i + (k + lambda) * y).exp() / root(y),
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        },
        -length,
        0.0,
        TOL,
    )?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok((2.0 * lambda + (2.0 - q - q * k * psi)) * (lambda / (k + lambda)))
}

/// One row of a stability sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub activation_energy: f64,
    pub heat_release: f64,
    pub radius: f64,
    pub winding: Option<i64>,
    pub mesh_points: usize,
    pub max_relative_step: f64,
    /// Seconds.
    pub time: f64,
    pub error: Option<String>,
}

/// Settings shared by every row of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub kind: IgnitionKind,
    pub convention: Convention,
    pub method: MethodId,
    pub tol: Tolerance,
    pub inner_radius: f64,
    pub initial_points: usize,
    pub fit_start: f64,
}

impl SweepConfig {
    pub fn new(kind: IgnitionKind, convention: Convention, method: MethodId) -> Self {
        Self {
            kind,
            convention,
            method,
            tol: Tolerance { abs: 1e-8, rel: 1e-8 },
            inner_radius: DEFAULT_INNER_RADIUS,
            initial_points: DEFAULT_INITIAL_POINTS,
            fit_start: 1.0,
        }
    }
}

/// Profile truncated where it meets the burned state to [`SWEEP_ENDSTATE_TOL`].
pub fn standard_profile(params: ModelParams) -> Result<Profile, StabilityError> {
    let t = numerical_infinity(&params, SWEEP_ENDSTATE_TOL, InfinityStrategy::Endstate)?;
    Ok(Profile::from_z_start(params, t.z_start)?)
}

/// Sweep radius max(2ℰ, fitted radius) and the reduced winding number there.
pub fn stability_point(
    energy: f64,
    q: f64,
    config: &SweepConfig,
) -> Result<(f64, WindingResult), StabilityError> {
    let params = ModelParams::with_convention(config.kind, q, energy, config.convention)?;
    let profile = standard_profile(params)?;
    let fit = determine_radius_fit(config.method, &profile, config.fit_start, config.tol, Coordinates::Z)?;
    let radius = fit.radius.max(2.0 * energy);
    let contour = Contour::new(radius, config.inner_radius)?.with_points(config.initial_points)?;
    let w = winding_number(config.method, &contour, &profile, config.tol, Coordinates::Z, true)?;
    Ok((radius, w))
}

/// Runs [`stability_point`] over a grid of (ℰ, q); rows keep the grid order.
pub fn stability_sweep(grid: &[(f64, f64)], config: &SweepConfig) -> Vec<SweepRow> {
    let _guard = SweepGuard::new();
    grid.par_iter()
        .map(|&(energy, q)| {
            let start = Instant::now();
            let result = stability_point(energy, q, config);
            let time = start.elapsed().as_secs_f64();
            match result {
                Ok((radius, w)) => SweepRow {
                    activation_energy: energy,
                    heat_release: q,
                    radius,
                    winding: Some(w.winding),
                    mesh_points: w.points(),
                    max_relative_step: w.max_relative_step,
                    time,
                    error: None,
                },
                Err(e) => SweepRow {
                    activation_energy: energy,
                    heat_release: q,
                    radius: f64::NAN,
                    winding: None,
                    mesh_points: 0,
                    max_relative_step: f64::NAN,
                    time,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
