//! Ignition functions, parametrization and the ZND traveling-wave profile.
//!
//! With the scalings fixed here (rate k = 1, shock speed s = 1, Neumann state
//! u* = 2, upstream state u⁺ = 0) a model instance is determined by the heat
//! release q, the activation energy ℰ, the prefactor C and the ignition kind.
//! The profile is explicit in the reactant coordinate, ū(z) = 1 + √(1 − 2q(1 − z)),
//! while z̄(x) solves z′ = kφ(ū(z))z with z̄(0) = 1.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{integrate_adaptive_observed, IntegrationError, Tolerance};
use crate::quad::{self, QuadratureError};

/// Reaction rate k.
pub const RATE: f64 = 1.0;
/// Shock speed s.
pub const SHOCK_SPEED: f64 = 1.0;
/// Post-shock (Neumann) state u*.
pub const NEUMANN_STATE: f64 = 2.0;
/// Quiescent upstream state u⁺.
pub const UPSTREAM_STATE: f64 = 0.0;
/// Default threshold on φ(2)/max φ below which a profile counts as a square wave.
pub const SQUARE_WAVE_THRESHOLD: f64 = 1e-3;

const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("heat release q = {0} outside [0, 1/2)")]
    HeatRelease(f64),
    #[error("activation energy {0} must be finite and nonnegative")]
    ActivationEnergy(f64),
    #[error("prefactor {0} must be finite and positive")]
    Prefactor(f64),
    #[error("ignition temperature T({u}) is not positive")]
    NonPositiveTemperature { u: f64 },
    #[error("negative radicand at z = {z}, q = {q}")]
    NegativeRadicand { z: f64, q: f64 },
    #[error("truncation length {0} must be finite and positive")]
    Truncation(f64),
    #[error("starting reactant value {0} must lie in (0, 1)")]
    StartValue(f64),
    #[error("profile integration failed near x = {x}: {source}")]
    Integration { x: f64, source: IntegrationError },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("bisection for the prefactor has no sign change on log10 C in [-20, 20]")]
    Bracket,
    #[error("profile carries no x-coordinate table")]
    NoTable,
    #[error("x = {x} lies outside the profile table [{left}, 0]")]
    OutsideTable { x: f64, left: f64 },
    #[error("numerical infinity not found within {cap} refinements")]
    NotConverged { cap: usize },
    #[error("determinant evaluation failed while sizing the domain: {0}")]
    Determinant(String),
}

/// Shape of the ignition function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IgnitionKind {
    /// φ ≡ 1.
    Constant,
    /// T(u) = u.
    Arrhenius,
    /// T(u) = 1 − (u − 1.5)².
    ModifiedArrhenius,
}

impl IgnitionKind {
    pub fn temperature(self, u: f64) -> f64 {
        match self {
            IgnitionKind::Constant | IgnitionKind::Arrhenius => u,
            IgnitionKind::ModifiedArrhenius => 1.0 - (u - 1.5) * (u - 1.5),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IgnitionKind::Constant => "constant",
            IgnitionKind::Arrhenius => "arrhenius",
            IgnitionKind::ModifiedArrhenius => "modified",
        }
    }
}

impl fmt::Display for IgnitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IgnitionKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(IgnitionKind::Constant),
            "arrhenius" => Ok(IgnitionKind::Arrhenius),
            "modified" | "modified-arrhenius" => Ok(IgnitionKind::ModifiedArrhenius),
            other => Err(format!("unknown ignition kind '{other}'")),
        }
    }
}

/// Validated model parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    kind: IgnitionKind,
    heat_release: f64,
    activation_energy: f64,
    prefactor: f64,
}

impl ModelParams {
    pub fn new(kind: IgnitionKind, heat_release: f64, activation_energy: f64, prefactor: f64) -> Result<Self, ModelError> {
        if !(0.0..0.5).contains(&heat_release) {
            return Err(ModelError::HeatRelease(heat_release));
        }
        if !(activation_energy >= 0.0 && activation_energy.is_finite()) {
            return Err(ModelError::ActivationEnergy(activation_energy));
        }
        if !(prefactor > 0.0 && prefactor.is_finite()) {
            return Err(ModelError::Prefactor(prefactor));
        }
        let (activation_energy, prefactor) = match kind {
            IgnitionKind::Constant => (0.0, 1.0),
            _ => (activation_energy, prefactor),
        };
        Ok(Self { kind, heat_release, activation_energy, prefactor })
    }

    /// The φ ≡ 1 model.
    pub fn constant(heat_release: f64) -> Result<Self, ModelError> {
        Self::new(IgnitionKind::Constant, heat_release, 0.0, 1.0)
    }

    /// Builds parameters with the prefactor fixed by `convention`.
    pub fn with_convention(
        kind: IgnitionKind,
        heat_release: f64,
        activation_energy: f64,
        convention: Convention,
    ) -> Result<Self, ModelError> {
        let c = normalization_constant(kind, heat_release, activation_energy, convention)?;
        Self::new(kind, heat_release, activation_energy, c)
    }

    pub fn kind(&self) -> IgnitionKind {
        self.kind
    }
    pub fn heat_release(&self) -> f64 {
        self.heat_release
    }
    pub fn activation_energy(&self) -> f64 {
        self.activation_energy
    }
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// Left (burned) endstate u⁻ = 1 + √(1 − 2q).
    pub fn burned_state(&self) -> f64 {
        1.0 + (1.0 - 2.0 * self.heat_release).sqrt()
    }

    /// Ignition function φ(u).
    pub fn phi(&self, u: f64) -> f64 {
        if self.kind == IgnitionKind::Constant {
            return 1.0;
        }
        let t = self.kind.temperature(u);
        if t > 0.0 {
            self.prefactor * (-self.activation_energy / t).exp()
        } else {
            0.0
        }
    }

    /// Derivative dφ/du; errors where the ignition temperature is not positive.
    pub fn dphi(&self, u: f64) -> Result<f64, ModelError> {
        if self.kind == IgnitionKind::Constant {
            return Ok(0.0);
        }
        let t = self.kind.temperature(u);
        if t <= 0.0 {
            return Err(ModelError::NonPositiveTemperature { u });
        }
        Ok(self.rate_and_slope(u).1)
    }

    /// (φ, dφ/du) without domain checks; callers stay on the profile where T > 0.
    pub(crate) fn rate_and_slope(&self, u: f64) -> (f64, f64) {
        let e = self.activation_energy;
        match self.kind {
            IgnitionKind::Constant => (1.0, 0.0),
            IgnitionKind::Arrhenius => {
                let p = self.phi(u);
                (p, p * e / (u * u))
            }
            IgnitionKind::ModifiedArrhenius => {
                let t = self.kind.temperature(u);
                let p = self.phi(u);
                (p, -p * 2.0 * e * (u - 1.5) / (t * t))
            }
        }
    }
}

/// ū(z) = 1 + √(1 − 2q(1 − z)).
pub fn u_of_z(z: f64, q: f64) -> Result<f64, ModelError> {
    let r = 1.0 - 2.0 * q * (1.0 - z);
    if r < 0.0 {
        return Err(ModelError::NegativeRadicand { z, q });
    }
    Ok(1.0 + r.sqrt())
}

/// dū/dz = q/√(1 − 2q(1 − z)).
pub fn du_dz(z: f64, q: f64) -> Result<f64, ModelError> {
    let r = 1.0 - 2.0 * q * (1.0 - z);
    if r <= 0.0 {
        return Err(ModelError::NegativeRadicand { z, q });
    }
    Ok(q / r.sqrt())
}

/// Profile quantities at one reactant value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePoint {
    pub z: f64,
    pub u: f64,
    pub du_dz: f64,
    pub phi: f64,
    pub dphi: f64,
}

impl ProfilePoint {
    pub fn at(params: &ModelParams, z: f64) -> Self {
        let q = params.heat_release;
        let root = (1.0 - 2.0 * q * (1.0 - z)).max(0.0).sqrt();
        let u = 1.0 + root;
        let (phi, dphi) = params.rate_and_slope(u);
        let du_dz = if root > 0.0 { q / root } else { 0.0 };
        Self { z, u, du_dz, phi, dphi }
    }

    /// z̄′(x) = kφ(ū)z̄.
    pub fn dz_dx(&self) -> f64 {
        RATE * self.phi * self.z
    }
}

/// How the prefactor C is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Convention {
    /// C such that z̄(−2) = 1/2.
    HalfReactionAtMinus2,
    /// C = 10^{21ℰ/40}.
    PowerTenRule,
    /// C = e^{ℰ/2}.
    ExpHalfRule,
    Explicit(f64),
}

impl FromStr for Convention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "half-reaction" | "a" => Ok(Convention::HalfReactionAtMinus2),
            "power-ten" | "b" => Ok(Convention::PowerTenRule),
            "exp-half" | "c" => Ok(Convention::ExpHalfRule),
            other => other
                .parse::<f64>()
                .map(Convention::Explicit)
                .map_err(|_| format!("unknown prefactor convention '{s}'")),
        }
    }
}

/// Prefactor C under the given convention.
pub fn normalization_constant(
    kind: IgnitionKind,
    heat_release: f64,
    activation_energy: f64,
    convention: Convention,
) -> Result<f64, ModelError> {
    match convention {
        Convention::PowerTenRule => Ok(10f64.powf(21.0 * activation_energy / 40.0)),
        Convention::ExpHalfRule => Ok((activation_energy / 2.0).exp()),
        Convention::Explicit(c) => Ok(c),
        Convention::HalfReactionAtMinus2 => {
            let z_at = |log_c: f64| -> Result<f64, ModelError> {
                let p = ModelParams::new(kind, heat_release, activation_energy, 10f64.powf(log_c))?;
                Ok(reactant_at(&p, 2.0)? - 0.5)
            };
            let (mut lo, mut hi) = (-20.0, 20.0);
            let f_lo = z_at(lo)?;
            let f_hi = z_at(hi)?;
            if f_lo.signum() == f_hi.signum() {
                return Err(ModelError::Bracket);
            }
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let f_mid = z_at(mid)?;
                if f_mid.signum() == f_lo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(10f64.powf(0.5 * (lo + hi)))
        }
    }
}

/// Signed distance x(z) = −∫_z^1 dζ/(kφ(ū(ζ))ζ), computed in t = ln ζ.
pub fn position_of(params: &ModelParams, z: f64) -> Result<f64, ModelError> {
    if !(z > 0.0 && z <= 1.0) {
        return Err(ModelError::StartValue(z));
    }
    let inv_rate = |t: f64| 1.0 / (RATE * ProfilePoint::at(params, t.exp()).phi);
    Ok(-quad::integrate(inv_rate, z.ln(), 0.0, QUAD_TOL)?)
}

/// z̄(−m) from the exact profile relation, by Newton iteration on ln z.
pub fn reactant_at(params: &ModelParams, m: f64) -> Result<f64, ModelError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(ModelError::Truncation(m));
    }
    let rate_at = |t: f64| RATE * ProfilePoint::at(params, t.exp()).phi;
    let inv_rate = |t: f64| 1.0 / rate_at(t);
    let mut t = -RATE * params.phi(params.burned_state()) * m;
    t = t.max(-700.0);
    let mut residual = quad::integrate(inv_rate, t, 0.0, QUAD_TOL)? - m;
    for _ in 0..100 {
        let step = residual * rate_at(t);
        let t_new = (t + step).min(0.0);
        residual += quad::integrate(inv_rate, t_new, t, QUAD_TOL)?;
        let done = (t_new - t).abs() <= 1e-14 * t.abs().max(1.0);
        t = t_new;
        if done {
            return Ok(t.exp());
        }
    }
    Err(ModelError::NotConverged { cap: 100 })
}

/// Sampled z̄(x) with monotone cubic Hermite interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable {
    x: Vec<f64>,
    z: Vec<f64>,
    slope: Vec<f64>,
}

impl ProfileTable {
    fn new(samples: Vec<(f64, f64, f64)>) -> Self {
        let mut samples = samples;
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        samples.dedup_by(|a, b| a.0 == b.0);
        let x: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let z: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let mut slope: Vec<f64> = samples.iter().map(|s| s.2).collect();
        // Fritsch–Carlson limiter on the exact nodal derivatives.
        for k in 0..x.len().saturating_sub(1) {
            let delta = (z[k + 1] - z[k]) / (x[k + 1] - x[k]);
            if delta <= 0.0 {
                slope[k] = 0.0;
                slope[k + 1] = 0.0;
                continue;
            }
            let alpha = slope[k] / delta;
            let beta = slope[k + 1] / delta;
            let s = alpha * alpha + beta * beta;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                slope[k] = tau * alpha * delta;
                slope[k + 1] = tau * beta * delta;
            }
        }
        Self { x, z, slope }
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.z)
    }

    pub fn left(&self) -> f64 {
        self.x[0]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        let k = match self.x.partition_point(|&v| v <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (x - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.z[k] + h10 * h * self.slope[k] + h01 * self.z[k + 1] + h11 * h * self.slope[k + 1]
    }

    /// Inverse of [`Self::eval`] by bisection.
    pub fn position_of(&self, z: f64) -> f64 {
        let (mut lo, mut hi) = (self.x[0], 0.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < z {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * lo.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// The traveling-wave profile truncated to x ∈ [−M, 0].
///
/// M and z₀ = z̄(−M) are tied by the exact profile relation. The x-table is
/// present only when built by [`solve_profile_x`].
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    params: ModelParams,
    truncation: f64,
    z_start: f64,
    table: Option<Arc<ProfileTable>>,
}

impl Profile {
    /// Profile whose left end sits at reactant value `z_start`.
    pub fn from_z_start(params: ModelParams, z_start: f64) -> Result<Self, ModelError> {
        if !(z_start > 0.0 && z_start < 1.0) {
            return Err(ModelError::StartValue(z_start));
        }
        let truncation = -position_of(&params, z_start)?;
        Ok(Self { params, truncation, z_start, table: None })
    }

    /// Profile truncated at x = −`truncation`, without an x-table.
    pub fn from_truncation(params: ModelParams, truncation: f64) -> Result<Self, ModelError> {
        let z_start = reactant_at(&params, truncation)?;
        Ok(Self { params, truncation, z_start, table: None })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    /// Truncation length M.
    pub fn truncation(&self) -> f64 {
        self.truncation
    }
    /// z₀ = z̄(−M).
    pub fn z_start(&self) -> f64 {
        self.z_start
    }
    pub fn burned_state(&self) -> f64 {
        self.params.burned_state()
    }
    pub fn table(&self) -> Option<&ProfileTable> {
        self.table.as_deref()
    }

    pub fn u_of_z(&self, z: f64) -> f64 {
        ProfilePoint::at(&self.params, z).u
    }

    pub fn point_at_z(&self, z: f64) -> ProfilePoint {
        ProfilePoint::at(&self.params, z)
    }

    /// Interpolated z̄(x) for x ∈ [−M, 0].
    pub fn z_at_x(&self, x: f64) -> Result<f64, ModelError> {
        let table = self.table().ok_or(ModelError::NoTable)?;
        let left = table.left();
        if x < left - 1e-12 * left.abs() || x > 0.0 {
            return Err(ModelError::OutsideTable { x, left });
        }
        Ok(table.eval(x))
    }
}

/// Integrates the reactant profile from x = 0 back to x = −`truncation` and tabulates it.
pub fn solve_profile_x(params: ModelParams, truncation: f64, tol: Tolerance) -> Result<Profile, ModelError> {
    if !(truncation > 0.0 && truncation.is_finite()) {
        return Err(ModelError::Truncation(truncation));
    }
    let rhs = |_: f64, y: &[f64; 1]| [ProfilePoint::at(&params, y[0]).dz_dx()];
    let chunk = (truncation / 100.0).min(0.05);
    let pieces = (truncation / chunk).ceil() as usize;
    let slope = |z: f64| ProfilePoint::at(&params, z).dz_dx();
    let mut samples = vec![(0.0, 1.0, slope(1.0))];
    let mut z = 1.0;
    for j in 0..pieces {
        let a = -(j as f64) * truncation / pieces as f64;
        let b = -((j + 1) as f64) * truncation / pieces as f64;
        let (y, _) = integrate_adaptive_observed(rhs, a, b, [z], tol, |x, y| samples.push((x, y[0], slope(y[0]))))
            .map_err(|source| ModelError::Integration { x: a, source })?;
        z = y[0];
    }
    let z_start = z;
    if !(z_start > 0.0 && z_start < 1.0) {
        return Err(ModelError::StartValue(z_start));
    }
    Ok(Profile {
        params,
        truncation,
        z_start,
        table: Some(Arc::new(ProfileTable::new(samples))),
    })
}

/// Result of the square-wave test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SquareWave {
    /// φ(2)/max φ(ū(z)).
    pub ratio: f64,
    pub flag: bool,
}

pub fn detect_square_wave(params: &ModelParams) -> SquareWave {
    detect_square_wave_with(params, SQUARE_WAVE_THRESHOLD)
}

pub fn detect_square_wave_with(params: &ModelParams, threshold: f64) -> SquareWave {
    const GRID: usize = 10_000;
    let mut max_phi = (0..=GRID)
        .map(|i| ProfilePoint::at(params, i as f64 / GRID as f64).phi)
        .fold(0.0, f64::max);
    if params.kind == IgnitionKind::ModifiedArrhenius {
        let u_minus = params.burned_state();
        if (u_minus..=NEUMANN_STATE).contains(&1.5) {
            max_phi = max_phi.max(params.phi(1.5));
        }
    }
    let ratio = params.phi(NEUMANN_STATE) / max_phi;
    SquareWave { ratio, flag: ratio <= threshold }
}

/// How [`numerical_infinity`] sizes the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfinityStrategy {
    /// Smallest M with the profile within tolerance of the burned endstate.
    Endstate,
    /// Halve z₀ until D(2i) settles to relative change below 1e-3.
    DeterminantConvergence,
}

/// Truncated domain: length M and the matching start value z₀.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Truncation {
    pub length: f64,
    pub z_start: f64,
}

pub fn numerical_infinity(params: &ModelParams, tol: f64, strategy: InfinityStrategy) -> Result<Truncation, ModelError> {
    const CAP: usize = 40;
    match strategy {
        InfinityStrategy::Endstate => {
            let u_minus = params.burned_state();
            let miss = |m: f64| -> Result<(f64, f64), ModelError> {
                let z = reactant_at(params, m)?;
                let u = ProfilePoint::at(params, z).u;
                Ok(((u - u_minus).abs().max(z), z))
            };
            let mut hi = 1.0;
            let mut doublings = 0;
            while miss(hi)?.0 > tol {
                hi *= 2.0;
                doublings += 1;
                if doublings > CAP {
                    return Err(ModelError::NotConverged { cap: CAP });
                }
            }
            let mut lo = if doublings == 0 { 0.0 } else { hi / 2.0 };
            while hi - lo > 1e-10 * hi {
                let mid = 0.5 * (lo + hi);
                if miss(mid)?.0 > tol {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(Truncation { length: hi, z_start: miss(hi)?.1 })
        }
        InfinityStrategy::DeterminantConvergence => {
            use crate::evans::{evaluate_d, Coordinates, MethodId};
            let lambda = num_complex::Complex64::new(0.0, 2.0);
            let eval_tol = Tolerance { abs: 1e-10, rel: 1e-10 };
            let eval = |z0: f64| -> Result<(Profile, num_complex::Complex64), ModelError> {
                let profile = Profile::from_z_start(*params, z0)?;
                let d = evaluate_d(MethodId::MuX, lambda, &profile, eval_tol, Coordinates::Z)
                    .map_err(|e| ModelError::Determinant(e.to_string()))?;
                Ok((profile, d.value))
            };
            let (_, mut previous) = eval(0.5)?;
            for j in 2..=CAP {
                let (profile, d) = eval(0.5f64.powi(j as i32))?;
                if (d - previous).norm() < 1e-3 * d.norm() {
                    return Ok(Truncation { length: profile.truncation(), z_start: profile.z_start() });
                }
                previous = d;
            }
            Err(ModelError::NotConverged { cap: CAP })
        }
    }
}
