//! Shooting schemes for the Evans–Lopatinski determinant D(λ).
//!
//! Every scheme integrates a 2×2 linear system along the profile between the
//! truncated left end and the shock. The integration variable is either x on
//! [−M, 0] (needs the tabulated profile) or the reactant value z on [z₀, 1]
//! with the closed-form profile and dx/dz = 1/(kφz).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::integrator::{
    integrate_adaptive, integrate_adaptive_observed, integrate_fixed_rk4, IntegrationError, IntegrationStats,
    Tolerance,
};
use crate::linalg::{
    adjoint_init, coefficient_g, det_columns, eigenvalues, inner, kato_init, limit_data, norm, LimitData, LinalgError,
    Mat2, Vec2,
};
use crate::model::{detect_square_wave, ModelParams, Profile, ProfilePoint, NEUMANN_STATE, RATE};

/// Default mesh size for [`MethodId::LeeStewartFixed`] when none is given.
pub const DEFAULT_FIXED_STEPS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodId {
    MuX,
    Mu,
    NoMu,
    AdjointMuX,
    AdjointMu,
    ErpenbeckHomogeneous,
    ErpenbeckInhomogeneous,
    ErpenbeckCentered,
    LeeStewartAdaptive,
    LeeStewartHomogeneous,
    /// Lee–Stewart equations on a uniform mesh of this many RK4 steps.
    LeeStewartFixed(usize),
    Polar,
    PolarRadial,
    PolarAdjoint,
    PolarAdjointRadial,
    Hybrid,
    EvansProjective,
}

impl MethodId {
    /// The fifteen schemes of the timing comparison, in its row order.
    pub const COMPARISON: [MethodId; 15] = [
        MethodId::LeeStewartAdaptive,
        MethodId::LeeStewartHomogeneous,
        MethodId::AdjointMuX,
        MethodId::Hybrid,
        MethodId::PolarAdjoint,
        MethodId::ErpenbeckInhomogeneous,
        MethodId::PolarAdjointRadial,
        MethodId::AdjointMu,
        MethodId::Polar,
        MethodId::MuX,
        MethodId::PolarRadial,
        MethodId::Mu,
        MethodId::EvansProjective,
        MethodId::ErpenbeckHomogeneous,
        MethodId::ErpenbeckCentered,
    ];

    /// Human-readable table label.
    pub fn label(&self) -> &'static str {
        match self {
            MethodId::LeeStewartAdaptive => "method of Lee and Stewart (adaptive mesh in x)",
            MethodId::LeeStewartHomogeneous => "homogenous method of Lee and Stewart (adaptive mesh in x)",
            MethodId::LeeStewartFixed(_) => "method of Lee and Stewart (fixed mesh)",
            MethodId::AdjointMuX => "adjoint μ(x) method",
            MethodId::Hybrid => "hybrid method",
            MethodId::PolarAdjoint => "polar adjoint method",
            MethodId::ErpenbeckInhomogeneous => "inhomogeneous Erpenbeck method",
            MethodId::PolarAdjointRadial => "polar adjoint radial method",
            MethodId::AdjointMu => "adjoint μ method",
            MethodId::Polar => "polar/Drury method",
            MethodId::MuX => "μ(x) method",
            MethodId::PolarRadial => "polar radial method",
            MethodId::Mu => "μ method",
            MethodId::NoMu => "no μ method",
            MethodId::EvansProjective => "Evans function method",
            MethodId::ErpenbeckHomogeneous => "homogenous Erpenbeck method",
            MethodId::ErpenbeckCentered => "centered inhomogeneous Erpenbeck method",
        }
    }

    /// Command-line identifier; round-trips through [`FromStr`].
    pub fn name(&self) -> String {
        let s = match self {
            MethodId::MuX => "mu-x",
            MethodId::Mu => "mu",
            MethodId::NoMu => "no-mu",
            MethodId::AdjointMuX => "adjoint-mu-x",
            MethodId::AdjointMu => "adjoint-mu",
            MethodId::ErpenbeckHomogeneous => "erpenbeck-homogeneous",
            MethodId::ErpenbeckInhomogeneous => "erpenbeck-inhomogeneous",
            MethodId::ErpenbeckCentered => "erpenbeck-centered",
            MethodId::LeeStewartAdaptive => "lee-stewart",
            MethodId::LeeStewartHomogeneous => "lee-stewart-homogeneous",
            MethodId::LeeStewartFixed(n) => return format!("lee-stewart-fixed:{n}"),
            MethodId::Polar => "polar",
            MethodId::PolarRadial => "polar-radial",
            MethodId::PolarAdjoint => "polar-adjoint",
            MethodId::PolarAdjointRadial => "polar-adjoint-radial",
            MethodId::Hybrid => "hybrid",
            MethodId::EvansProjective => "evans-projective",
        };
        s.to_string()
    }

    /// Whether the scheme uses an adaptive integrator.
    pub fn is_adaptive(&self) -> bool {
        !matches!(self, MethodId::LeeStewartFixed(_))
    }

    /// Backward schemes whose determinant is D̃(λ)·e^{−μ₂(λ)M}.
    pub fn carries_decay_factor(&self) -> bool {
        matches!(
            self,
            MethodId::LeeStewartAdaptive
                | MethodId::LeeStewartHomogeneous
                | MethodId::ErpenbeckInhomogeneous
                | MethodId::LeeStewartFixed(_)
                | MethodId::EvansProjective
        )
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for MethodId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown method '{0}'")]
pub struct UnknownMethod(pub String);

impl FromStr for MethodId {
    type Err = UnknownMethod;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("lee-stewart-fixed") {
            if rest.is_empty() {
                return Ok(MethodId::LeeStewartFixed(DEFAULT_FIXED_STEPS));
            }
            return rest
                .strip_prefix(':')
                .and_then(|n| n.parse().ok())
                .filter(|&n: &usize| n > 0)
                .map(MethodId::LeeStewartFixed)
                .ok_or_else(|| UnknownMethod(s.to_string()));
        }
        let all = [
            MethodId::MuX,
            MethodId::Mu,
            MethodId::NoMu,
            MethodId::AdjointMuX,
            MethodId::AdjointMu,
            MethodId::ErpenbeckHomogeneous,
            MethodId::ErpenbeckInhomogeneous,
            MethodId::ErpenbeckCentered,
            MethodId::LeeStewartAdaptive,
            MethodId::LeeStewartHomogeneous,
            MethodId::Polar,
            MethodId::PolarRadial,
            MethodId::PolarAdjoint,
            MethodId::PolarAdjointRadial,
            MethodId::Hybrid,
            MethodId::EvansProjective,
        ];
        all.into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// Integration variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Coordinates {
    X,
    Z,
}

impl FromStr for Coordinates {
    type Err = UnknownMethod;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Coordinates::X),
            "z" => Ok(Coordinates::Z),
            _ => Err(UnknownMethod(s.to_string())),
        }
    }
}

/// Shock data entering the determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryData {
    /// [W̄] = (−2, 0).
    pub jump: Vec2,
    /// R(0⁻) = (qkφ(2), −kφ(2)).
    pub reaction: Vec2,
}

impl BoundaryData {
    pub fn new(params: &ModelParams) -> Self {
        let phi = params.phi(NEUMANN_STATE);
        let q = params.heat_release();
        Self {
            jump: [Complex64::new(-2.0, 0.0), Complex64::new(0.0, 0.0)],
            reaction: [Complex64::new(q * RATE * phi, 0.0), Complex64::new(-RATE * phi, 0.0)],
        }
    }

    /// λ[W̄] + R(0⁻).
    pub fn combined(&self, lambda: Complex64) -> Vec2 {
        [lambda * self.jump[0] + self.reaction[0], lambda * self.jump[1] + self.reaction[1]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeterminantSample {
    pub lambda: Complex64,
    pub value: Complex64,
    pub method: MethodId,
    pub stats: IntegrationStats,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvansError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{method} at lambda = {lambda}: {source}")]
    Integration { method: MethodId, lambda: Complex64, source: IntegrationError },
    #[error("{method} at lambda = {lambda}: determinant is not finite")]
    NonFinite { method: MethodId, lambda: Complex64 },
    #[error("{method} needs the square-wave regime (rate ratio {ratio:e})")]
    NotSquareWave { method: MethodId, ratio: f64 },
    #[error("{method} in x-coordinates needs a tabulated profile")]
    MissingTable { method: MethodId },
    #[error("reduced determinant is undefined at lambda = 0")]
    ZeroFrequency,
}

struct Setup<'a> {
    profile: &'a Profile,
    params: ModelParams,
    method: MethodId,
    lambda: Complex64,
    limit: LimitData,
    combined: Vec2,
    coords: Coordinates,
    tol: Tolerance,
}

impl<'a> Setup<'a> {
    fn new(
        method: MethodId,
        lambda: Complex64,
        profile: &'a Profile,
        tol: Tolerance,
        coords: Coordinates,
    ) -> Result<Self, EvansError> {
        if coords == Coordinates::X && profile.table().is_none() {
            return Err(EvansError::MissingTable { method });
        }
        let params = *profile.params();
        Ok(Self {
            profile,
            params,
            method,
            lambda,
            limit: limit_data(lambda, &params)?,
            combined: BoundaryData::new(&params).combined(lambda),
            coords,
            tol,
        })
    }

    fn left(&self) -> f64 {
        match self.coords {
            Coordinates::X => -self.profile.truncation(),
            Coordinates::Z => self.profile.z_start(),
        }
    }

    fn shock(&self) -> f64 {
        match self.coords {
            Coordinates::X => 0.0,
            Coordinates::Z => 1.0,
        }
    }

    /// Location of z̄ = 1/2 in the integration variable.
    fn midpoint(&self) -> f64 {
        match (self.coords, self.profile.table()) {
            (Coordinates::X, Some(t)) => t.position_of(0.5).max(self.left()),
            _ => 0.5f64.max(self.left()),
        }
    }

    /// Profile point and dx/ds at integration variable `s`.
    fn at(&self, s: f64) -> (ProfilePoint, f64) {
        match (self.coords, self.profile.table()) {
            (Coordinates::X, Some(t)) => {
                let z = t.eval(s).clamp(self.profile.z_start().min(1.0), 1.0);
                (self.profile.point_at_z(z), 1.0)
            }
            _ => {
                let p = self.profile.point_at_z(s);
                let jac = 1.0 / p.dz_dx();
                (p, jac)
            }
        }
    }

    fn g(&self, s: f64) -> (Mat2, ProfilePoint, f64) {
        let (p, jac) = self.at(s);
        (coefficient_g(&p, self.lambda, &self.params), p, jac)
    }

    /// −λ W̄′ written per unit integration variable.
    fn forcing(&self, p: &ProfilePoint, jac: f64, weight: Complex64) -> Vec2 {
        let scale = -self.lambda * weight * (p.dz_dx() * jac);
        [scale * p.du_dz, scale]
    }

    fn wrap(&self, e: IntegrationError) -> EvansError {
        EvansError::Integration { method: self.method, lambda: self.lambda, source: e }
    }

    fn solve<const N: usize, F>(&self, rhs: F, from: f64, to: f64, y0: [Complex64; N]) -> Result<([Complex64; N], IntegrationStats), EvansError>
    where
        F: FnMut(f64, &[Complex64; N]) -> [Complex64; N],
    {
        let r = match self.method {
            MethodId::LeeStewartFixed(n) => integrate_fixed_rk4(rhs, from, to, y0, n),
            _ => integrate_adaptive(rhs, from, to, y0, self.tol),
        };
        r.map_err(|e| self.wrap(e))
    }
}

fn pair<const N: usize>(y: &[Complex64; N]) -> Vec2 {
    [y[0], y[1]]
}

fn scaled(v: &Vec2, s: Complex64) -> Vec2 {
    [v[0] * s, v[1] * s]
}

#[derive(Clone, Copy, PartialEq)]
enum Shift {
    None,
    Limit,
    Pointwise,
}

fn forward(st: &Setup, shift: Shift) -> Result<(Complex64, IntegrationStats), EvansError> {
    let init = kato_init(st.lambda, &st.params)?;
    let mu_minus = st.limit.mu_grow;
    let start = match shift {
        Shift::None => scaled(&init, (-mu_minus * st.profile.truncation()).exp()),
        _ => init,
    };
    let zero = Complex64::new(0.0, 0.0);
    let rhs = |s: f64, y: &[Complex64; 3]| {
        let (g, _, jac) = st.g(s);
        let mu = match shift {
            Shift::None => zero,
            Shift::Limit => mu_minus,
            Shift::Pointwise => eigenvalues(&g).0,
        };
        let d = g.shift(mu).apply(&pair(y));
        let growth = if shift == Shift::Pointwise { (mu - mu_minus) * jac } else { zero };
        [d[0] * jac, d[1] * jac, growth]
    };
    let (y, stats) = st.solve(rhs, st.left(), st.shock(), [start[0], start[1], zero])?;
    Ok((det_columns(&pair(&y), &st.combined) * y[2].exp(), stats))
}

fn adjoint(st: &Setup, shift: Shift) -> Result<(Complex64, IntegrationStats), EvansError> {
    let init = adjoint_init(st.lambda, &st.params)?;
    let mu_decay = st.limit.mu_decay;
    let start = match shift {
        Shift::None => scaled(&init, (mu_decay.conj() * st.profile.truncation()).exp()),
        _ => init,
    };
    let zero = Complex64::new(0.0, 0.0);
    let rhs = |s: f64, y: &[Complex64; 2]| {
        let (g, _, jac) = st.g(s);
        let mu = match shift {
            Shift::None => zero,
            Shift::Limit => mu_decay,
            Shift::Pointwise => eigenvalues(&g).1,
        };
        let d = g.shift(mu).adjoint().apply(y);
        [-d[0] * jac, -d[1] * jac]
    };
    let (y, stats) = st.solve(rhs, st.left(), st.shock(), start)?;
    Ok((inner(&y, &st.combined), stats))
}

fn unit(v: &Vec2) -> Vec2 {
    scaled(v, Complex64::new(1.0 / norm(v), 0.0))
}

/// Projective field Ẏ = AY − Y(Y*AY) and the radial rate Y*AY + `offset`.
fn projective(a: &Mat2, y: &Vec2, offset: Complex64, jac: f64) -> [Complex64; 3] {
    let ay = a.apply(y);
    let w = inner(y, &ay);
    [(ay[0] - y[0] * w) * jac, (ay[1] - y[1] * w) * jac, (w + offset) * jac]
}

fn polar(st: &Setup, is_adjoint: bool, radial: bool) -> Result<(Complex64, IntegrationStats), EvansError> {
    let (init, offset) = if is_adjoint {
        (adjoint_init(st.lambda, &st.params)?, st.limit.mu_decay.conj())
    } else {
        (kato_init(st.lambda, &st.params)?, -st.limit.mu_grow)
    };
    let y0 = unit(&init);
    let operator = |g: Mat2| if is_adjoint { g.adjoint().scale(Complex64::new(-1.0, 0.0)) } else { g };
    let output = |y: &Vec2| if is_adjoint { inner(y, &st.combined) } else { det_columns(y, &st.combined) };
    if radial {
        let rhs = |s: f64, y: &[Complex64; 3]| {
            let (g, _, jac) = st.g(s);
            projective(&operator(g), &pair(y), offset, jac)
        };
        let log_r = Complex64::new(norm(&init).ln(), 0.0);
        let (y, stats) = st.solve(rhs, st.left(), st.shock(), [y0[0], y0[1], log_r])?;
        let r = y[2].exp();
        let r = if is_adjoint { r.conj() } else { r };
        Ok((output(&pair(&y)) * r, stats))
    } else {
        let rhs = |s: f64, y: &[Complex64; 2]| {
            let (g, _, jac) = st.g(s);
            pair(&projective(&operator(g), y, offset, jac))
        };
        let (y, stats) = st.solve(rhs, st.left(), st.shock(), y0)?;
        Ok((output(&y), stats))
    }
}

fn lee_stewart(st: &Setup) -> Result<(Complex64, IntegrationStats), EvansError> {
    let one = Complex64::new(1.0, 0.0);
    let rhs = |s: f64, y: &[Complex64; 2]| {
        let (g, p, jac) = st.g(s);
        let h = g.apply(y);
        let f = st.forcing(&p, jac, one);
        [h[0] * jac + f[0], h[1] * jac + f[1]]
    };
    let start = [st.lambda * -2.0, Complex64::new(0.0, 0.0)];
    let (y, stats) = st.solve(rhs, st.shock(), st.left(), start)?;
    Ok((inner(&adjoint_init(st.lambda, &st.params)?, &y), stats))
}

fn centered(st: &Setup) -> Result<(Complex64, IntegrationStats), EvansError> {
    let mu = st.limit.mu_decay;
    let rhs = |s: f64, y: &[Complex64; 3]| {
        let (g, p, jac) = st.g(s);
        let h = g.shift(mu).apply(&pair(y));
        let f = st.forcing(&p, jac, y[2]);
        [h[0] * jac + f[0], h[1] * jac + f[1], -mu * y[2] * jac]
    };
    let start = [st.lambda * -2.0, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let (y, stats) = st.solve(rhs, st.shock(), st.left(), start)?;
    Ok((inner(&adjoint_init(st.lambda, &st.params)?, &pair(&y)), stats))
}

fn homogeneous_backward(st: &Setup, start: Vec2) -> Result<(Complex64, IntegrationStats), EvansError> {
    let rhs = |s: f64, y: &[Complex64; 2]| {
        let (g, _, jac) = st.g(s);
        let h = g.apply(y);
        [h[0] * jac, h[1] * jac]
    };
    let (y, stats) = st.solve(rhs, st.shock(), st.left(), start)?;
    Ok((inner(&adjoint_init(st.lambda, &st.params)?, &y), stats))
}

fn hybrid(st: &Setup) -> Result<(Complex64, IntegrationStats), EvansError> {
    let mid = st.midpoint();
    let adjoint_rhs = |s: f64, y: &[Complex64; 2]| {
        let (g, _, jac) = st.g(s);
        let d = g.shift(eigenvalues(&g).1).adjoint().apply(y);
        [-d[0] * jac, -d[1] * jac]
    };
    let shooting_rhs = |s: f64, y: &[Complex64; 2]| {
        let (g, _, jac) = st.g(s);
        let d = g.shift(eigenvalues(&g).1).apply(y);
        [d[0] * jac, d[1] * jac]
    };
    let (left, mut stats) = st.solve(adjoint_rhs, st.left(), mid, adjoint_init(st.lambda, &st.params)?)?;
    let (right, more) = st.solve(shooting_rhs, st.shock(), mid, st.combined)?;
    stats += more;
    Ok((inner(&left, &right), stats))
}

fn projective_start(st: &Setup) -> Result<Vec2, EvansError> {
    let sq = detect_square_wave(&st.params);
    if !sq.flag {
        return Err(EvansError::NotSquareWave { method: st.method, ratio: sq.ratio });
    }
    let g = coefficient_g(&st.profile.point_at_z(1.0), st.lambda, &st.params);
    let (grow, decay) = eigenvalues(&g);
    let p = g.shift(grow).scale(1.0 / (decay - grow));
    Ok(p.apply(&st.combined))
}

/// Evaluates D(λ) with the given scheme.
///
/// `ErpenbeckInhomogeneous` and `LeeStewartFixed` always run in x-coordinates,
/// the latter on a uniform x-mesh. Any scheme in
/// x-coordinates needs a profile built by [`crate::model::solve_profile_x`].
pub fn evaluate_d(
    method: MethodId,
    lambda: Complex64,
    profile: &Profile,
    tol: Tolerance,
    coords: Coordinates,
) -> Result<DeterminantSample, EvansError> {
    let start = Instant::now();
    let coords = match method {
        MethodId::ErpenbeckInhomogeneous | MethodId::LeeStewartFixed(_) => Coordinates::X,
        _ => coords,
    };
    let st = Setup::new(method, lambda, profile, tol, coords)?;
    let (value, mut stats) = match method {
        MethodId::MuX => forward(&st, Shift::Pointwise)?,
        MethodId::Mu => forward(&st, Shift::Limit)?,
        MethodId::NoMu => forward(&st, Shift::None)?,
        MethodId::AdjointMuX => adjoint(&st, Shift::Pointwise)?,
        MethodId::AdjointMu => adjoint(&st, Shift::Limit)?,
        MethodId::ErpenbeckHomogeneous => adjoint(&st, Shift::None)?,
        MethodId::ErpenbeckInhomogeneous | MethodId::LeeStewartAdaptive | MethodId::LeeStewartFixed(_) => {
            lee_stewart(&st)?
        }
        MethodId::ErpenbeckCentered => centered(&st)?,
        MethodId::LeeStewartHomogeneous => homogeneous_backward(&st, st.combined)?,
        MethodId::EvansProjective => homogeneous_backward(&st, projective_start(&st)?)?,
        MethodId::Polar => polar(&st, false, false)?,
        MethodId::PolarRadial => polar(&st, false, true)?,
        MethodId::PolarAdjoint => polar(&st, true, false)?,
        MethodId::PolarAdjointRadial => polar(&st, true, true)?,
        MethodId::Hybrid => hybrid(&st)?,
    };
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(EvansError::NonFinite { method, lambda });
    }
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok(DeterminantSample { lambda, value, method, stats })
}

/// D(λ) with the factor e^{−μ₂(λ)M} of the backward schemes divided out.
///
/// The factor is analytic and nonvanishing, so zeros are unchanged; without it
/// the value rotates by about |μ₂|M per unit of Im λ, which defeats sampled
/// argument counting.
pub fn comparable_d(
    method: MethodId,
    lambda: Complex64,
    profile: &Profile,
    tol: Tolerance,
    coords: Coordinates,
) -> Result<DeterminantSample, EvansError> {
    let mut sample = evaluate_d(method, lambda, profile, tol, coords)?;
    if method.carries_decay_factor() {
        let mu_decay = limit_data(lambda, profile.params())?.mu_decay;
        sample.value *= (mu_decay * profile.truncation()).exp();
        if !(sample.value.re.is_finite() && sample.value.im.is_finite()) {
            return Err(EvansError::NonFinite { method, lambda });
        }
    }
    Ok(sample)
}

/// D(λ)/λ.
pub fn reduced_d(
    method: MethodId,
    lambda: Complex64,
    profile: &Profile,
    tol: Tolerance,
    coords: Coordinates,
) -> Result<Complex64, EvansError> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(EvansError::ZeroFrequency);
    }
    Ok(evaluate_d(method, lambda, profile, tol, coords)?.value / lambda)
}

/// Largest deviation of ‖Y‖ from 1 over the accepted steps of a polar run.
pub fn polar_norm_deviation(
    method: MethodId,
    lambda: Complex64,
    profile: &Profile,
    tol: Tolerance,
    coords: Coordinates,
) -> Result<f64, EvansError> {
    let is_adjoint = match method {
        MethodId::Polar | MethodId::PolarRadial => false,
        MethodId::PolarAdjoint | MethodId::PolarAdjointRadial => true,
        _ => return Ok(0.0),
    };
    let st = Setup::new(method, lambda, profile, tol, coords)?;
    let init = if is_adjoint { adjoint_init(lambda, &st.params)? } else { kato_init(lambda, &st.params)? };
    let zero = Complex64::new(0.0, 0.0);
    let rhs = |s: f64, y: &[Complex64; 2]| {
        let (g, _, jac) = st.g(s);
        let a = if is_adjoint { g.adjoint().scale(Complex64::new(-1.0, 0.0)) } else { g };
        pair(&projective(&a, y, zero, jac))
    };
    let mut worst = 0.0f64;
    integrate_adaptive_observed(rhs, st.left(), st.shock(), unit(&init), tol, |_, y| {
        worst = worst.max((norm(y) - 1.0).abs());
    })
    .map_err(|e| st.wrap(e))?;
    Ok(worst)
}
