//! Complex 2×2 algebra, the coefficient matrix of the linearized
//! eigenvalue problem, its limit at x = −∞, and analytic initializers.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{ModelParams, ProfilePoint, RATE};

pub type Vec2 = [Complex64; 2];

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum LinalgError {
    /// (a − 1)λ − c = 0: the limiting eigenvalues collide.
    #[error("limiting eigenvalues collide at lambda = {0}")]
    Degenerate(Complex64),
}

/// Row-major complex 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mat2([[one, zero], [zero, one]])
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    /// `self − μI`.
    pub fn shift(&self, mu: Complex64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] - mu, m[0][1]], [m[1][0], m[1][1] - mu]])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut m = self.0;
        for (r, ro) in m.iter_mut().zip(o.0.iter()) {
            for (x, y) in r.iter_mut().zip(ro.iter()) {
                *x += *y;
            }
        }
        Mat2(m)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(Complex64::new(-1.0, 0.0))
    }
}

/// ⟨a, b⟩ = Σ conj(aᵢ) bᵢ.
pub fn inner(a: &Vec2, b: &Vec2) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// det[a b] = a₀b₁ − a₁b₀.
pub fn det_columns(a: &Vec2, b: &Vec2) -> Complex64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// G = (E − λI)A⁻¹ at a profile point, A = diag(ū − 1, −1).
pub fn coefficient_g(point: &ProfilePoint, lambda: Complex64, params: &ModelParams) -> Mat2 {
    let q = params.heat_release();
    let k = RATE;
    let gap = point.u - 1.0;
    let react = k * point.dphi * point.z;
    Mat2([
        [(q * react - lambda) / gap, Complex64::new(-q * k * point.phi, 0.0)],
        [Complex64::new(-react / gap, 0.0), lambda + k * point.phi],
    ])
}

/// Constants of the limiting matrix G₋ = [[aλ, b], [0, c + λ]].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitData {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Growing eigenvalue c + λ.
    pub mu_grow: Complex64,
    /// Decaying eigenvalue aλ.
    pub mu_decay: Complex64,
    /// Right eigenvector for `mu_grow`.
    pub right_grow: Vec2,
    /// Left eigenvector for `mu_grow`.
    pub left_grow: Vec2,
}

impl LimitData {
    pub fn matrix(&self, lambda: Complex64) -> Mat2 {
        let zero = Complex64::new(0.0, 0.0);
        Mat2([[lambda * self.a, Complex64::new(self.b, 0.0)], [zero, lambda + self.c]])
    }
}

pub fn limit_data(lambda: Complex64, params: &ModelParams) -> Result<LimitData, LinalgError> {
    let q = params.heat_release();
    let phi_minus = params.phi(params.burned_state());
    let a = -1.0 / (1.0 - 2.0 * q).sqrt();
    let b = -q * RATE * phi_minus;
    let c = RATE * phi_minus;
    let denom = lambda * (a - 1.0) - c;
    if denom == Complex64::new(0.0, 0.0) {
        return Err(LinalgError::Degenerate(lambda));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Ok(LimitData {
        a,
        b,
        c,
        mu_grow: lambda + c,
        mu_decay: lambda * a,
        right_grow: [-b / denom, one],
        left_grow: [zero, one],
    })
}

/// Analytic forward initializer S(λ) = (−b/((a − 1)λ − c), 1)ᵀ.
pub fn kato_init(lambda: Complex64, params: &ModelParams) -> Result<Vec2, LinalgError> {
    Ok(limit_data(lambda, params)?.right_grow)
}

/// Adjoint initializer (1, b/((a − 1)λ* − c))ᵀ.
pub fn adjoint_init(lambda: Complex64, params: &ModelParams) -> Result<Vec2, LinalgError> {
    let l = limit_data(lambda, params)?;
    let denom = lambda.conj() * (l.a - 1.0) - l.c;
    Ok([Complex64::new(1.0, 0.0), l.b / denom])
}

/// Pointwise eigen-decomposition of a 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigen {
    pub grow: Complex64,
    pub decay: Complex64,
    pub grow_vec: Vec2,
    pub decay_vec: Vec2,
}

fn ordered(x: Complex64, y: Complex64) -> (Complex64, Complex64) {
    if x.re > y.re || (x.re == y.re && x.im >= y.im) {
        (x, y)
    } else {
        (y, x)
    }
}

/// Eigenvalues only, as (growing, decaying).
pub fn eigenvalues(g: &Mat2) -> (Complex64, Complex64) {
    let half_tr = g.trace() * 0.5;
    let m = &g.0;
    let half_diff = (m[0][0] - m[1][1]) * 0.5;
    let disc = (half_diff * half_diff + m[0][1] * m[1][0]).sqrt();
    ordered(half_tr + disc, half_tr - disc)
}

fn eigenvector(g: &Mat2, mu: Complex64) -> Vec2 {
    let m = &g.0;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let v1 = [m[0][1], mu - m[0][0]];
    let v2 = [mu - m[1][1], m[1][0]];
    let (n1, n2) = (norm(&v1), norm(&v2));
    let v = if n1 >= n2 { v1 } else { v2 };
    let n = n1.max(n2);
    if n == 0.0 {
        if (m[0][0] - mu).norm() <= (m[1][1] - mu).norm() {
            [one, zero]
        } else {
            [zero, one]
        }
    } else {
        [v[0] / n, v[1] / n]
    }
}

pub fn pointwise_eigen(g: &Mat2) -> Eigen {
    let (grow, decay) = eigenvalues(g);
    Eigen { grow, decay, grow_vec: eigenvector(g, grow), decay_vec: eigenvector(g, decay) }
}
