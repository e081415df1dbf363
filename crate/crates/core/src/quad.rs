//! Adaptive Gauss–Kronrod (7, 15) quadrature for real or complex integrands.

use thiserror::Error;

use crate::integrator::Component;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature on [{a}, {b}] did not reach {tol:e} within {max_intervals} subintervals (estimate {estimate:e})")]
    NotConverged { a: f64, b: f64, tol: f64, estimate: f64, max_intervals: usize },
    #[error("non-finite integrand value at {x}")]
    NonFinite { x: f64 },
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod<C: Component, F: FnMut(f64) -> C>(f: &mut F, a: f64, b: f64) -> Result<(C, f64), QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |f: &mut F, x: f64| -> Result<C, QuadratureError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { x })
        }
    };
    let fc = eval(f, center)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = eval(f, center - dx)? + eval(f, center + dx)?;
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * half;
    let gauss = gauss * half;
    let err = (kron + gauss * -1.0).magnitude();
    Ok((kron, err))
}

/// Integrates `f` over `[a, b]` to absolute accuracy `tol` by global adaptive bisection.
pub fn integrate<C: Component, F: FnMut(f64) -> C>(mut f: F, a: f64, b: f64, tol: f64) -> Result<C, QuadratureError> {
    const MAX_INTERVALS: usize = 20_000;
    if a == b {
        return Ok(C::default());
    }
    let (v, e) = kronrod(&mut f, a, b)?;
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.3).sum();
        if total_err <= tol {
            break;
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(QuadratureError::NotConverged {
                a,
                b,
                tol,
                estimate: total_err,
                max_intervals: MAX_INTERVALS,
            });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            return Err(QuadratureError::NotConverged {
                a,
                b,
                tol,
                estimate: total_err,
                max_intervals: MAX_INTERVALS,
            });
        }
        let (v1, e1) = kronrod(&mut f, lo, mid)?;
        let (v2, e2) = kronrod(&mut f, mid, hi)?;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    Ok(pieces.iter().fold(C::default(), |acc, p| acc + p.2))
}
