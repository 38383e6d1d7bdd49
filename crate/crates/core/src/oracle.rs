//! Brute-force references for the rest of the crate: direct quadrature of
//! the defining integral of `J` and finite-difference derivative checks.
//!
//! Nothing here is used by production evaluation paths. `quad_j` reduces the
//! simplex integral one dimension at a time through
//!
//! ```text
//! J(y_0..y_d) = ∫_0^1 u^{d-1} J(u y_0, ..., u y_{d-1}) exp((1-u) y_d) du
//! ```
//!
//! with the base case `d = 1` integrated directly from its defining form
//! `∫_0^1 exp((1-u) r + u s) du` — never the closed form — so the oracle
//! shares no code with the evaluators it checks. Each 1-D level uses
//! adaptive bisection with an embedded Gauss(7)/Kronrod(15) pair; the
//! difference between the two rules drives the error estimate. Cost grows
//! exponentially with `d`, so the oracle is capped at `d = 4`.

use std::cell::Cell;

use thiserror::Error;

use crate::jfun::ArgVector;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("requested tolerance not met within max_depth subdivisions")]
    ToleranceNotMet,
    #[error("quadrature oracle supports 1 <= d <= 4, got d = {0}")]
    UnsupportedDimension(usize),
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Tolerances and recursion cap for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl QuadConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_depth: u32) -> Result<Self, OracleError> {
        if !(abs_tol > 0.0 && abs_tol.is_finite()) || !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(OracleError::InvalidConfig("tolerances must be positive"));
        }
        if max_depth == 0 || max_depth > 60 {
            return Err(OracleError::InvalidConfig("max_depth must be in 1..=60"));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_depth,
        })
    }
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_depth: 40,
        }
    }
}

/// Integral value together with the accumulated error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub est_error: f64,
}

// Gauss(7)/Kronrod(15) nodes and weights on [-1, 1]. Nodes are symmetric;
// only the nonnegative half is stored. Odd-indexed nodes form the embedded
// Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod panel: returns the Kronrod value and |K15 - G7|.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let (flo, fhi) = if x == 0.0 {
            let v = f(mid);
            (v, 0.0)
        } else {
            (f(mid - half * x), f(mid + half * x))
        };
        let fsum = flo + fhi;
        kronrod += wk * fsum;
        // odd indices (including the center) carry the embedded Gauss rule
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth_left: u32,
    acc: &mut (f64, f64),
) -> Result<(), OracleError> {
    let (v, e) = gk15(f, a, b);
    let tol = abs_tol.max(rel_tol * v.abs());
    if e <= tol || e <= f64::EPSILON * v.abs() {
        acc.0 += v;
        acc.1 += e;
        return Ok(());
    }
    if depth_left == 0 {
        return Err(OracleError::ToleranceNotMet);
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, abs_tol / 2.0, rel_tol, depth_left - 1, acc)?;
    adapt(f, mid, b, abs_tol / 2.0, rel_tol, depth_left - 1, acc)
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn adaptive_quad<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult, OracleError> {
    let mut acc = (0.0, 0.0);
    adapt(&f, a, b, cfg.abs_tol, cfg.rel_tol, cfg.max_depth, &mut acc)?;
    Ok(QuadResult {
        value: acc.0,
        est_error: acc.1,
    })
}

/// Recursive level of the nested simplex quadrature. `failed` latches any
/// inner tolerance failure since integrand closures cannot return errors.
fn quad_level(ys: &[f64], cfg: &QuadConfig, failed: &Cell<bool>) -> QuadResult {
    let d = ys.len() - 1;
    if d == 1 {
        let (r, s) = (ys[0], ys[1]);
        match adaptive_quad(|u| ((1.0 - u) * r + u * s).exp(), 0.0, 1.0, cfg) {
            Ok(res) => res,
            Err(_) => {
                failed.set(true);
                QuadResult {
                    value: f64::NAN,
                    est_error: f64::INFINITY,
                }
            }
        }
    } else {
        // one power of ten tighter per nesting level
        let inner_cfg = QuadConfig {
            abs_tol: cfg.abs_tol * 0.1,
            rel_tol: (cfg.rel_tol * 0.1).max(4.0 * f64::EPSILON),
            max_depth: cfg.max_depth,
        };
        let yd = ys[d];
        let inner_err = Cell::new(0.0f64);
        let integrand = |u: f64| {
            let mut scaled = [0.0f64; 5];
            for (dst, &y) in scaled[..d].iter_mut().zip(ys[..d].iter()) {
                *dst = u * y;
            }
            let inner = quad_level(&scaled[..d], &inner_cfg, failed);
            inner_err.set(inner_err.get().max(inner.est_error));
            u.powi(d as i32 - 1) * inner.value * ((1.0 - u) * yd).exp()
        };
        match adaptive_quad(integrand, 0.0, 1.0, cfg) {
            Ok(res) => QuadResult {
                value: res.value,
                // inner estimates enter the outer integral with weight <= 1
                est_error: res.est_error + inner_err.get(),
            },
            Err(_) => {
                failed.set(true);
                QuadResult {
                    value: f64::NAN,
                    est_error: f64::INFINITY,
                }
            }
        }
    }
}

/// Quadrature reference for `J(y_0..y_d)`, `1 <= d <= 4`.
pub fn quad_j(y: &ArgVector, cfg: &QuadConfig) -> Result<QuadResult, OracleError> {
    let d = y.dim();
    if !(1..=4).contains(&d) {
        return Err(OracleError::UnsupportedDimension(d));
    }
    let failed = Cell::new(false);
    let res = quad_level(y.values(), cfg, &failed);
    if failed.get() || !res.value.is_finite() {
        return Err(OracleError::ToleranceNotMet);
    }
    Ok(res)
}

/// Central-difference gradient `(f(y + h e_i) - f(y - h e_i)) / 2h`.
pub fn fd_grad<F: Fn(&[f64]) -> f64>(f: &F, y: &[f64], h: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(y.len());
    let mut work = y.to_vec();
    for i in 0..y.len() {
        let orig = work[i];
        work[i] = orig + h;
        let hi = f(&work);
        work[i] = orig - h;
        let lo = f(&work);
        work[i] = orig;
        grad.push((hi - lo) / (2.0 * h));
    }
    grad
}
