//! Partial derivatives of the simplex log-linear integral.
//!
//! Differentiating `J` never needs new machinery: duplicating an argument
//! raises the divided-difference order, so
//!
//! ```text
//! ∂J(y_0..y_d)/∂y_0        = J(y_0, y_0, y_1..y_d)
//! ∂²J(y_0..y_d)/∂y_0²      = 2 J(y_0, y_0, y_0, y_1..y_d)
//! ∂²J(y_0..y_d)/∂y_0 ∂y_1  = J(y_0, y_0, y_1, y_1, y_2..y_d)
//! ```
//!
//! [`grad_j`] and [`hess_j`] apply these identities through [`eval_j`] and
//! inherit its stability in every dimension. For `d <= 2` the module also
//! carries the independent closed-form family `J_{a,b}(r, s)` (mixed
//! derivatives of the two-node `J`, see [`j_ab`]) and the explicit three-node
//! partials [`d2_partials`]; the two routes cross-validate each other in the
//! test suites and the closed forms double as fast paths.

use thiserror::Error;

use crate::jfun::{eval_j, eval_j_d1, ArgVector, EvalConfig, JError};
use crate::util::factorial;

/// Maximum supported total derivative order `a + b` for [`j_ab`].
pub const MAX_ORDER: u32 = 8;

/// Default spread threshold for the exact/expansion switch in
/// [`d2_partials`]. The exact branch divides by `(s-r)^3`, so its error is
/// ~`2^-52/(s-r)^3` and the expansion (series through `J_{8,0}`) truncates at
/// `(s-r)^6`; 0.05 keeps both sides near 1e-11.
pub const D2_DEFAULT_EPS: f64 = 0.05;

/// Per-order switch points for [`j_ab_auto`]. The closed form for
/// `J_{a,0}(0, y)` subtracts the degree-`a` Taylor prefix of `exp` from
/// `exp(y)` and divides by `y^{a+1}`, and the binomial reduction then takes
/// an alternating sum of such terms, so at total order `A = a + b` the
/// relative error is roughly `A! (A+1)! 2^-52 / (a! b! y^{A+1})`. The series
/// side is a sum of positive terms for `y >= 0` and stays at a few ulps
/// through its 60-term range (|y| up to ~12). The thresholds keep the
/// closed form below ~1e-12 even half a threshold early, so the branches
/// overlap cleanly.
const AUTO_EPS: [f64; 9] = [0.01, 0.07, 0.4, 0.9, 1.7, 2.5, 3.5, 4.6, 5.8];

#[derive(Debug, Error, PartialEq)]
pub enum DerivError {
    #[error("derivative order a + b = {order} exceeds the supported maximum {MAX_ORDER}")]
    Unsupported { order: u32 },
    #[error(transparent)]
    Eval(#[from] JError),
}

/// Orders `(a, b)` of `∂^{a+b}/∂r^a ∂s^b` for the two-node derivative family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivOrder {
    pub a: u32,
    pub b: u32,
}

impl DerivOrder {
    pub fn new(a: u32, b: u32) -> Result<Self, DerivError> {
        if a + b > MAX_ORDER {
            return Err(DerivError::Unsupported { order: a + b });
        }
        Ok(Self { a, b })
    }

    pub fn total(self) -> u32 {
        self.a + self.b
    }
}

/// Falling factorial `[r]_m = r (r-1) ... (r-m+1)`, `[r]_0 = 1`.
pub fn falling_factorial(r: f64, m: u32) -> f64 {
    let mut v = 1.0;
    for i in 0..m {
        v *= r - i as f64;
    }
    v
}

/// Gradient of `J` at `y`: component `i` equals `J` with `y_i` duplicated.
/// All components are positive. Requires `d + 1 <= cfg.max_dim()`.
pub fn grad_j(y: &ArgVector, cfg: &EvalConfig) -> Result<Vec<f64>, JError> {
    let vals = y.values();
    vals.iter()
        .enumerate()
        .map(|(i, _)| {
            let mut dup = vals.to_vec();
            dup.push(vals[i]);
            eval_j(&ArgVector::new(dup)?, cfg)
        })
        .collect()
}

/// Hessian of `J` at `y`: entry `(i,i)` is `2 J` with `y_i` triplicated,
/// entry `(i,j)` is `J` with `y_i` and `y_j` each duplicated. Symmetric and
/// entrywise positive. Requires `d + 2 <= cfg.max_dim()`.
pub fn hess_j(y: &ArgVector, cfg: &EvalConfig) -> Result<Vec<Vec<f64>>, JError> {
    let vals = y.values();
    let n = vals.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut dup = vals.to_vec();
        dup.push(vals[i]);
        dup.push(vals[i]);
        m[i][i] = 2.0 * eval_j(&ArgVector::new(dup)?, cfg)?;
        for j in i + 1..n {
            let mut dup = vals.to_vec();
            dup.push(vals[i]);
            dup.push(vals[j]);
            let v = eval_j(&ArgVector::new(dup)?, cfg)?;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

/// `J_{a,0}(0, y) = a!/y^{a+1} (exp(y) - Σ_{l<=a} y^l/l!)` for `y > 0`.
fn j_a0_closed(a: u32, y: f64) -> f64 {
    let mut partial = 0.0;
    let mut term = 1.0;
    for l in 0..=a {
        partial += term;
        term *= y / (l + 1) as f64;
    }
    factorial(a as usize) * (y.exp() - partial) / y.powi(a as i32 + 1)
}

/// Series `J_{a,b}(0, y) = Σ_k a! [k+b]_b / (k+a+b+1)! · y^k`. All terms are
/// positive for `y >= 0`. Terms are accumulated until they drop below
/// 1e-17 of the partial sum, capped at 60 terms (enough for |y| <= 8).
fn j_ab0_series(a: u32, b: u32, y: f64) -> f64 {
    let mut term =
        factorial(a as usize) * factorial(b as usize) / factorial((a + b + 1) as usize);
    let mut sum = term;
    for k in 0..60u32 {
        term *= y * (k + 1 + b) as f64 / ((k + 1) as f64 * (k + a + b + 2) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Closed form via the binomial reduction
/// `J_{a,b} = Σ_i C(b,i) (-1)^i J_{a+i,0}` for `y > 0`.
fn j_ab0_closed(a: u32, b: u32, y: f64) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0f64;
    for i in 0..=b {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * j_a0_closed(a + i, y);
        binom = binom * (b - i) as f64 / (i + 1) as f64;
    }
    sum
}

/// Mixed partial `J_{a,b}(r, s) = ∂^{a+b} J(r,s) / ∂r^a ∂s^b`, equal to
/// `∫_0^1 (1-u)^a u^b exp((1-u) r + u s) du`.
///
/// Evaluation reduces to the origin via
/// `J_{a,b}(r,s) = J_{b,a}(s,r) = exp(r) J_{a,b}(0, s-r)`, always from the
/// smaller argument so the reduced offset is nonnegative. Below `eps` the
/// offset goes through the positive-term series, at or above it through the
/// closed form with the binomial reduction. See [`j_ab_auto`] for the
/// order-aware threshold; small `eps` values are numerically unusable at
/// high orders because of the closed form's cancellation.
pub fn j_ab(a: u32, b: u32, r: f64, s: f64, eps: f64) -> Result<f64, DerivError> {
    if a + b > MAX_ORDER {
        return Err(DerivError::Unsupported { order: a + b });
    }
    let (a, b, base, y) = if s >= r {
        (a, b, r, s - r)
    } else {
        (b, a, s, r - s)
    };
    let j0 = if y < eps {
        j_ab0_series(a, b, y)
    } else {
        j_ab0_closed(a, b, y)
    };
    Ok(base.exp() * j0)
}

/// [`j_ab`] with the branch threshold chosen per total order `a + b` so both
/// branches stay near full precision at the switch.
pub fn j_ab_auto(a: u32, b: u32, r: f64, s: f64) -> Result<f64, DerivError> {
    if a + b > MAX_ORDER {
        return Err(DerivError::Unsupported { order: a + b });
    }
    j_ab(a, b, r, s, AUTO_EPS[(a + b) as usize])
}

/// A smooth univariate function together with its first four derivatives,
/// the ingredient for the symmetric divided-difference helper [`h_div`].
pub struct BivariateFn {
    pub f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d1: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d2: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d3: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d4: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl BivariateFn {
    /// `f = exp`, its own derivative at every order.
    pub fn exp() -> Self {
        Self {
            f: Box::new(f64::exp),
            d1: Box::new(f64::exp),
            d2: Box::new(f64::exp),
            d3: Box::new(f64::exp),
            d4: Box::new(f64::exp),
        }
    }

    /// The slice `f(x) = J(x, t)` with `f^{(k)}(x) = J_{k,0}(x, t)`.
    pub fn j_slice(t: f64) -> Self {
        let deriv = |k: u32| {
            move |x: f64| j_ab_auto(k, 0, x, t).expect("order within supported range")
        };
        Self {
            f: Box::new(move |x| eval_j_d1(x, t)),
            d1: Box::new(deriv(1)),
            d2: Box::new(deriv(2)),
            d3: Box::new(deriv(3)),
            d4: Box::new(deriv(4)),
        }
    }
}

/// The smooth symmetric divided difference
/// `h(r,s) = (f(s) - f(r)) / (s - r)`, evaluated as
/// `f'(r) + f''(r)(s - r)/2` when `|s - r| < eps`.
pub fn h_div(f: &BivariateFn, r: f64, s: f64, eps: f64) -> f64 {
    let w = s - r;
    if w.abs() >= eps {
        ((f.f)(s) - (f.f)(r)) / w
    } else {
        (f.d1)(r) + (f.d2)(r) * w / 2.0
    }
}

/// First and second partials of the three-node `J(r, s, t)` with respect to
/// its leading arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2Partials {
    /// `∂J/∂r`
    pub dr: f64,
    /// `∂²J/∂r²`
    pub dr2: f64,
    /// `∂²J/∂r∂s`
    pub drds: f64,
}

/// Closed-form partials of `J(r, s, t)` built from the `J_{a,b}` family.
///
/// Fixing `t`, `J(r, s, t)` is the symmetric divided difference of
/// `f(x) = J(x, t)`, and its partials have exact expressions for separated
/// `r, s` plus power-series expansions in `s - r` whose coefficients are
/// `J_{m,0}(r, t)`:
///
/// ```text
/// ∂J/∂r    = Σ_m J_{m+2,0}(r,t) (s-r)^m / (m+2)!
/// ∂²J/∂r²  = Σ_m J_{m+3,0}(r,t) (s-r)^m · 2/(m+3)!
/// ∂²J/∂r∂s = Σ_m J_{m+3,0}(r,t) (s-r)^m · (m+1)/(m+3)!
/// ```
///
/// The expansion branch keeps all terms reachable with orders up to
/// [`MAX_ORDER`], so with `eps` around [`D2_DEFAULT_EPS`] both branches stay
/// near full precision.
pub fn d2_partials(r: f64, s: f64, t: f64, eps: f64) -> D2Partials {
    let w = s - r;
    if w.abs() >= eps {
        let jrt = eval_j_d1(r, t);
        let jst = eval_j_d1(s, t);
        let j10_r = j_ab_auto(1, 0, r, t).expect("order 1");
        let j10_s = j_ab_auto(1, 0, s, t).expect("order 1");
        let j20_r = j_ab_auto(2, 0, r, t).expect("order 2");
        let core = jst - jrt - j10_r * w;
        D2Partials {
            dr: core / (w * w),
            dr2: (2.0 * core - w * w * j20_r) / (w * w * w),
            drds: ((j10_r + j10_s) * w - 2.0 * (jst - jrt)) / (w * w * w),
        }
    } else {
        let mut dr = 0.0;
        let mut dr2 = 0.0;
        let mut drds = 0.0;
        let mut wm = 1.0; // (s-r)^m
        for m in 0..=(MAX_ORDER - 3) {
            let jm2 = j_ab_auto(m + 2, 0, r, t).expect("order within range");
            let jm3 = j_ab_auto(m + 3, 0, r, t).expect("order within range");
            dr += jm2 * wm / factorial((m + 2) as usize);
            dr2 += jm3 * wm * 2.0 / factorial((m + 3) as usize);
            drds += jm3 * wm * (m + 1) as f64 / factorial((m + 3) as usize);
            wm *= w;
        }
        // one more ∂J/∂r term is reachable with J_{8,0}
        let m = MAX_ORDER - 2;
        dr += j_ab_auto(m + 2, 0, r, t).expect("order 8") * wm / factorial((m + 2) as usize);
        D2Partials { dr, dr2, drds }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fd_grad;

    const E: f64 = std::f64::consts::E;

    fn argvec(vals: &[f64]) -> ArgVector {
        ArgVector::new(vals.to_vec()).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn deriv_order_gate() {
        assert!(DerivOrder::new(4, 4).is_ok());
        assert_eq!(
            DerivOrder::new(5, 4).unwrap_err(),
            DerivError::Unsupported { order: 9 }
        );
        assert_eq!(
            j_ab(9, 0, 0.0, 1.0, 0.1).unwrap_err(),
            DerivError::Unsupported { order: 9 }
        );
    }

    #[test]
    fn falling_factorial_values() {
        assert_eq!(falling_factorial(5.0, 0), 1.0);
        assert_eq!(falling_factorial(5.0, 2), 20.0);
        assert_eq!(falling_factorial(3.0, 4), 0.0);
    }

    #[test]
    fn grad_constant_input() {
        let cfg = EvalConfig::default();
        let g = grad_j(&argvec(&[0.0, 0.0]), &cfg).unwrap();
        assert_eq!(g, vec![0.5, 0.5]);
    }

    #[test]
    fn grad_known_values() {
        let cfg = EvalConfig::default();
        let g = grad_j(&argvec(&[0.0, 1.0]), &cfg).unwrap();
        assert!(rel_err(g[0], E - 2.0) < 2e-15);
        assert!(rel_err(g[1], 1.0) < 2e-15);
    }

    #[test]
    fn gradient_sum_equals_value() {
        let cfg = EvalConfig::default();
        for vals in [
            vec![0.0, 1.0],
            vec![-2.0, 0.5, 3.0],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![0.3, 0.3001, -4.0, 2.0],
        ] {
            let y = argvec(&vals);
            let total: f64 = grad_j(&y, &cfg).unwrap().iter().sum();
            let v = eval_j(&y, &cfg).unwrap();
            assert!(rel_err(total, v) < 1e-12, "{vals:?}");
        }
    }

    #[test]
    fn hess_constant_input() {
        let cfg = EvalConfig::default();
        let h = hess_j(&argvec(&[0.0, 0.0]), &cfg).unwrap();
        assert!(rel_err(h[0][0], 1.0 / 3.0) < 1e-15);
        assert!(rel_err(h[1][1], 1.0 / 3.0) < 1e-15);
        assert!(rel_err(h[0][1], 1.0 / 6.0) < 1e-15);
    }

    #[test]
    fn hess_second_difference_value() {
        let cfg = EvalConfig::default();
        let h = hess_j(&argvec(&[0.0, 1.0]), &cfg).unwrap();
        assert!(rel_err(h[0][0], 2.0 * (E - 2.5)) < 1e-13);
        // finite-difference confirmation on the d=1 closed form
        let step = 1e-4;
        let fd = (eval_j_d1(step, 1.0) - 2.0 * eval_j_d1(0.0, 1.0) + eval_j_d1(-step, 1.0))
            / (step * step);
        assert!(rel_err(h[0][0], fd) < 1e-6);
    }

    #[test]
    fn hess_row_sums_match_gradient() {
        let cfg = EvalConfig::default();
        let y = argvec(&[0.4, -1.2, 2.0]);
        let g = grad_j(&y, &cfg).unwrap();
        let h = hess_j(&y, &cfg).unwrap();
        for i in 0..3 {
            let row: f64 = h[i].iter().sum();
            assert!(rel_err(row, g[i]) < 1e-11);
        }
    }

    #[test]
    fn j_ab_series_leads() {
        assert!((j_ab(1, 0, 0.0, 0.0, 0.1).unwrap() - 0.5).abs() < 1e-16);
        assert!((j_ab(2, 0, 0.0, 0.0, 0.1).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!((j_ab(3, 0, 0.0, 0.0, 0.1).unwrap() - 0.25).abs() < 1e-16);
        assert!((j_ab(4, 0, 0.0, 0.0, 0.1).unwrap() - 0.2).abs() < 1e-16);
        assert!((j_ab(1, 1, 0.0, 0.0, 0.1).unwrap() - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn j_ab_zeroth_order_is_j() {
        for &(r, s) in &[(0.0, 1.0), (-2.0, 0.3), (1.5, 1.5001), (4.0, -4.0)] {
            let a = j_ab_auto(0, 0, r, s).unwrap();
            let b = eval_j_d1(r, s);
            assert!(rel_err(a, b) < 1e-14, "({r}, {s})");
        }
    }

    #[test]
    fn j_ab_closed_form_value() {
        // J_{1,0}(0, 1) = (e - 1 - 1)/1 = e - 2
        let v = j_ab(1, 0, 0.0, 1.0, 0.07).unwrap();
        assert!(rel_err(v, E - 2.0) < 1e-14);
        // finite differences of the d=1 evaluator in the first argument
        let step = 1e-5;
        let fd = (eval_j_d1(step, 1.0) - eval_j_d1(-step, 1.0)) / (2.0 * step);
        assert!(rel_err(v, fd) < 1e-9);
    }

    #[test]
    fn j_ab_branch_agreement_in_overlap_window() {
        // Closed form and series agree near the per-order switch point.
        for a in 0..=MAX_ORDER {
            for b in 0..=(MAX_ORDER - a) {
                let eps = AUTO_EPS[(a + b) as usize];
                for &m in &[0.5, 0.75, 1.0, 1.5, 2.0] {
                    let y: f64 = eps * m;
                    let series = j_ab0_series(a, b, y);
                    let closed = j_ab0_closed(a, b, y);
                    assert!(
                        rel_err(series, closed) < 1e-12,
                        "a={a} b={b} y={y}: {series} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn j_ab_symmetry() {
        for a in 0..=3u32 {
            for b in 0..=3u32 {
                for &(r, s) in &[(0.0, 2.0), (-1.0, 0.4), (0.3, 0.31), (5.0, -1.0)] {
                    let x = j_ab_auto(a, b, r, s).unwrap();
                    let y = j_ab_auto(b, a, s, r).unwrap();
                    assert!(rel_err(x, y) < 1e-13, "a={a} b={b} ({r},{s})");
                }
            }
        }
    }

    #[test]
    fn h_div_exp_cases() {
        let f = BivariateFn::exp();
        assert_eq!(h_div(&f, 0.0, 0.0, 1e-3), 1.0);
        assert!(rel_err(h_div(&f, 0.0, 1.0, 1e-3), E - 1.0) < 1e-15);
        // exact branch is symmetric to rounding
        for &(r, s) in &[(0.2, 1.7), (-3.0, 0.1), (0.5, 0.51)] {
            let a = h_div(&f, r, s, 1e-3);
            let b = h_div(&f, s, r, 1e-3);
            assert!(rel_err(a, b) < 1e-13);
        }
        // expansion branch truncates at O((s-r)^2), so symmetry only holds
        // to that order
        let (r, s) = (0.5, 0.5004);
        let a = h_div(&f, r, s, 1e-3);
        let b = h_div(&f, s, r, 1e-3);
        assert!(rel_err(a, b) < 1e-7);
        assert!(rel_err(a, (s.exp() - r.exp()) / (s - r)) < 1e-7);
    }

    #[test]
    fn h_div_j_slice_matches_d2_evaluator() {
        let t = 0.8;
        let f = BivariateFn::j_slice(t);
        let v = h_div(&f, -0.3, 0.9, 1e-3);
        assert!(rel_err(v, crate::jfun::eval_j_d2(-0.3, 0.9, t)) < 1e-13);
    }

    #[test]
    fn d2_partials_at_origin() {
        let p = d2_partials(0.0, 0.0, 0.0, D2_DEFAULT_EPS);
        assert!(rel_err(p.dr, 1.0 / 6.0) < 1e-14);
        assert!(rel_err(p.dr2, 1.0 / 12.0) < 1e-14);
        assert!(rel_err(p.drds, 1.0 / 24.0) < 1e-14);
    }

    #[test]
    fn d2_partials_match_finite_differences() {
        use crate::jfun::eval_j_d2;
        let (r, s, t) = (0.0, 1.0, 2.0);
        let p = d2_partials(r, s, t, D2_DEFAULT_EPS);
        let h = 1e-5;
        let fd_r = (eval_j_d2(r + h, s, t) - eval_j_d2(r - h, s, t)) / (2.0 * h);
        assert!(rel_err(p.dr, fd_r) < 1e-6);
        // second order: difference the (already validated) first partial, a
        // direct second difference of J would sit on the u/h^2 noise floor
        let dr_at = |r: f64, s: f64| d2_partials(r, s, t, D2_DEFAULT_EPS).dr;
        let fd_rr = (dr_at(r + h, s) - dr_at(r - h, s)) / (2.0 * h);
        assert!(rel_err(p.dr2, fd_rr) < 1e-6);
        let fd_rs = (dr_at(r, s + h) - dr_at(r, s - h)) / (2.0 * h);
        assert!(rel_err(p.drds, fd_rs) < 1e-6);
    }

    #[test]
    fn d2_partials_consistent_with_duplication() {
        let cfg = EvalConfig::default();
        for &(r, s, t) in &[
            (0.0, 1.0, 2.0),
            (-0.5, 0.3, 1.1),
            (0.2, 0.2002, -1.0),
            (1.0, 1.0, 1.0),
            (0.7, 0.74, 0.71),
        ] {
            let p = d2_partials(r, s, t, D2_DEFAULT_EPS);
            let g = grad_j(&argvec(&[r, s, t]), &cfg).unwrap();
            assert!(rel_err(p.dr, g[0]) < 1e-10, "dr at ({r},{s},{t})");
            let h = hess_j(&argvec(&[r, s, t]), &cfg).unwrap();
            assert!(rel_err(p.dr2, h[0][0]) < 1e-10, "dr2 at ({r},{s},{t})");
            assert!(rel_err(p.drds, h[0][1]) < 1e-10, "drds at ({r},{s},{t})");
        }
    }

    #[test]
    fn d2_partials_mixed_symmetry() {
        for &(r, s, t) in &[(0.0, 1.0, -0.5), (0.4, 0.41, 2.0), (-2.0, 1.0, 0.0)] {
            let a = d2_partials(r, s, t, D2_DEFAULT_EPS).drds;
            let b = d2_partials(s, r, t, D2_DEFAULT_EPS).drds;
            assert!(rel_err(a, b) < 1e-12, "({r},{s},{t})");
        }
    }

    #[test]
    fn gradient_matches_finite_differences_randomized() {
        let cfg = EvalConfig::default();
        // small deterministic sample across d = 1..3
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 6.0 - 3.0
        };
        for d in 1..=3usize {
            for _ in 0..10 {
                let vals: Vec<f64> = (0..=d).map(|_| next()).collect();
                let y = argvec(&vals);
                let g = grad_j(&y, &cfg).unwrap();
                let f = |v: &[f64]| eval_j(&argvec(v), &cfg).unwrap();
                let fd = fd_grad(&f, &vals, 1e-5);
                for i in 0..=d {
                    assert!(rel_err(g[i], fd[i]) < 1e-6, "d={d} i={i} {vals:?}");
                }
            }
        }
    }
}
