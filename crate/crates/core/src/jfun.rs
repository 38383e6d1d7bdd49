//! Evaluation of the simplex log-linear integral `J(y_0, ..., y_d)`.
//!
//! `J` is the d-th divided difference of `exp` at the nodes `y_0..y_d`. For
//! well-separated nodes the sorted difference-quotient recursion
//!
//! ```text
//! J(y_0..y_d) = ( J(y_1..y_d) - J(y_0..y_{d-1}) ) / (y_d - y_0)
//! ```
//!
//! is accurate, but it loses roughly `log10(1/spread)` digits per level as
//! the nodes cluster. Below the configurable spread threshold
//! [`EvalConfig::epsilon`] every subrange is therefore evaluated by the
//! centered series
//!
//! ```text
//! J(y) = exp(ȳ) · Σ_{k≥0} h_k(z) / (d + k)!,      z_i = y_i - ȳ,
//! ```
//!
//! where `h_k` is the complete homogeneous symmetric polynomial of degree
//! `k`. The series is entire and, for spreads below ~1, every term beyond
//! the first is a vanishing correction to `1/d!`, so the sum carries no
//! cancellation. Truncating it after the cubic term gives the classical
//! second-order expansion exposed as [`eval_taylor`].
//!
//! Values can overflow for arguments beyond ~709; no log-domain rescaling is
//! applied here. Callers working with large values should shift them first
//! using the identity `J(y) = exp(c) * J(y - c)` (see how [`crate::mle`]
//! centers per simplex).

use thiserror::Error;

use crate::util::factorial;

/// Default spread threshold for switching from the difference quotient to
/// the centered series.
///
/// At spread `s` the quotient's cancellation error is roughly
/// `(2/s)^d * 2^-52` while the series costs ~20 terms and stays at a few
/// ulps for spreads up to ~1, so the threshold mainly bounds the quotient
/// error: 0.1 keeps it below ~1e-11 through d = 3 in the worst case and far
/// below that for typical node layouts.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Default maximum supported dimension `d`.
pub const DEFAULT_MAX_DIM: usize = 32;

const MAX_SERIES_TERMS: usize = 160;

/// Errors from argument validation and evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum JError {
    #[error("argument vector must contain at least one value")]
    Empty,
    #[error("argument {index} is not finite: {value}")]
    NonFiniteInput { index: usize, value: f64 },
    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("epsilon must be a positive finite number, got {0}")]
    InvalidEpsilon(f64),
}

/// The vector `(y_0, ..., y_d)` of exponent values at the simplex corners.
///
/// Construction rejects empty and non-finite input; `J` itself is symmetric
/// in the entries, so evaluation canonicalizes by sorting and the original
/// order never matters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgVector {
    values: Vec<f64>,
}

impl ArgVector {
    pub fn new(values: Vec<f64>) -> Result<Self, JError> {
        if values.is_empty() {
            return Err(JError::Empty);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(JError::NonFiniteInput { index, value });
            }
        }
        Ok(Self { values })
    }

    /// Dimension `d`; the vector has `d + 1` entries.
    pub fn dim(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entries sorted ascending. `total_cmp` gives a canonical order for
    /// every finite input (including signed zeros), which is what makes
    /// evaluation bitwise permutation-invariant.
    fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `y` re-expressed around its mean: `z_i = y_i - ȳ` with `Σ z_i = 0` up to
/// roundoff, plus the power sums entering the second-order expansion.
#[derive(Debug, Clone)]
pub struct CenteredForm {
    /// `ȳ = (d+1)^{-1} Σ y_i`.
    pub mean: f64,
    /// Residuals `z_i = y_i - ȳ`.
    pub residuals: Vec<f64>,
    /// `z2 = Σ z_i^2 / 2`.
    pub sumsq_half: f64,
    /// `z3 = Σ z_i^3 / 3`.
    pub sumcube_third: f64,
}

/// Evaluation parameters: the spread threshold and a factorial table sized
/// for the maximum supported dimension.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    epsilon: f64,
    /// `factorials[k] = k!`, `k <= max_dim + 3`. Exact through 18!,
    /// correctly rounded beyond.
    factorials: Vec<f64>,
}

impl EvalConfig {
    pub fn new(epsilon: f64, max_dim: usize) -> Result<Self, JError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(JError::InvalidEpsilon(epsilon));
        }
        let factorials = (0..=max_dim + 3).map(factorial).collect();
        Ok(Self { epsilon, factorials })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_dim(&self) -> usize {
        self.factorials.len() - 4
    }

    /// `k!` from the precomputed table. Panics past `max_dim + 3`.
    pub fn factorial(&self, k: usize) -> f64 {
        self.factorials[k]
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self::new(DEFAULT_EPSILON, DEFAULT_MAX_DIM).expect("default config is valid")
    }
}

/// Which top-level rule produced an [`eval_j`] value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `d = 0`: `J(r) = exp(r)`.
    ClosedForm,
    /// Spread below epsilon: centered series.
    Taylor,
    /// Difference quotient over the two widest subranges.
    Recursion,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::ClosedForm => "closed-form",
            Branch::Taylor => "taylor",
            Branch::Recursion => "recursion",
        }
    }
}

/// [`eval_j`] result plus diagnostics: the top-level branch and the number
/// of table cells computed (at most `(d+1)(d+2)/2`).
#[derive(Debug, Clone, Copy)]
pub struct EvalDetail {
    pub value: f64,
    pub branch: Branch,
    pub cells: usize,
}

/// Centers `y` at its mean and returns the residual power sums.
///
/// The mean is accumulated relative to the first entry, so a constant vector
/// centers exactly (residuals identically zero).
pub fn center(y: &ArgVector) -> CenteredForm {
    let vs = y.values();
    let n = vs.len() as f64;
    let y0 = vs[0];
    let mut acc = 0.0;
    for &v in vs {
        acc += v - y0;
    }
    let mean_offset = acc / n;
    let mean = y0 + mean_offset;
    let residuals: Vec<f64> = vs.iter().map(|&v| (v - y0) - mean_offset).collect();
    let mut z2 = 0.0;
    let mut z3 = 0.0;
    for &z in &residuals {
        z2 += z * z;
        z3 += z * z * z;
    }
    CenteredForm {
        mean,
        residuals,
        sumsq_half: z2 / 2.0,
        sumcube_third: z3 / 3.0,
    }
}

/// Second-order expansion of `J` around the argument mean:
/// `exp(ȳ) (1/d! + z2/(d+2)! + z3/(d+3)!)`.
///
/// Truncation error is `O(‖z‖^4)`, so this is only meaningful for small
/// spreads; it exists as a public operation because it is the classical
/// clustered-argument formula and the test suites pin its remainder order.
pub fn eval_taylor(y: &ArgVector) -> f64 {
    let d = y.dim();
    let c = center(y);
    c.mean.exp()
        * (1.0 / factorial(d) + c.sumsq_half / factorial(d + 2) + c.sumcube_third / factorial(d + 3))
}

/// Full centered series `exp(ȳ) Σ_k h_k(z) · d!/(d+k)! / d!` for a sorted
/// cluster of nodes. `h_k` is built with Newton's identities from the power
/// sums of the residuals; terms decay factorially, and for cluster spreads
/// up to ~1 every term past the first is a small correction, so the sum is
/// stable to a few ulps.
fn cluster_series(ys: &[f64]) -> f64 {
    let n = ys.len();
    let d = n - 1;
    let y0 = ys[0];
    let mut acc = 0.0;
    for &v in ys {
        acc += v - y0;
    }
    let mean_offset = acc / n as f64;
    let z: Vec<f64> = ys.iter().map(|&v| (v - y0) - mean_offset).collect();

    // g_k = 1/(d+k)!; h grows one degree per iteration.
    let mut g = 1.0 / factorial(d);
    let mut sum = g; // h_0 = 1
    let mut h = Vec::with_capacity(24);
    h.push(1.0f64);
    let mut p = Vec::with_capacity(24);
    p.push(f64::NAN); // p[0] unused
    let mut powers = z.clone();
    let mut quiet = 0;
    for k in 1..=MAX_SERIES_TERMS {
        if k > 1 {
            for (pw, &zi) in powers.iter_mut().zip(&z) {
                *pw *= zi;
            }
        }
        p.push(powers.iter().sum::<f64>());
        // Newton: k h_k = Σ_{j=1..k} p_j h_{k-j}
        let mut hk = 0.0;
        for j in 1..=k {
            hk += p[j] * h[k - j];
        }
        hk /= k as f64;
        h.push(hk);
        g /= (d + k) as f64;
        let term = hk * g;
        sum += term;
        if term.abs() <= 0.25 * f64::EPSILON * sum.abs() {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    (y0 + mean_offset).exp() * sum
}

/// Evaluates `J(y_0, ..., y_d)` with full diagnostics.
///
/// The input is sorted ascending and a divided-difference table is filled
/// over contiguous subranges `(i..j)`: a subrange whose spread
/// `y_j - y_i` is below `cfg.epsilon()` is evaluated by the centered series,
/// otherwise as `(table[i+1..j] - table[i..j-1]) / (y_j - y_i)`. The table
/// costs `(d+1)(d+2)/2` cell computations.
pub fn eval_j_detailed(y: &ArgVector, cfg: &EvalConfig) -> Result<EvalDetail, JError> {
    let d = y.dim();
    if d > cfg.max_dim() {
        return Err(JError::DimensionTooLarge {
            dim: d,
            max: cfg.max_dim(),
        });
    }
    let ys = y.sorted_values();
    let mut cells = 0usize;
    let mut table: Vec<f64> = ys
        .iter()
        .map(|&v| {
            cells += 1;
            v.exp()
        })
        .collect();
    let mut branch = Branch::ClosedForm;
    for w in 1..=d {
        for i in 0..=d - w {
            let j = i + w;
            let spread = ys[j] - ys[i];
            let (v, b) = if spread < cfg.epsilon() {
                (cluster_series(&ys[i..=j]), Branch::Taylor)
            } else {
                ((table[i + 1] - table[i]) / spread, Branch::Recursion)
            };
            table[i] = v;
            cells += 1;
            if w == d {
                branch = b;
            }
        }
    }
    Ok(EvalDetail {
        value: table[0],
        branch,
        cells,
    })
}

/// Evaluates `J(y_0, ..., y_d)`. See [`eval_j_detailed`].
pub fn eval_j(y: &ArgVector, cfg: &EvalConfig) -> Result<f64, JError> {
    eval_j_detailed(y, cfg).map(|detail| detail.value)
}

/// `J(r, s)` by the explicit two-node formulas:
/// `(exp(s) - exp(r)) / (s - r)` for separated arguments,
/// `exp(r) * expm1(h)/h` (`h = s - r`) inside the cluster window, and
/// exactly `exp(r)` at `r = s`.
pub fn eval_j_d1(r: f64, s: f64) -> f64 {
    let h = s - r;
    if h.abs() >= DEFAULT_EPSILON {
        (s.exp() - r.exp()) / h
    } else if h == 0.0 {
        r.exp()
    } else {
        // expm1 removes the cancellation; accurate for all |h| but only
        // needed below the threshold.
        r.exp() * (h.exp_m1() / h)
    }
}

/// `J(r, s, t)` via the order statistics `y_(0) <= y_(1) <= y_(2)`:
/// the quotient `(J(y_(1), y_(2)) - J(y_(0), y_(1))) / (y_(2) - y_(0))` for
/// separated nodes, `exp(y_(0))/2` when all three coincide, and the centered
/// series inside the cluster window.
pub fn eval_j_d2(r: f64, s: f64, t: f64) -> f64 {
    let mut v = [r, s, t];
    v.sort_by(f64::total_cmp);
    let spread = v[2] - v[0];
    if spread == 0.0 {
        v[0].exp() / 2.0
    } else if spread >= DEFAULT_EPSILON {
        (eval_j_d1(v[1], v[2]) - eval_j_d1(v[0], v[1])) / spread
    } else {
        cluster_series(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn argvec(vals: &[f64]) -> ArgVector {
        ArgVector::new(vals.to_vec()).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    const E: f64 = std::f64::consts::E;

    #[test]
    fn argvector_rejects_bad_input() {
        assert_eq!(ArgVector::new(vec![]).unwrap_err(), JError::Empty);
        assert!(matches!(
            ArgVector::new(vec![0.0, f64::NAN]).unwrap_err(),
            JError::NonFiniteInput { index: 1, .. }
        ));
        assert!(matches!(
            ArgVector::new(vec![f64::INFINITY]).unwrap_err(),
            JError::NonFiniteInput { index: 0, .. }
        ));
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::new(0.0, 8).is_err());
        assert!(EvalConfig::new(-1.0, 8).is_err());
        assert!(EvalConfig::new(f64::NAN, 8).is_err());
        let cfg = EvalConfig::new(1e-3, 8).unwrap();
        assert_eq!(cfg.max_dim(), 8);
        assert_eq!(cfg.factorial(5), 120.0);
    }

    #[test]
    fn config_factorials_exact_small() {
        let cfg = EvalConfig::new(DEFAULT_EPSILON, DEFAULT_MAX_DIM).unwrap();
        let mut exact: u64 = 1;
        for k in 0..=18usize {
            if k > 0 {
                exact *= k as u64;
            }
            assert_eq!(cfg.factorial(k), exact as f64);
        }
        // Correctly rounded past the exact range: compare against exact
        // integers converted in one step.
        let mut big: u128 = 1;
        for k in 1..=34usize {
            big *= k as u128;
            assert_eq!(cfg.factorial(k), big as f64);
        }
    }

    #[test]
    fn center_examples() {
        let c = center(&argvec(&[0.0, 0.0]));
        assert_eq!(c.mean, 0.0);
        assert_eq!(c.residuals, vec![0.0, 0.0]);
        assert_eq!(c.sumsq_half, 0.0);
        assert_eq!(c.sumcube_third, 0.0);

        let c = center(&argvec(&[1.0, 1.0, 1.0]));
        assert_eq!(c.mean, 1.0);
        assert_eq!(c.residuals, vec![0.0, 0.0, 0.0]);

        let a = 0.75;
        let c = center(&argvec(&[-a, a]));
        assert_eq!(c.mean, 0.0);
        assert_eq!(c.residuals, vec![-a, a]);
        assert_eq!(c.sumsq_half, a * a);
        assert_eq!(c.sumcube_third, 0.0);
    }

    #[test]
    fn center_residual_sum_bound() {
        // Σ residuals = 0 up to 4 (d+1) ulp of max |y_i|.
        let vals = vec![3.1, -2.7, 11.25, 0.3, -9.9, 5.5];
        let c = center(&argvec(&vals));
        let max_abs = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ulp = max_abs * f64::EPSILON;
        let resid_sum: f64 = c.residuals.iter().sum();
        assert!(resid_sum.abs() <= 4.0 * vals.len() as f64 * ulp);
        assert!(c.sumsq_half >= 0.0);
    }

    #[test]
    fn taylor_all_zero_is_inverse_factorial() {
        for d in 0..6usize {
            let y = argvec(&vec![0.0; d + 1]);
            assert_eq!(eval_taylor(&y), 1.0 / factorial(d));
        }
    }

    #[test]
    fn taylor_symmetric_pair_formula() {
        // (−ε, ε): the expansion gives exactly 1 + ε²/6; the true value is
        // sinh(ε)/ε, off by ε⁴/120 + O(ε⁶).
        for &eps in &[1e-1, 1e-2, 1e-3] {
            let approx = eval_taylor(&argvec(&[-eps, eps]));
            assert!(rel_err(approx, 1.0 + eps * eps / 6.0) < 1e-15);
            let truth = eps.sinh() / eps;
            let discrepancy = (approx - truth).abs();
            let lead = eps.powi(4) / 120.0;
            assert!(discrepancy < 1.05 * lead, "eps = {eps}");
            assert!(discrepancy > 0.9 * lead, "eps = {eps}");
        }
    }

    #[test]
    fn eval_j_base_cases() {
        let cfg = EvalConfig::default();
        for &c in &[-3.0, 0.0, 1.5, 20.0] {
            let detail = eval_j_detailed(&argvec(&[c]), &cfg).unwrap();
            assert_eq!(detail.value, c.exp());
            assert_eq!(detail.branch, Branch::ClosedForm);
            assert_eq!(detail.cells, 1);
        }
    }

    #[test]
    fn eval_j_known_values() {
        let cfg = EvalConfig::default();
        assert!(rel_err(eval_j(&argvec(&[0.0, 1.0]), &cfg).unwrap(), E - 1.0) < 1e-15);
        assert!(rel_err(eval_j(&argvec(&[0.0, 0.0, 1.0]), &cfg).unwrap(), E - 2.0) < 2e-15);
        let v = eval_j(&argvec(&[5.0, 5.0, 5.0]), &cfg).unwrap();
        assert!(rel_err(v, 5f64.exp() / 2.0) < 1e-15);
    }

    #[test]
    fn eval_j_dimension_gate() {
        let cfg = EvalConfig::new(DEFAULT_EPSILON, 3).unwrap();
        let y = argvec(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            eval_j(&y, &cfg).unwrap_err(),
            JError::DimensionTooLarge { dim: 4, max: 3 }
        );
    }

    #[test]
    fn eval_j_cell_count_matches_bound() {
        let cfg = EvalConfig::default();
        for d in 0..8usize {
            let vals: Vec<f64> = (0..=d).map(|i| i as f64 * 0.73 - 1.0).collect();
            let detail = eval_j_detailed(&argvec(&vals), &cfg).unwrap();
            assert_eq!(detail.cells, (d + 1) * (d + 2) / 2);
        }
    }

    #[test]
    fn near_degenerate_uses_series_and_matches_taylor() {
        let cfg = EvalConfig::default();
        for d in 1..=3usize {
            let vals: Vec<f64> = (0..=d).map(|i| 0.4 + 1e-6 * i as f64 / d as f64).collect();
            let y = argvec(&vals);
            let detail = eval_j_detailed(&y, &cfg).unwrap();
            assert_eq!(detail.branch, Branch::Taylor);
            assert!(rel_err(detail.value, eval_taylor(&y)) < 1e-13);
        }
    }

    #[test]
    fn d1_examples() {
        assert_eq!(eval_j_d1(0.0, 0.0), 1.0);
        assert!(rel_err(eval_j_d1(0.0, 1.0), E - 1.0) < 1e-15);
        assert_eq!(eval_j_d1(0.0, 1.0), eval_j_d1(1.0, 0.0));
    }

    #[test]
    fn d1_agrees_with_eval_j() {
        let cfg = EvalConfig::default();
        let cases = [
            (0.0, 1.0),
            (-2.5, 3.0),
            (0.3, 0.3001),
            (1.0, 1.0 + 5e-9),
            (-4.0, -4.0),
            (2.0, 2.05),
        ];
        for &(r, s) in &cases {
            let a = eval_j_d1(r, s);
            let b = eval_j(&argvec(&[r, s]), &cfg).unwrap();
            assert!(rel_err(a, b) < 1e-14, "({r}, {s})");
        }
    }

    #[test]
    fn d2_examples() {
        assert_eq!(eval_j_d2(0.0, 0.0, 0.0), 0.5);
        assert!(rel_err(eval_j_d2(0.0, 0.0, 1.0), E - 2.0) < 2e-15);
    }

    #[test]
    fn d2_agrees_with_eval_j() {
        let cfg = EvalConfig::default();
        let cases = [
            (0.0, 1.0, 2.0),
            (-1.0, 0.5, 0.50001),
            (0.2, 0.2, 0.2),
            (3.0, -2.0, 0.01),
            (1.0, 1.0 + 1e-7, 1.0 - 1e-7),
            (0.0, 0.04, 0.09),
        ];
        for &(r, s, t) in &cases {
            let a = eval_j_d2(r, s, t);
            let b = eval_j(&argvec(&[r, s, t]), &cfg).unwrap();
            assert!(rel_err(a, b) < 1e-13, "({r}, {s}, {t})");
        }
    }

    #[test]
    fn constant_arguments_exact() {
        let cfg = EvalConfig::default();
        for d in 0..=10usize {
            for &c in &[-20.0, -3.7, 0.0, 0.1, 12.5, 20.0] {
                let v = eval_j(&argvec(&vec![c; d + 1]), &cfg).unwrap();
                assert!(rel_err(v, c.exp() / factorial(d)) < 1e-14, "d={d} c={c}");
            }
        }
    }

    proptest! {
        #[test]
        fn permutation_invariance_bitwise(
            mut vals in proptest::collection::vec(-10.0f64..10.0, 1..7).prop_shuffle()
        ) {
            let cfg = EvalConfig::default();
            let reference = eval_j(&ArgVector::new(vals.clone()).unwrap(), &cfg).unwrap();
            vals.reverse();
            let flipped = eval_j(&ArgVector::new(vals.clone()).unwrap(), &cfg).unwrap();
            prop_assert_eq!(reference.to_bits(), flipped.to_bits());
            vals.sort_by(f64::total_cmp);
            let sorted = eval_j(&ArgVector::new(vals).unwrap(), &cfg).unwrap();
            prop_assert_eq!(reference.to_bits(), sorted.to_bits());
        }

        #[test]
        fn centering_identity(
            vals in proptest::collection::vec(-5.0f64..5.0, 1..6),
            shift in -10.0f64..10.0,
        ) {
            let cfg = EvalConfig::default();
            let plain = eval_j(&ArgVector::new(vals.clone()).unwrap(), &cfg).unwrap();
            let shifted: Vec<f64> = vals.iter().map(|v| v - shift).collect();
            let recombined = shift.exp() * eval_j(&ArgVector::new(shifted).unwrap(), &cfg).unwrap();
            prop_assert!(rel_err(plain, recombined) < 1e-12);
        }

        #[test]
        fn positive_and_monotone(
            vals in proptest::collection::vec(-5.0f64..5.0, 2..6),
            idx in 0usize..5,
        ) {
            let cfg = EvalConfig::default();
            let idx = idx % vals.len();
            let base = eval_j(&ArgVector::new(vals.clone()).unwrap(), &cfg).unwrap();
            prop_assert!(base > 0.0);
            let mut bumped = vals;
            bumped[idx] += 0.25;
            let higher = eval_j(&ArgVector::new(bumped).unwrap(), &cfg).unwrap();
            prop_assert!(higher > base);
        }
    }
}
