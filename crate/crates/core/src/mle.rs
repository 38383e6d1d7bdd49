//! Maximum-likelihood log-linear density estimation on a simplicial
//! partition.
//!
//! Given a triangulation `S = ∪ S_j` and an empirical distribution with
//! weights `w_k` at points `x_k`, the estimator maximizes the concave
//! functional
//!
//! ```text
//! Σ_k w_k ψ(x_k)  -  ∫_S exp(ψ(x)) dx
//! ```
//!
//! over continuous functions `ψ` that are linear on every simplex. Such a
//! `ψ` is determined by its vertex values, the first term is linear in
//! them, and the integral decomposes per simplex into
//! `Σ_j |D_j| · J(y_{0j}, ..., y_{dj})` with `D_j` the edge-matrix
//! determinant and `y_ij` the vertex values — so [`crate::jfun`] supplies
//! the integral and [`crate::jderiv`] its exact gradient. The maximizer
//! `ψ̂` makes `exp(ψ̂)` a probability density (stationarity along constant
//! shifts forces unit mass), which [`fit`] verifies via `grad_norm`.
//!
//! The absolute value `|D_j|` is used in the decomposition: the
//! change-of-variables argument behind it requires it, and it keeps the
//! result correct for arbitrary vertex orderings within a simplex.
//!
//! Per-simplex terms are independent and evaluated concurrently under the
//! `parallel` feature; the reduction always runs in simplex order with
//! compensated summation, so results do not depend on the schedule. Each
//! simplex's `J` is evaluated with the vertex maximum factored out
//! (`J(y) = exp(max) J(y - max)`), which keeps `exp` in range for any
//! reasonable iterate; a line-search trial wild enough to overflow produces
//! `-inf` objective and is simply rejected.

use thiserror::Error;

use crate::jderiv::grad_j;
use crate::jfun::{eval_j, ArgVector, EvalConfig, JError};
use crate::util::{compensated_sum, factorial, map_indexed, CompensatedSum};

/// Barycentric coordinates this far below zero still count as inside; keeps
/// face points from falling between simplices.
const INSIDE_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MleError {
    #[error("triangulation has no vertices or no simplices")]
    EmptyTriangulation,
    #[error("vertex {vertex} has dimension {got}, expected {expected}")]
    VertexDimensionMismatch { vertex: usize, expected: usize, got: usize },
    #[error("simplex {simplex} is invalid: {reason}")]
    InvalidSimplex { simplex: usize, reason: &'static str },
    #[error("simplex {simplex} is numerically degenerate")]
    DegenerateSimplex { simplex: usize },
    #[error("simplex vertex set is degenerate")]
    Degenerate,
    #[error("sample is empty")]
    EmptySample,
    #[error("sample weights are invalid: {0}")]
    InvalidWeights(&'static str),
    #[error("sample point {index} lies outside the triangulation")]
    UnassignedPoint { index: usize },
    #[error("point has dimension {got}, expected {expected}")]
    PointDimensionMismatch { expected: usize, got: usize },
    #[error("psi has {got} values, triangulation has {expected} vertices")]
    VertexCountMismatch { expected: usize, got: usize },
    #[error("dimension {dim} needs eval config max_dim >= {needed}")]
    ConfigTooSmall { dim: usize, needed: usize },
    #[error(transparent)]
    Eval(#[from] JError),
}

/// Signed determinant of the edge matrix
/// `[x_1 - x_0, ..., x_d - x_0]` of one simplex, by partial-pivot
/// elimination. Errors if the determinant is below `1e-12 · (max edge)^d`.
#[allow(clippy::needless_range_loop)] // elimination indexing reads clearer
pub fn simplex_det(points: &[Vec<f64>]) -> Result<f64, MleError> {
    let d = points.len() - 1;
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(MleError::Degenerate);
    }
    let mut m = vec![vec![0.0f64; d]; d];
    for (col, p) in points[1..].iter().enumerate() {
        for row in 0..d {
            m[row][col] = p[row] - points[0][row];
        }
    }
    let mut det = 1.0f64;
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col] == 0.0 {
            det = 0.0;
            break;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..d {
            let factor = m[row][col] / m[col][col];
            for k in col..d {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut max_edge: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dist2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            max_edge = max_edge.max(dist2.sqrt());
        }
    }
    if det.abs() < 1e-12 * max_edge.powi(d as i32) {
        return Err(MleError::Degenerate);
    }
    Ok(det)
}

/// Vertex coordinates, simplex vertex-index lists, and the per-simplex edge
/// determinants. Simplices must be non-degenerate; disjoint interiors are
/// the caller's responsibility.
#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    dets: Vec<f64>,
    dim: usize,
}

impl Triangulation {
    pub fn new(vertices: Vec<Vec<f64>>, simplices: Vec<Vec<usize>>) -> Result<Self, MleError> {
        if vertices.is_empty() || simplices.is_empty() {
            return Err(MleError::EmptyTriangulation);
        }
        let dim = vertices[0].len();
        if dim == 0 {
            return Err(MleError::EmptyTriangulation);
        }
        for (vertex, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(MleError::VertexDimensionMismatch {
                    vertex,
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(MleError::InvalidSimplex {
                    simplex: 0,
                    reason: "non-finite vertex coordinate",
                });
            }
        }
        let mut dets = Vec::with_capacity(simplices.len());
        for (si, s) in simplices.iter().enumerate() {
            if s.len() != dim + 1 {
                return Err(MleError::InvalidSimplex {
                    simplex: si,
                    reason: "wrong number of vertices",
                });
            }
            if s.iter().any(|&v| v >= vertices.len()) {
                return Err(MleError::InvalidSimplex {
                    simplex: si,
                    reason: "vertex index out of range",
                });
            }
            let mut seen = s.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != s.len() {
                return Err(MleError::DegenerateSimplex { simplex: si });
            }
            let pts: Vec<Vec<f64>> = s.iter().map(|&v| vertices[v].clone()).collect();
            let det = simplex_det(&pts).map_err(|_| MleError::DegenerateSimplex { simplex: si })?;
            dets.push(det);
        }
        Ok(Self {
            vertices,
            simplices,
            dets,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    /// Signed edge determinants, one per simplex.
    pub fn dets(&self) -> &[f64] {
        &self.dets
    }

    /// Total volume `Σ |D_j| / d!`.
    pub fn volume(&self) -> f64 {
        compensated_sum(self.dets.iter().map(|d| d.abs())) / factorial(self.dim)
    }

    /// Barycentric coordinates of `x` with respect to simplex `j`
    /// (length `d + 1`, summing to 1; all nonnegative iff `x` is inside).
    #[allow(clippy::needless_range_loop)]
    pub fn barycentric(&self, j: usize, x: &[f64]) -> Vec<f64> {
        let s = &self.simplices[j];
        let x0 = &self.vertices[s[0]];
        let d = self.dim;
        let mut m = vec![vec![0.0f64; d + 1]; d];
        for (col, &v) in s[1..].iter().enumerate() {
            for row in 0..d {
                m[row][col] = self.vertices[v][row] - x0[row];
            }
        }
        for row in 0..d {
            m[row][d] = x[row] - x0[row];
        }
        // forward elimination with partial pivoting on the augmented system
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
                .unwrap();
            m.swap(pivot, col);
            for row in col + 1..d {
                let factor = m[row][col] / m[col][col];
                for k in col..=d {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
        let mut lambda = vec![0.0f64; d + 1];
        for row in (0..d).rev() {
            let mut v = m[row][d];
            for k in row + 1..d {
                v -= m[row][k] * lambda[k + 1];
            }
            lambda[row + 1] = v / m[row][row];
        }
        lambda[0] = 1.0 - lambda[1..].iter().sum::<f64>();
        lambda
    }

    /// Lowest-index simplex containing `x`, if any.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        for j in 0..self.simplices.len() {
            let lambda = self.barycentric(j, x);
            if lambda.iter().all(|&l| l >= -INSIDE_TOL) {
                return Some((j, lambda));
            }
        }
        None
    }
}

/// One sample point's location in the triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub simplex: usize,
    pub bary: Vec<f64>,
}

/// Weighted sample points, each resolved to a containing simplex with
/// barycentric coordinates. The per-vertex aggregate
/// `Σ_k w_k λ_{kv}` — the constant gradient of the linear term — is
/// precomputed at construction.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    assignments: Vec<Assignment>,
    vertex_weight: Vec<f64>,
}

impl EmpiricalSample {
    /// Assigns `points` to `t`. Missing weights default to uniform `1/n`.
    /// Points on shared faces go to the lowest-index containing simplex.
    pub fn assign(
        t: &Triangulation,
        points: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, MleError> {
        if points.is_empty() {
            return Err(MleError::EmptySample);
        }
        let n = points.len();
        let weights = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(MleError::InvalidWeights("length mismatch with points"));
                }
                if w.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
                    return Err(MleError::InvalidWeights("weights must be positive"));
                }
                let total = compensated_sum(w.iter().copied());
                if (total - 1.0).abs() > 1e-12 {
                    return Err(MleError::InvalidWeights("weights must sum to 1"));
                }
                w
            }
            None => vec![1.0 / n as f64; n],
        };
        let mut assignments = Vec::with_capacity(n);
        for (index, p) in points.iter().enumerate() {
            if p.len() != t.dim() {
                return Err(MleError::PointDimensionMismatch {
                    expected: t.dim(),
                    got: p.len(),
                });
            }
            match t.locate(p) {
                Some((simplex, bary)) => assignments.push(Assignment { simplex, bary }),
                None => return Err(MleError::UnassignedPoint { index }),
            }
        }
        let mut vertex_weight = vec![CompensatedSum::default(); t.vertices().len()];
        for (a, &w) in assignments.iter().zip(&weights) {
            for (pos, &v) in t.simplices()[a.simplex].iter().enumerate() {
                vertex_weight[v].add(w * a.bary[pos]);
            }
        }
        Ok(Self {
            points,
            weights,
            assignments,
            vertex_weight: vertex_weight.iter().map(|s| s.value()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    /// `Σ_k w_k λ_{kv}` per vertex.
    pub fn vertex_weight(&self) -> &[f64] {
        &self.vertex_weight
    }
}

/// Piecewise-linear log-density given by one value per vertex; shared
/// vertices enforce continuity across simplices.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiValues {
    pub values: Vec<f64>,
}

impl PsiValues {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }
}

fn check_psi(t: &Triangulation, psi: &PsiValues) -> Result<(), MleError> {
    if psi.values.len() != t.vertices().len() {
        return Err(MleError::VertexCountMismatch {
            expected: t.vertices().len(),
            got: psi.values.len(),
        });
    }
    Ok(())
}

fn check_cfg(t: &Triangulation, cfg: &EvalConfig, extra: usize) -> Result<(), MleError> {
    if t.dim() + extra > cfg.max_dim() {
        return Err(MleError::ConfigTooSmall {
            dim: t.dim(),
            needed: t.dim() + extra,
        });
    }
    Ok(())
}

/// Per-simplex values with the vertex maximum factored out.
fn simplex_centered(t: &Triangulation, psi: &[f64], j: usize) -> (f64, Vec<f64>) {
    let s = &t.simplices()[j];
    let mut max = f64::NEG_INFINITY;
    for &v in s {
        max = max.max(psi[v]);
    }
    let z: Vec<f64> = s.iter().map(|&v| psi[v] - max).collect();
    (max, z)
}

/// `∫_S exp(ψ) dx = Σ_j |D_j| J(y_j)`, accumulated in simplex order with
/// compensated summation. Returns `+inf` if `exp` overflows (values beyond
/// ~709 after per-simplex centering).
pub fn integral_exp_psi(
    t: &Triangulation,
    psi: &PsiValues,
    cfg: &EvalConfig,
) -> Result<f64, MleError> {
    check_psi(t, psi)?;
    check_cfg(t, cfg, 0)?;
    let terms = map_indexed(t.simplices().len(), |j| {
        let (max, z) = simplex_centered(t, &psi.values, j);
        let arg = ArgVector::new(z).expect("psi validated finite by construction");
        let j_val = eval_j(&arg, cfg).expect("dimension checked against config");
        t.dets()[j].abs() * max.exp() * j_val
    });
    Ok(compensated_sum(terms))
}

/// Objective `Σ_k w_k ψ(x_k) - ∫_S exp(ψ)` and its exact gradient per
/// vertex: `Σ_k w_k λ_{kv} - Σ_{j ∋ v} |D_j| ∂J/∂y_v`.
pub fn objective_and_grad(
    t: &Triangulation,
    sample: &EmpiricalSample,
    psi: &PsiValues,
    cfg: &EvalConfig,
) -> Result<(f64, Vec<f64>), MleError> {
    check_psi(t, psi)?;
    check_cfg(t, cfg, 1)?;
    if sample.vertex_weight.len() != t.vertices().len() {
        return Err(MleError::VertexCountMismatch {
            expected: t.vertices().len(),
            got: sample.vertex_weight.len(),
        });
    }
    let linear = compensated_sum(
        sample
            .vertex_weight
            .iter()
            .zip(&psi.values)
            .map(|(w, v)| w * v),
    );
    let per_simplex: Vec<(f64, Vec<f64>)> = map_indexed(t.simplices().len(), |j| {
        let (max, z) = simplex_centered(t, &psi.values, j);
        let scale = t.dets()[j].abs() * max.exp();
        let arg = ArgVector::new(z).expect("psi validated finite by construction");
        let value = scale * eval_j(&arg, cfg).expect("dimension checked against config");
        let grads = grad_j(&arg, cfg)
            .expect("dimension checked against config")
            .into_iter()
            .map(|g| scale * g)
            .collect();
        (value, grads)
    });
    let integral = compensated_sum(per_simplex.iter().map(|(v, _)| *v));
    let mut grad = sample.vertex_weight.clone();
    for (j, (_, grads)) in per_simplex.iter().enumerate() {
        for (pos, &v) in t.simplices()[j].iter().enumerate() {
            grad[v] -= grads[pos];
        }
    }
    Ok((linear - integral, grad))
}

fn objective_only(
    t: &Triangulation,
    sample: &EmpiricalSample,
    psi: &PsiValues,
    cfg: &EvalConfig,
) -> Result<f64, MleError> {
    let linear = compensated_sum(
        sample
            .vertex_weight
            .iter()
            .zip(&psi.values)
            .map(|(w, v)| w * v),
    );
    Ok(linear - integral_exp_psi(t, psi, cfg)?)
}

/// Stopping rule and iteration cap for [`fit`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Convergence threshold on the gradient infinity norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Fitted vertex values and termination diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub psi: PsiValues,
    /// Objective value at the returned iterate.
    pub loglik: f64,
    /// Gradient infinity norm at the returned iterate.
    pub grad_norm: f64,
    /// Ascent steps taken.
    pub iterations: usize,
    /// True iff `grad_norm <= tol`; false means the best iterate found is
    /// returned anyway.
    pub converged: bool,
    /// Objective value per iterate, starting at the initial point;
    /// non-decreasing by construction.
    pub trace: Vec<f64>,
}

/// Maximizes the objective by gradient ascent with Armijo backtracking
/// (halving factor, sufficient-increase constant 1e-4), starting from the
/// uniform log-density `ψ ≡ -ln vol(S)`.
///
/// The objective is concave and the line search only accepts improvements,
/// so the trace is monotone. At convergence the fitted mass
/// `∫exp(ψ̂)` equals 1 up to roughly `n_vertices · tol`, since the gradient
/// entries sum to `1 - ∫exp(ψ)`.
pub fn fit(
    t: &Triangulation,
    sample: &EmpiricalSample,
    cfg: &EvalConfig,
    opts: &FitOptions,
) -> Result<FitResult, MleError> {
    check_cfg(t, cfg, 1)?;
    let nv = t.vertices().len();
    let mut psi = PsiValues::new(vec![-t.volume().ln(); nv]);
    let (mut obj, mut grad) = objective_and_grad(t, sample, &psi, cfg)?;
    let mut trace = vec![obj];
    let mut step = 1.0f64;
    let mut iterations = 0usize;

    for _ in 0..opts.max_iter {
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm <= opts.tol {
            break;
        }
        let gsq: f64 = grad.iter().map(|g| g * g).sum();
        let mut alpha = (step * 2.0).min(1e6);
        let mut accepted = None;
        for _ in 0..80 {
            let trial = PsiValues::new(
                psi.values
                    .iter()
                    .zip(&grad)
                    .map(|(p, g)| p + alpha * g)
                    .collect(),
            );
            let trial_obj = objective_only(t, sample, &trial, cfg)?;
            if trial_obj.is_finite() && trial_obj >= obj + 1e-4 * alpha * gsq {
                accepted = Some((trial, trial_obj, alpha));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, trial_obj, used)) = accepted else {
            break; // no productive step at any scale: return best iterate
        };
        psi = trial;
        obj = trial_obj;
        step = used;
        iterations += 1;
        let refreshed = objective_and_grad(t, sample, &psi, cfg)?;
        grad = refreshed.1;
        trace.push(obj);
    }

    let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(FitResult {
        converged: grad_norm <= opts.tol,
        psi,
        loglik: obj,
        grad_norm,
        iterations,
        trace,
    })
}

/// Density value at `x`; `inside == false` (with value 0) when `x` is not
/// covered by any simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityValue {
    pub value: f64,
    pub inside: bool,
}

/// `exp(ψ(x))` by barycentric interpolation on the containing simplex.
pub fn eval_density(t: &Triangulation, psi: &PsiValues, x: &[f64]) -> Result<DensityValue, MleError> {
    check_psi(t, psi)?;
    if x.len() != t.dim() {
        return Err(MleError::PointDimensionMismatch {
            expected: t.dim(),
            got: x.len(),
        });
    }
    match t.locate(x) {
        Some((j, lambda)) => {
            let log_val: f64 = t.simplices()[j]
                .iter()
                .zip(&lambda)
                .map(|(&v, l)| l * psi.values[v])
                .sum();
            Ok(DensityValue {
                value: log_val.exp(),
                inside: true,
            })
        }
        None => Ok(DensityValue {
            value: 0.0,
            inside: false,
        }),
    }
}
