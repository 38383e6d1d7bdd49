//! Gamma/Dirichlet machinery: exact mixed moments, the simplex power
//! integral, seeded sampling, and a Monte-Carlo estimator of `J`.
//!
//! Normalizing independent `Gamma(a_i)` draws by their sum yields a
//! Dirichlet vector on the unit simplex, independent of the sum itself. Two
//! consequences drive this module: mixed moments have the closed form
//!
//! ```text
//! E( Π B_i^{k_i} ) = Γ(a_+)/Γ(a_+ + k_+) · Π Γ(a_i + k_i)/Γ(a_i),
//! ```
//!
//! and for unit shapes `B ~ Dirichlet(1, .., 1)` is uniform on the simplex,
//! giving the probabilistic representation
//! `J(y) = (1/d!) E exp(Σ B_i y_i)` estimated by [`mc_estimate_j`].
//!
//! Randomness is reproducible by construction: all sampling uses ChaCha8
//! seeded from a caller-supplied 64-bit seed, partitioned into fixed-size
//! blocks where block `b` draws from stream `b`. Results are therefore
//! bitwise independent of the thread schedule; concurrent callers should use
//! distinct seeds, no generator state is ever shared. Unit-shape Gamma
//! variables are drawn as `-ln(1 - U)`; other shapes use the
//! Marsaglia-Tsang method from `rand_distr`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::jfun::{center, ArgVector};
use crate::util::{factorial, ln_gamma, map_indexed};

/// Samples per RNG stream; also the parallel work unit.
const BLOCK: u64 = 8192;

/// Largest `a_i + k_i` (and `a_+ + k_+`) still routed through the exact
/// integer product; beyond this the log-gamma form is used to avoid
/// overflow.
const EXACT_LIMIT: f64 = 170.0;

#[derive(Debug, Error, PartialEq)]
pub enum DirichletError {
    #[error("parameter vector must not be empty")]
    Empty,
    #[error("parameter {index} must be positive and finite, got {value}")]
    NonPositiveParameter { index: usize, value: f64 },
    #[error("multi-index length {got} does not match parameter length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("arguments out of supported range: {0}")]
    Unsupported(&'static str),
}

/// Concentration parameters `(a_0, ..., a_m)`, all positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    a: Vec<f64>,
    a_plus: f64,
}

impl DirichletParams {
    pub fn new(a: Vec<f64>) -> Result<Self, DirichletError> {
        if a.is_empty() {
            return Err(DirichletError::Empty);
        }
        for (index, &value) in a.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(DirichletError::NonPositiveParameter { index, value });
            }
        }
        let a_plus = a.iter().sum();
        Ok(Self { a, a_plus })
    }

    /// Uniform distribution on the simplex: all shapes 1.
    pub fn unit(len: usize) -> Result<Self, DirichletError> {
        Self::new(vec![1.0; len])
    }

    pub fn shapes(&self) -> &[f64] {
        &self.a
    }

    pub fn a_plus(&self) -> f64 {
        self.a_plus
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Nonnegative integer exponents `(k_0, ..., k_m)` for mixed moments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex {
    k: Vec<u32>,
    k_plus: u32,
}

impl MultiIndex {
    pub fn new(k: Vec<u32>) -> Self {
        let k_plus = k.iter().sum();
        Self { k, k_plus }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.k
    }

    pub fn k_plus(&self) -> u32 {
        self.k_plus
    }
}

/// Seeded Monte-Carlo estimate: same seed and sample count reproduce the
/// value bitwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Exact mixed moment `E( Π B_i^{k_i} )` of the Dirichlet vector.
///
/// For integer shapes the gamma ratios collapse to rising factorials
/// (`Π_i Π_{l < k_i} (a_i + l)` over `Π_{l < k_+} (a_+ + l)`), evaluated in
/// exact integer arithmetic when it fits; with unit shapes this is
/// `Π k_i! / [d + k_+]_{k_+}`. Non-integer shapes (or arguments past the
/// overflow limit) go through log-gamma.
pub fn dirichlet_moment(p: &DirichletParams, k: &MultiIndex) -> Result<f64, DirichletError> {
    if p.len() != k.k.len() {
        return Err(DirichletError::LengthMismatch {
            expected: p.len(),
            got: k.k.len(),
        });
    }
    let integral_shapes = p.a.iter().all(|a| a.fract() == 0.0);
    let within_limit = p
        .a
        .iter()
        .zip(&k.k)
        .all(|(a, &ki)| a + ki as f64 <= EXACT_LIMIT)
        && p.a_plus + k.k_plus as f64 <= EXACT_LIMIT;

    if integral_shapes && within_limit {
        if let Some(v) = exact_moment_u128(p, k) {
            return Ok(v);
        }
        // factors are exact small integers; the product just rounds
        let mut num = 1.0f64;
        for (a, &ki) in p.a.iter().zip(&k.k) {
            for l in 0..ki {
                num *= a + l as f64;
            }
        }
        let mut den = 1.0f64;
        for l in 0..k.k_plus {
            den *= p.a_plus + l as f64;
        }
        return Ok(num / den);
    }

    let mut log = ln_gamma(p.a_plus) - ln_gamma(p.a_plus + k.k_plus as f64);
    for (a, &ki) in p.a.iter().zip(&k.k) {
        if ki > 0 {
            log += ln_gamma(a + ki as f64) - ln_gamma(*a);
        }
    }
    Ok(log.exp())
}

fn exact_moment_u128(p: &DirichletParams, k: &MultiIndex) -> Option<f64> {
    let mut num: u128 = 1;
    for (a, &ki) in p.a.iter().zip(&k.k) {
        let a = *a as u128;
        for l in 0..ki as u128 {
            num = num.checked_mul(a + l)?;
        }
    }
    let a_plus = p.a_plus.round() as u128;
    let mut den: u128 = 1;
    for l in 0..k.k_plus as u128 {
        den = den.checked_mul(a_plus + l)?;
    }
    Some(num as f64 / den as f64)
}

/// `∫_{T_m} Π u_i^{a_i - 1} du = Π Γ(a_i) / Γ(a_+)` over the open unit
/// simplex in `m` coordinates (with `u_0 = 1 - Σ u_i`).
pub fn simplex_power_integral(a: &[f64]) -> Result<f64, DirichletError> {
    if a.is_empty() {
        return Err(DirichletError::Empty);
    }
    for (index, &value) in a.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(DirichletError::NonPositiveParameter { index, value });
        }
    }
    let a_plus: f64 = a.iter().sum();
    if a.iter().all(|v| v.fract() == 0.0) && a_plus <= EXACT_LIMIT + 1.0 {
        let mut num = 1.0f64;
        for &v in a {
            num *= factorial(v as usize - 1);
        }
        return Ok(num / factorial(a_plus as usize - 1));
    }
    let mut log = -ln_gamma(a_plus);
    for &v in a {
        log += ln_gamma(v);
    }
    Ok(log.exp())
}

/// `∫_0^1 (1-u)^l u^m du = l! m! / (l + m + 1)!`, computed as a running
/// ratio so nothing overflows.
pub fn beta_integral(ell: u32, m: u32) -> Result<f64, DirichletError> {
    if ell + m > 30 {
        return Err(DirichletError::Unsupported("beta_integral needs l + m <= 30"));
    }
    let mut v = 1.0f64;
    for i in 1..=m {
        v *= i as f64 / (ell + i) as f64;
    }
    Ok(v / (ell + m + 1) as f64)
}

enum ShapeSampler {
    /// `Gamma(1)` drawn as `-ln(1 - U)`.
    Unit,
    /// Marsaglia-Tsang rejection sampling.
    Shaped(Gamma<f64>),
}

impl ShapeSampler {
    fn new(shape: f64) -> Self {
        if shape == 1.0 {
            ShapeSampler::Unit
        } else {
            ShapeSampler::Shaped(Gamma::new(shape, 1.0).expect("validated positive shape"))
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ShapeSampler::Unit => {
                let u: f64 = rng.random();
                -(1.0 - u).ln()
            }
            ShapeSampler::Shaped(g) => g.sample(rng),
        }
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Draws `n` Dirichlet vectors (length `m + 1`, nonnegative, summing to 1)
/// by normalizing independent Gamma draws. Deterministic in `seed`.
pub fn sample_dirichlet(p: &DirichletParams, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let samplers: Vec<ShapeSampler> = p.a.iter().map(|&a| ShapeSampler::new(a)).collect();
    let n_blocks = (n as u64).div_ceil(BLOCK) as usize;
    let blocks: Vec<Vec<Vec<f64>>> = map_indexed(n_blocks, |b| {
        let lo = b as u64 * BLOCK;
        let hi = (lo + BLOCK).min(n as u64);
        let mut rng = block_rng(seed, b as u64);
        let mut out = Vec::with_capacity((hi - lo) as usize);
        for _ in lo..hi {
            let mut g: Vec<f64> = samplers.iter().map(|s| s.draw(&mut rng)).collect();
            let total: f64 = g.iter().sum();
            for v in g.iter_mut() {
                *v /= total;
            }
            out.push(g);
        }
        out
    });
    blocks.into_iter().flatten().collect()
}

/// Monte-Carlo estimate of `J(y) = (1/d!) E exp(Σ B_i y_i)` with
/// `B ~ Dirichlet(1, ..., 1)`.
///
/// The exponent is evaluated in centered form `ȳ + Σ B_i (y_i - ȳ)`, so a
/// constant argument vector yields the exact value with zero standard
/// error. Per-block mean/variance accumulators are merged in block order,
/// making the result bitwise reproducible for a given `(n, seed)` regardless
/// of thread count. `n` must be at least 2.
pub fn mc_estimate_j(y: &ArgVector, n: u64, seed: u64) -> McEstimate {
    assert!(n >= 2, "mc_estimate_j needs at least 2 samples");
    let d = y.dim();
    let centered = center(y);
    let z = centered.residuals;
    let shift = centered.mean;

    let n_blocks = n.div_ceil(BLOCK) as usize;
    let stats: Vec<(u64, f64, f64)> = map_indexed(n_blocks, |b| {
        let lo = b as u64 * BLOCK;
        let hi = (lo + BLOCK).min(n);
        let mut rng = block_rng(seed, b as u64);
        let mut count = 0u64;
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        let mut g = vec![0.0f64; d + 1];
        for _ in lo..hi {
            let mut total = 0.0;
            for gi in g.iter_mut() {
                let u: f64 = rng.random();
                *gi = -(1.0 - u).ln();
                total += *gi;
            }
            let mut dot = 0.0;
            for (gi, zi) in g.iter().zip(&z) {
                dot += (gi / total) * zi;
            }
            let w = (shift + dot).exp();
            count += 1;
            let delta = w - mean;
            mean += delta / count as f64;
            m2 += delta * (w - mean);
        }
        (count, mean, m2)
    });

    let mut count = 0u64;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for (cb, mb, m2b) in stats {
        if cb == 0 {
            continue;
        }
        let total = count + cb;
        let delta = mb - mean;
        mean += delta * (cb as f64 / total as f64);
        m2 += m2b + delta * delta * (count as f64 * cb as f64 / total as f64);
        count = total;
    }

    let dfact = factorial(d);
    let variance = (m2 / (count - 1) as f64).max(0.0);
    McEstimate {
        value: mean / dfact,
        std_error: (variance / count as f64).sqrt() / dfact,
        n_samples: n,
        seed,
    }
}
