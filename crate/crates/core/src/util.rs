//! Shared numeric plumbing: factorials, compensated summation, log-gamma,
//! and the parallel/sequential map helper.

/// `k!` as an `f64`.
///
/// Exact for `k <= 18` (the largest factorial below 2^53) and correctly
/// rounded up to `k = 34` via exact `u128` arithmetic; beyond that the value
/// is accumulated in `f64` and may be a couple of ulps off.
pub(crate) fn factorial(k: usize) -> f64 {
    if k <= 34 {
        let mut f: u128 = 1;
        for i in 2..=k as u128 {
            f *= i;
        }
        f as f64
    } else {
        let mut f = factorial(34);
        for i in 35..=k {
            f *= i as f64;
        }
        f
    }
}

/// Neumaier's compensated summation. Unlike plain Kahan it also tracks the
/// low-order bits when an addend exceeds the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        // compensation of an overflowed sum would produce inf - inf
        if t.is_finite() {
            if self.sum.abs() >= v.abs() {
                self.comp += (self.sum - t) + v;
            } else {
                self.comp += (v - t) + self.sum;
            }
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        if self.sum.is_finite() {
            self.sum + self.comp
        } else {
            self.sum
        }
    }
}

pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = CompensatedSum::default();
    for v in values {
        s.add(v);
    }
    s.value()
}

/// Natural log of the gamma function, Lanczos approximation (g = 7, n = 9),
/// with the reflection formula for arguments below 1/2. Absolute accuracy is
/// around 1e-13 on the positive axis, which is plenty for the moment
/// fallback paths that use it.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    // published table, kept verbatim
    #[allow(clippy::excessive_precision)]
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Γ(x) Γ(1-x) = π / sin(πx)
        let s = (std::f64::consts::PI * x).sin();
        std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = COEFFS[0];
        for (i, &c) in COEFFS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// Maps `f` over `0..n`, collecting results in index order. Runs on the rayon
/// pool when the `parallel` feature is enabled; the output is identical
/// either way since the collection order is fixed.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
