//! Small shared vector helpers and the Halton low-discrepancy sequence.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// x + s * d
pub(crate) fn add_scaled(x: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), d.len());
    x.iter().zip(d).map(|(a, b)| a + s * b).collect()
}

pub(crate) fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub(crate) fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

pub(crate) const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical-inverse of `index` in the given base, in [0,1).
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut inv = inv_base;
    let mut result = 0.0;
    while index > 0 {
        result += (index % base) as f64 * inv;
        index /= base;
        inv *= inv_base;
    }
    result
}

/// Deterministic Halton sequence over `[0,1)^dims`.
///
/// Supports up to 16 dimensions (one prime base per dimension), which covers
/// every sampling plan in this crate.
pub(crate) struct Halton {
    dims: usize,
    index: u64,
}

impl Halton {
    pub(crate) fn new(dims: usize, skip: u64) -> Self {
        assert!(dims <= PRIMES.len(), "Halton sampler supports at most {} dims", PRIMES.len());
        Halton { dims, index: skip }
    }

    pub(crate) fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        (0..self.dims)
            .map(|d| radical_inverse(self.index, PRIMES[d]))
            .collect()
    }
}
