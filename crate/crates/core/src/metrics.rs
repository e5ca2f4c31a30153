//! Divergence statistics between two sets of frame embeddings.
//!
//! Two presets are provided: the biased (V-statistic) squared MMD with a
//! Gaussian RBF kernel, and the mean over dimensions of the 1-D Wasserstein-1
//! distance between marginals.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::EmbeddingMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("need at least 2 frames per side, got {0}")]
    TooFewFrames(usize),
    #[error("median pairwise distance is zero")]
    DegenerateMedian,
    #[error("fixed gamma must be finite and > 0")]
    InvalidGamma,
    #[error("empty sample")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mmd,
    Wasserstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    /// `gamma = 1 / median pairwise distance` of the pooled observed rows.
    MedianHeuristic,
    Fixed,
}

/// Which statistic to compute and how to set the kernel bandwidth.
///
/// `gamma_value` is only meaningful (and required) in [`GammaMode::Fixed`];
/// kernel settings are ignored for Wasserstein.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub metric: Metric,
    pub kernel: Kernel,
    pub gamma_mode: GammaMode,
    pub gamma_value: Option<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            metric: Metric::Mmd,
            kernel: Kernel::Rbf,
            gamma_mode: GammaMode::MedianHeuristic,
            gamma_value: None,
        }
    }
}

impl MetricConfig {
    pub fn mmd_fixed(gamma: f64) -> Self {
        Self { gamma_mode: GammaMode::Fixed, gamma_value: Some(gamma), ..Self::default() }
    }

    pub fn wasserstein() -> Self {
        Self { metric: Metric::Wasserstein, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if self.metric == Metric::Wasserstein {
            return Ok(());
        }
        match (self.gamma_mode, self.gamma_value) {
            (GammaMode::Fixed, Some(g)) if g.is_finite() && g > 0.0 => Ok(()),
            (GammaMode::Fixed, _) => Err(MetricError::InvalidGamma),
            (GammaMode::MedianHeuristic, None) => Ok(()),
            (GammaMode::MedianHeuristic, Some(_)) => Err(MetricError::InvalidGamma),
        }
    }
}

/// A divergence value, non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatisticValue<T>(T);

impl<T: Scalar> StatisticValue<T> {
    /// Wraps a raw estimate; small negative rounding residue is clamped to 0.
    pub fn clamped(value: T) -> Self {
        Self(if value > T::zero() { value } else { T::zero() })
    }

    pub fn value(self) -> T {
        self.0
    }
}

fn check_dims(left: usize, right: usize) -> Result<(), MetricError> {
    if left == right {
        Ok(())
    } else {
        Err(MetricError::DimensionMismatch { left, right })
    }
}

pub(crate) fn squared_distance<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum()
}

/// `exp(-gamma * ||x - y||^2)`.
pub fn rbf_kernel<T: Scalar>(x: &[T], y: &[T], gamma: T) -> Result<T, MetricError> {
    check_dims(x.len(), y.len())?;
    Ok(rbf_unchecked(x, y, gamma))
}

#[inline]
pub(crate) fn rbf_unchecked<T: Scalar>(x: &[T], y: &[T], gamma: T) -> T {
    (-gamma * squared_distance(x, y)).exp()
}

/// Median Euclidean distance over all unordered row pairs; even pair counts
/// take the mean of the two middle values.
pub fn median_pairwise_distance<T: Scalar>(pooled: &EmbeddingMatrix<T>) -> Result<T, MetricError> {
    let n = pooled.frames();
    if n < 2 {
        return Err(MetricError::TooFewFrames(n));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(squared_distance(pooled.row(i), pooled.row(j)).sqrt());
        }
    }
    let len = dists.len();
    let mid = len / 2;
    let (_, &mut upper, _) = dists.select_nth_unstable_by(mid, total_cmp);
    let median = if len % 2 == 1 {
        upper
    } else {
        // After the selection everything left of `mid` is <= upper.
        let lower = dists[..mid].iter().copied().fold(T::neg_infinity(), T::max);
        (lower + upper) / T::of(2.0)
    };
    if median > T::zero() {
        Ok(median)
    } else {
        Err(MetricError::DegenerateMedian)
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn total_cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Biased squared MMD:
/// `mean k(x,x') + mean k(y,y') - 2 mean k(x,y)`, clamped to `>= 0`.
pub fn mmd_biased<T, K>(
    x: &EmbeddingMatrix<T>,
    y: &EmbeddingMatrix<T>,
    kernel: K,
) -> Result<StatisticValue<T>, MetricError>
where
    T: Scalar,
    K: Fn(&[T], &[T]) -> T,
{
    check_dims(x.dims(), y.dims())?;
    let (m, n) = (x.frames(), y.frames());
    if m < 2 || n < 2 {
        return Err(MetricError::TooFewFrames(m.min(n)));
    }
    let block = |a: &EmbeddingMatrix<T>, b: &EmbeddingMatrix<T>| -> T {
        a.rows().map(|ra| b.rows().map(|rb| kernel(ra, rb)).sum::<T>()).sum()
    };
    let (mf, nf) = (T::of_usize(m), T::of_usize(n));
    let value = block(x, x) / (mf * mf) + block(y, y) / (nf * nf)
        - T::of(2.0) * block(x, y) / (mf * nf);
    Ok(StatisticValue::clamped(value))
}

/// [`mmd_biased`] with the RBF kernel at bandwidth `gamma`.
pub fn mmd_rbf<T: Scalar>(
    x: &EmbeddingMatrix<T>,
    y: &EmbeddingMatrix<T>,
    gamma: T,
) -> Result<StatisticValue<T>, MetricError> {
    mmd_biased(x, y, |a, b| rbf_unchecked(a, b, gamma))
}

/// Exact W1 between two empirical distributions on the line, computed as
/// the integral over `q` in `[0, 1]` of `|F_a^-1(q) - F_b^-1(q)|`.
///
/// Both quantile functions are step functions, so the integral is a finite
/// sum over the merged breakpoints `i/|a|` and `j/|b|`.
pub fn wasserstein_1d<T: Scalar>(a: &[T], b: &[T]) -> Result<T, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(total_cmp);
    b.sort_by(total_cmp);
    let (na, nb) = (a.len(), b.len());
    // Breakpoints i/na and j/nb are integers in units of 1/lcm(na, nb), so
    // equal sizes reduce to exactly sum(|a_i - b_i|) / n.
    let lcm = na / gcd(na, nb) * nb;
    let (step_a, step_b) = (lcm / na, lcm / nb);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0usize;
    let mut total = T::zero();
    while i < na && j < nb {
        let end_a = (i + 1) * step_a;
        let end_b = (j + 1) * step_b;
        let next = end_a.min(end_b);
        total += (a[i] - b[j]).abs() * T::of_usize(next - prev);
        prev = next;
        if end_a == next {
            i += 1;
        }
        if end_b == next {
            j += 1;
        }
    }
    total /= T::of_usize(lcm);
    Ok(total)
}

/// Mean over dimensions of [`wasserstein_1d`] between matching columns.
pub fn wasserstein_multidim<T: Scalar>(
    x: &EmbeddingMatrix<T>,
    y: &EmbeddingMatrix<T>,
) -> Result<StatisticValue<T>, MetricError> {
    check_dims(x.dims(), y.dims())?;
    let dims = x.dims();
    let mut total = T::zero();
    for d in 0..dims {
        total += wasserstein_1d(&x.column(d), &y.column(d))?;
    }
    Ok(StatisticValue::clamped(total / T::of_usize(dims)))
}
