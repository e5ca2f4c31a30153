//! Two-sample permutation tests between tracks and the per-recording pairwise
//! result matrix.
//!
//! For a pair `(X, Y)` the `m + n` frames are pooled and the statistic is
//! re-evaluated on random (or, for tiny inputs, all) splits of the pool into
//! sizes `m` and `n`. The p-value is the fraction of splits scoring at least
//! the observed value; `p < alpha` marks the pair distinguishable.
//!
//! All randomness comes from [`derive_pair_seed`], so results do not depend on
//! how pairs are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::TrackId;
use crate::matrix::EmbeddingMatrix;
use crate::metrics::{self, GammaMode, Metric, MetricConfig, MetricError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("permutations must be ≥ 1")]
    NoPermutations,
    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(String),
    #[error("exhaustive limit must be ≥ 1")]
    NoExhaustiveLimit,
    #[error("max frames must be ≥ 2, got {0}")]
    MaxFramesTooSmall(usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermutationError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("pair indices must satisfy i < j, got i={i}, j={j}")]
    PairOrderViolation { i: usize, j: usize },
    #[error("need at least 2 tracks, got {0}")]
    TooFewTracks(usize),
    #[error("pair {a} / {b}: {source}")]
    Pair {
        a: TrackId,
        b: TrackId,
        #[source]
        source: Box<PermutationError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMode {
    /// Always sample random splits.
    MonteCarlo,
    /// Enumerate every split when there are at most `exhaustive_limit` of them.
    ExhaustiveIfSmall,
}

/// Settings for one analysis run. The defaults are MMD with an RBF kernel at
/// the median-heuristic bandwidth, 1000 permutations and `alpha = 0.05`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub metric_config: MetricConfig,
    pub n_permutations: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub mode: TestMode,
    pub exhaustive_limit: u64,
    pub max_frames: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            metric_config: MetricConfig::default(),
            n_permutations: 1000,
            alpha: 0.05,
            master_seed: 0,
            mode: TestMode::ExhaustiveIfSmall,
            exhaustive_limit: 20_000,
            max_frames: 512,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_permutations == 0 {
            return Err(ConfigError::NoPermutations);
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::AlphaOutOfRange(self.alpha.to_string()));
        }
        if self.exhaustive_limit == 0 {
            return Err(ConfigError::NoExhaustiveLimit);
        }
        if self.max_frames < 2 {
            return Err(ConfigError::MaxFramesTooSmall(self.max_frames));
        }
        self.metric_config.validate()?;
        Ok(())
    }
}

/// Distinguishable (`D`) or indistinguishable (`I`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    D,
    I,
}

impl Verdict {
    pub fn from_p_value(p_value: f64, alpha: f64) -> Self {
        if p_value < alpha {
            Verdict::D
        } else {
            Verdict::I
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Verdict::D => "D",
            Verdict::I => "I",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "D" => Some(Verdict::D),
            "I" => Some(Verdict::I),
            _ => None,
        }
    }
}

/// Result of one permutation test, independent of which tracks were tested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
    pub gamma_used: Option<f64>,
    pub degenerate_gamma: bool,
    pub n_effective_permutations: usize,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair: (TrackId, TrackId),
    pub statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
    pub gamma_used: Option<f64>,
    pub degenerate_gamma: bool,
    pub n_effective_permutations: usize,
}

impl PairResult {
    pub fn new(pair: (TrackId, TrackId), outcome: TestOutcome) -> Self {
        Self {
            pair,
            statistic: outcome.statistic,
            p_value: outcome.p_value,
            verdict: outcome.verdict,
            gamma_used: outcome.gamma_used,
            degenerate_gamma: outcome.degenerate_gamma,
            n_effective_permutations: outcome.n_effective_permutations,
        }
    }

    /// A track against itself: never tested, `I` with `p = 1`.
    pub fn diagonal(track: TrackId) -> Self {
        Self {
            pair: (track, track),
            statistic: 0.0,
            p_value: 1.0,
            verdict: Verdict::I,
            gamma_used: None,
            degenerate_gamma: false,
            n_effective_permutations: 0,
        }
    }
}

/// Symmetric K×K grid of pair results for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResultMatrix {
    pub recording: u32,
    pub order: Vec<TrackId>,
    /// Row-major, `cells[i * K + j]`.
    pub cells: Vec<PairResult>,
}

impl PairwiseResultMatrix {
    pub fn size(&self) -> usize {
        self.order.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &PairResult {
        &self.cells[i * self.size() + j]
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.p_value).collect()
    }

    pub fn statistics(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.statistic).collect()
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.cells.iter().map(|c| c.verdict).collect()
    }

    /// Off-diagonal pairs whose median-heuristic bandwidth fell back to 1.
    pub fn degenerate_gamma_pairs(&self) -> Vec<(TrackId, TrackId)> {
        let k = self.size();
        (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .filter(|c| c.degenerate_gamma)
            .map(|c| c.pair)
            .collect()
    }
}

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function: add the golden-ratio increment, then two
/// multiply-xor-shift rounds. A bijection on `u64`.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the test between positions `i < j` of recording `r`:
/// `mix(mix(mix(mix(master) ^ r) ^ i) ^ j)` with `mix` = [`splitmix64`].
pub fn derive_pair_seed(master_seed: u64, r: u32, i: usize, j: usize) -> Result<u64, PermutationError> {
    if i >= j {
        return Err(PermutationError::PairOrderViolation { i, j });
    }
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ u64::from(r));
    h = splitmix64(h ^ i as u64);
    Ok(splitmix64(h ^ j as u64))
}

/// Number of ways to choose `k` of `n`, or `None` once it exceeds `limit`.
pub fn binomial_within(n: usize, k: usize, limit: u64) -> Option<u64> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for step in 0..k {
        acc = acc * (n - step) as u128 / (step + 1) as u128;
        if acc > u128::from(limit) {
            return None;
        }
    }
    Some(acc as u64)
}

/// A statistic that can be re-evaluated on any split of the pooled rows.
trait SplitStatistic<T: Scalar>: Sync {
    /// `in_x[i]` marks pooled row `i` as belonging to the first sample.
    fn evaluate(&self, in_x: &[bool]) -> T;
    /// Magnitude of the summed terms, for the tie tolerance.
    fn scale(&self) -> T;
}

/// Biased MMD² over a precomputed pooled kernel matrix, written as
/// `sum_ij w_i w_j K_ij` with `w = 1/m` on X and `-1/n` on Y. Swapping the
/// roles of X and Y when `m = n` yields a bit-identical value.
struct PooledMmd<T> {
    kernel: Vec<T>,
    size: usize,
    inv_m: T,
    inv_n: T,
}

impl<T: Scalar> PooledMmd<T> {
    fn new(pooled: &EmbeddingMatrix<T>, m: usize, gamma: T) -> Self {
        let size = pooled.frames();
        let mut kernel = vec![T::one(); size * size];
        for i in 0..size {
            for j in i + 1..size {
                let k = metrics::rbf_unchecked(pooled.row(i), pooled.row(j), gamma);
                kernel[i * size + j] = k;
                kernel[j * size + i] = k;
            }
        }
        Self {
            kernel,
            size,
            inv_m: T::one() / T::of_usize(m),
            inv_n: T::one() / T::of_usize(size - m),
        }
    }
}

impl<T: Scalar> SplitStatistic<T> for PooledMmd<T> {
    fn evaluate(&self, in_x: &[bool]) -> T {
        let weights: Vec<T> = in_x.iter().map(|&x| if x { self.inv_m } else { -self.inv_n }).collect();
        let mut total = T::zero();
        for (row, &wi) in self.kernel.chunks_exact(self.size).zip(&weights) {
            let dot: T = row.iter().zip(&weights).map(|(&k, &wj)| k * wj).sum();
            total += wi * dot;
        }
        if total > T::zero() {
            total
        } else {
            T::zero()
        }
    }

    fn scale(&self) -> T {
        T::one()
    }
}

/// Mean per-dimension W1 evaluated through the CDF form
/// `integral |F_x(t) - F_y(t)| dt` over each pre-sorted pooled column.
struct PooledMarginalW1<T> {
    /// Column-major pooled values.
    columns: Vec<T>,
    /// Per dimension, pooled row indices in ascending value order.
    order: Vec<Vec<usize>>,
    size: usize,
    m: usize,
    n: usize,
    scale: T,
}

impl<T: Scalar> PooledMarginalW1<T> {
    fn new(pooled: &EmbeddingMatrix<T>, m: usize) -> Self {
        let size = pooled.frames();
        let dims = pooled.dims();
        let mut columns = Vec::with_capacity(size * dims);
        let mut order = Vec::with_capacity(dims);
        let mut scale = T::zero();
        for d in 0..dims {
            let col = pooled.column(d);
            let mut idx: Vec<usize> = (0..size).collect();
            idx.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).expect("finite embeddings"));
            scale = scale.max(col[idx[size - 1]] - col[idx[0]]);
            columns.extend(col);
            order.push(idx);
        }
        Self { columns, order, size, m, n: size - m, scale }
    }
}

impl<T: Scalar> SplitStatistic<T> for PooledMarginalW1<T> {
    fn evaluate(&self, in_x: &[bool]) -> T {
        let (m, n) = (self.m as i64, self.n as i64);
        let mut total = T::zero();
        for (d, idx) in self.order.iter().enumerate() {
            let col = &self.columns[d * self.size..(d + 1) * self.size];
            let (mut cx, mut cy) = (0i64, 0i64);
            for w in idx.windows(2) {
                if in_x[w[0]] {
                    cx += 1;
                } else {
                    cy += 1;
                }
                // |F_x - F_y| * m * n, an exact integer.
                let gap = (cx * n - cy * m).unsigned_abs() as usize;
                if gap != 0 {
                    total += T::of_usize(gap) * (col[w[1]] - col[w[0]]);
                }
            }
        }
        total / (T::of_usize(self.m * self.n) * T::of_usize(self.order.len()))
    }

    fn scale(&self) -> T {
        self.scale
    }
}

struct Prepared<T: Scalar> {
    statistic: Box<dyn SplitStatistic<T>>,
    gamma_used: Option<f64>,
    degenerate_gamma: bool,
}

fn prepare<T: Scalar>(
    pooled: &EmbeddingMatrix<T>,
    m: usize,
    metric: &MetricConfig,
) -> Result<Prepared<T>, PermutationError> {
    match metric.metric {
        Metric::Wasserstein => Ok(Prepared {
            statistic: Box::new(PooledMarginalW1::new(pooled, m)),
            gamma_used: None,
            degenerate_gamma: false,
        }),
        Metric::Mmd => {
            let (gamma, degenerate) = match metric.gamma_mode {
                GammaMode::Fixed => {
                    let g = metric.gamma_value.ok_or(MetricError::InvalidGamma)?;
                    (T::of(g), false)
                }
                GammaMode::MedianHeuristic => match metrics::median_pairwise_distance(pooled) {
                    Ok(median) => (T::one() / median, false),
                    Err(MetricError::DegenerateMedian) => (T::one(), true),
                    Err(e) => return Err(e.into()),
                },
            };
            Ok(Prepared {
                statistic: Box::new(PooledMmd::new(pooled, m, gamma)),
                gamma_used: Some(gamma.to_f64_lossy()),
                degenerate_gamma: degenerate,
            })
        }
    }
}

/// Tests whether `x` and `y` were drawn from the same distribution.
///
/// The bandwidth (median heuristic) is fixed from the pooled observed rows
/// and reused for every split. Monte Carlo p-values use `(1 + c) / (1 + N)`;
/// exhaustive p-values are `c / #splits`, where `c` counts splits scoring at
/// least the observed statistic (up to rounding).
pub fn permutation_test<T: Scalar>(
    x: &EmbeddingMatrix<T>,
    y: &EmbeddingMatrix<T>,
    cfg: &AnalysisConfig,
    seed: u64,
) -> Result<TestOutcome, PermutationError> {
    cfg.validate()?;
    if x.dims() != y.dims() {
        return Err(MetricError::DimensionMismatch { left: x.dims(), right: y.dims() }.into());
    }
    let (m, n) = (x.frames(), y.frames());
    if m < 2 || n < 2 {
        return Err(MetricError::TooFewFrames(m.min(n)).into());
    }
    let pooled = x.stack(y).expect("dims checked");
    let size = m + n;
    let prepared = prepare(&pooled, m, &cfg.metric_config)?;
    let stat = prepared.statistic.as_ref();

    let mut in_x = vec![false; size];
    in_x[..m].fill(true);
    let observed = stat.evaluate(&in_x);
    let tolerance = T::epsilon() * stat.scale() * T::of_usize(size);
    let threshold = observed - tolerance;

    let exhaustive_splits = match cfg.mode {
        TestMode::ExhaustiveIfSmall => binomial_within(size, m, cfg.exhaustive_limit),
        TestMode::MonteCarlo => None,
    };

    let (p_value, n_effective) = if let Some(total) = exhaustive_splits {
        let mut at_least = 0u64;
        for_each_split(size, m, |mask| {
            if stat.evaluate(mask) >= threshold {
                at_least += 1;
            }
        });
        (at_least as f64 / total as f64, total as usize)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool: Vec<usize> = (0..size).collect();
        let mut at_least = 0usize;
        for _ in 0..cfg.n_permutations {
            // Partial Fisher-Yates: the first m slots are a uniform m-subset.
            for slot in 0..m {
                let pick = rng.random_range(slot..size);
                pool.swap(slot, pick);
            }
            in_x.fill(false);
            for &row in &pool[..m] {
                in_x[row] = true;
            }
            if stat.evaluate(&in_x) >= threshold {
                at_least += 1;
            }
        }
        let n_perm = cfg.n_permutations;
        ((1 + at_least) as f64 / (1 + n_perm) as f64, n_perm)
    };

    Ok(TestOutcome {
        statistic: observed.to_f64_lossy(),
        p_value,
        verdict: Verdict::from_p_value(p_value, cfg.alpha),
        gamma_used: prepared.gamma_used,
        degenerate_gamma: prepared.degenerate_gamma,
        n_effective_permutations: n_effective,
        exhaustive: exhaustive_splits.is_some(),
    })
}

/// Calls `visit` with the membership mask of every `k`-subset of `0..n`, in
/// lexicographic order of the chosen indices.
fn for_each_split(n: usize, k: usize, mut visit: impl FnMut(&[bool])) {
    let mut chosen: Vec<usize> = (0..k).collect();
    let mut mask = vec![false; n];
    loop {
        mask.fill(false);
        for &c in &chosen {
            mask[c] = true;
        }
        visit(&mask);
        // Advance to the next combination.
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if chosen[pos] < n - k + pos {
                break;
            }
            if pos == 0 {
                return;
            }
        }
        chosen[pos] += 1;
        for later in pos + 1..k {
            chosen[later] = chosen[later - 1] + 1;
        }
    }
}

/// Runs one test per unordered pair of `tracks` and assembles the mirrored
/// K×K matrix with the `I`/`p = 1` diagonal.
pub fn pairwise_matrix<T: Scalar>(
    tracks: &[(TrackId, EmbeddingMatrix<T>)],
    cfg: &AnalysisConfig,
) -> Result<PairwiseResultMatrix, PermutationError> {
    pairwise_matrix_with_progress(tracks, cfg, &|| {})
}

/// [`pairwise_matrix`], calling `on_pair_done` after each finished test.
/// Tests run on the current rayon pool.
pub fn pairwise_matrix_with_progress<T: Scalar>(
    tracks: &[(TrackId, EmbeddingMatrix<T>)],
    cfg: &AnalysisConfig,
    on_pair_done: &(dyn Fn() + Sync),
) -> Result<PairwiseResultMatrix, PermutationError> {
    cfg.validate()?;
    let k = tracks.len();
    if k < 2 {
        return Err(PermutationError::TooFewTracks(k));
    }
    let recording = tracks[0].0.recording();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();

    let results: Vec<PairResult> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, xa) = &tracks[i];
            let (b, xb) = &tracks[j];
            let annotate = |e: PermutationError| PermutationError::Pair { a: *a, b: *b, source: Box::new(e) };
            let seed = derive_pair_seed(cfg.master_seed, recording, i, j).map_err(annotate)?;
            let outcome = permutation_test(xa, xb, cfg, seed).map_err(annotate)?;
            on_pair_done();
            Ok(PairResult::new((*a, *b), outcome))
        })
        .collect::<Result<_, PermutationError>>()?;

    let order: Vec<TrackId> = tracks.iter().map(|(t, _)| *t).collect();
    let mut cells: Vec<Option<PairResult>> = vec![None; k * k];
    for (i, &t) in order.iter().enumerate() {
        cells[i * k + i] = Some(PairResult::diagonal(t));
    }
    for (&(i, j), result) in pairs.iter().zip(results) {
        cells[i * k + j] = Some(result);
        cells[j * k + i] = Some(result);
    }
    Ok(PairwiseResultMatrix {
        recording,
        order,
        cells: cells.into_iter().map(|c| c.expect("every cell filled")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{mmd_rbf, wasserstein_multidim};
    use crate::synth;
    use std::collections::HashSet;

    fn tid(r: u32, v: u32) -> TrackId {
        TrackId::new(r, v).unwrap()
    }

    fn mat(rows: &[&[f64]]) -> EmbeddingMatrix<f64> {
        EmbeddingMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(SPLITMIX_GAMMA), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn pair_seed_contract() {
        let a = derive_pair_seed(7, 3, 1, 4).unwrap();
        assert_eq!(a, derive_pair_seed(7, 3, 1, 4).unwrap());
        assert_ne!(a, derive_pair_seed(8, 3, 1, 4).unwrap());
        assert_eq!(derive_pair_seed(7, 3, 4, 1), Err(PermutationError::PairOrderViolation { i: 4, j: 1 }));
        assert!(derive_pair_seed(7, 3, 2, 2).is_err());
    }

    #[test]
    fn pair_seeds_do_not_collide() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut seen = HashSet::new();
        let mut triples = HashSet::new();
        while triples.len() < 10_000 {
            let r = rng.random_range(1..=1000u32);
            let i = rng.random_range(0..50usize);
            let j = rng.random_range(i + 1..=50usize);
            if triples.insert((r, i, j)) {
                assert!(seen.insert(derive_pair_seed(42, r, i, j).unwrap()));
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_within(4, 2, 100), Some(6));
        assert_eq!(binomial_within(6, 3, 100), Some(20));
        assert_eq!(binomial_within(6, 3, 19), None);
        assert_eq!(binomial_within(200, 100, 20_000), None);
        assert_eq!(binomial_within(5, 0, 1), Some(1));
    }

    #[test]
    fn split_enumeration_matches_binomial() {
        let mut seen = HashSet::new();
        for_each_split(7, 3, |mask| {
            assert_eq!(mask.iter().filter(|&&b| b).count(), 3);
            seen.insert(mask.to_vec());
        });
        assert_eq!(seen.len(), 35);
    }

    #[test]
    fn hand_derived_exhaustive_case() {
        // Six splits of {0,0,1,1}: the two unmixed ones score 2 - 2/e, the
        // four mixed ones score 0, so p = 2/6.
        let x = mat(&[&[0.0], &[0.0]]);
        let y = mat(&[&[1.0], &[1.0]]);
        let cfg = AnalysisConfig { metric_config: MetricConfig::mmd_fixed(1.0), ..Default::default() };
        let out = permutation_test(&x, &y, &cfg, 0).unwrap();
        assert!(out.exhaustive);
        assert_eq!(out.n_effective_permutations, 6);
        assert_eq!(out.p_value, 2.0 / 6.0);
        assert_eq!(out.verdict, Verdict::I);
        assert!((out.statistic - (2.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-12);
        assert_eq!(out.gamma_used, Some(1.0));
    }

    #[test]
    fn identical_samples_give_p_one() {
        let x = synth::gaussian_cluster(30, &[0.0, 1.0, -1.0], 1.0, 5);
        for metric_config in [MetricConfig::default(), MetricConfig::wasserstein()] {
            for mode in [TestMode::MonteCarlo, TestMode::ExhaustiveIfSmall] {
                let cfg = AnalysisConfig { metric_config, mode, n_permutations: 200, ..Default::default() };
                let out = permutation_test(&x, &x, &cfg, 11).unwrap();
                assert_eq!(out.statistic, 0.0);
                assert_eq!(out.p_value, 1.0);
                assert_eq!(out.verdict, Verdict::I);
            }
        }
    }

    #[test]
    fn separated_samples_reject() {
        let x = synth::gaussian_cluster(200, &[0.0, 0.0], 1.0, 1);
        let y = synth::gaussian_cluster(200, &[5.0, 5.0], 1.0, 2);
        let out = permutation_test(&x, &y, &AnalysisConfig::default(), 3).unwrap();
        assert!(!out.exhaustive);
        assert_eq!(out.n_effective_permutations, 1000);
        assert!(out.p_value <= 0.005);
        assert_eq!(out.p_value, 1.0 / 1001.0);
        assert_eq!(out.verdict, Verdict::D);
    }

    #[test]
    fn observed_statistic_matches_direct_formulas() {
        let x = synth::gaussian_cluster(9, &[0.0, 1.0], 1.0, 21);
        let y = synth::gaussian_cluster(7, &[0.5, 0.0], 2.0, 22);
        let cfg = AnalysisConfig { mode: TestMode::MonteCarlo, n_permutations: 10, ..Default::default() };
        let out = permutation_test(&x, &y, &cfg, 1).unwrap();
        let pooled = x.stack(&y).unwrap();
        let gamma = 1.0 / metrics::median_pairwise_distance(&pooled).unwrap();
        assert_eq!(out.gamma_used, Some(gamma));
        assert!((out.statistic - mmd_rbf(&x, &y, gamma).unwrap().value()).abs() < 1e-12);

        let cfg = AnalysisConfig { metric_config: MetricConfig::wasserstein(), ..cfg };
        let out = permutation_test(&x, &y, &cfg, 1).unwrap();
        assert_eq!(out.gamma_used, None);
        assert!((out.statistic - wasserstein_multidim(&x, &y).unwrap().value()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_median_falls_back_to_unit_gamma() {
        let x = mat(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        let y = mat(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0]]);
        let out = permutation_test(&x, &y, &AnalysisConfig::default(), 0).unwrap();
        assert!(out.degenerate_gamma);
        assert_eq!(out.gamma_used, Some(1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = mat(&[&[0.0], &[1.0]]);
        let y = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let cfg = AnalysisConfig::default();
        assert!(matches!(
            permutation_test(&x, &y, &cfg, 0),
            Err(PermutationError::Metric(MetricError::DimensionMismatch { .. }))
        ));
        let bad = AnalysisConfig { n_permutations: 0, ..cfg };
        assert_eq!(
            permutation_test(&x, &x, &bad, 0),
            Err(PermutationError::Config(ConfigError::NoPermutations))
        );
        assert_eq!(ConfigError::NoPermutations.to_string(), "permutations must be ≥ 1");
        for alpha in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(AnalysisConfig { alpha, ..cfg }.validate().is_err());
        }
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let x = synth::gaussian_cluster(12, &[0.0], 1.0, 1);
        let y = synth::gaussian_cluster(12, &[0.4], 1.0, 2);
        let cfg = AnalysisConfig { mode: TestMode::MonteCarlo, n_permutations: 300, ..Default::default() };
        let a = permutation_test(&x, &y, &cfg, 5).unwrap();
        assert_eq!(a, permutation_test(&x, &y, &cfg, 5).unwrap());
        assert!(a.p_value > 0.0 && a.p_value <= 1.0);
    }

    #[test]
    fn pairwise_matrix_structure() {
        let shared = synth::gaussian_cluster(10, &[0.0, 0.0], 1.0, 3);
        let tracks: Vec<_> = (0..6).map(|v| (tid(2, v), shared.clone())).collect();
        let cfg = AnalysisConfig { n_permutations: 50, ..Default::default() };
        let counter = std::sync::atomic::AtomicUsize::new(0);
        let m = pairwise_matrix_with_progress(&tracks, &cfg, &|| {
            counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        })
        .unwrap();
        assert_eq!(counter.into_inner(), 15);
        assert_eq!(m.recording, 2);
        assert_eq!(m.size(), 6);
        for i in 0..6 {
            assert_eq!(*m.get(i, i), PairResult::diagonal(tid(2, i as u32)));
            for j in 0..6 {
                assert_eq!(m.get(i, j), m.get(j, i));
                assert_eq!(m.get(i, j).verdict, Verdict::I);
            }
        }
    }

    #[test]
    fn pairwise_errors_name_the_pair() {
        let a = mat(&[&[0.0], &[1.0]]);
        let b = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let tracks = vec![(tid(1, 0), a), (tid(1, 1), b)];
        let err = pairwise_matrix(&tracks, &AnalysisConfig::default()).unwrap_err();
        assert!(matches!(err, PermutationError::Pair { a, b, .. } if a == tid(1, 0) && b == tid(1, 1)));
        assert!(matches!(
            pairwise_matrix(&tracks[..1], &AnalysisConfig::default()),
            Err(PermutationError::TooFewTracks(1))
        ));
    }

    #[test]
    fn single_precision_engine() {
        let x = synth::gaussian_cluster(40, &[0.0, 0.0], 1.0, 1).cast::<f32>();
        let y = synth::gaussian_cluster(40, &[5.0, 5.0], 1.0, 2).cast::<f32>();
        let cfg = AnalysisConfig { n_permutations: 200, ..Default::default() };
        let out = permutation_test(&x, &y, &cfg, 9).unwrap();
        assert_eq!(out.verdict, Verdict::D);
        let same = permutation_test(&x, &x, &cfg, 9).unwrap();
        assert_eq!(same.p_value, 1.0);
    }
}
