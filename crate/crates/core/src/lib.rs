//! Core of the embalign workbench.
//!
//! A dataset is a set of recordings, each with an original track (`V0`) and a
//! handful of variations. Every track carries a frame-wise embedding from some
//! pre-trained model and, optionally, a human congruence label. The workbench
//! runs a two-sample permutation test between every pair of variations of a
//! recording, turns the p-values into distinguishable/indistinguishable
//! verdicts, and scores how often those verdicts agree with the sameness
//! implied by the human labels.
//!
//! The numeric kernels ([`metrics`], [`permutation`]) are generic over a
//! [`Scalar`] (`f32` or `f64`); the I/O and reporting layers work in `f64`.
//! [`Matrix`] and [`Matrix32`] are the two concrete matrix types.

pub mod alignment;
pub mod dataset;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod permutation;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod synth;

pub use alignment::{Match, MatchMatrix, RatingSeries, SamenessMatrix, SamenessSource};
pub use dataset::{CongruenceLabel, Dataset, TrackId, ValidationReport};
pub use matrix::EmbeddingMatrix;
pub use metrics::{GammaMode, Metric, MetricConfig, StatisticValue};
pub use permutation::{AnalysisConfig, PairResult, PairwiseResultMatrix, TestMode, Verdict};
pub use report::AnalysisReport;
pub use scalar::Scalar;

/// Double-precision embedding matrix, the type every loader produces.
pub type Matrix = EmbeddingMatrix<f64>;
/// Single-precision embedding matrix.
pub type Matrix32 = EmbeddingMatrix<f32>;
/// Double-precision statistic.
pub type Statistic = StatisticValue<f64>;

/// Version string stamped into every report.
pub const TOOL_VERSION: &str = concat!("embalign ", env!("CARGO_PKG_VERSION"));
