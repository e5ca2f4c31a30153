//! Human vs model sameness and the alignment score.
//!
//! Two variations are the same for the human iff they carry the same
//! congruence label, and the same for the model iff their permutation test
//! came out indistinguishable. The alignment score is the percentage of all
//! K² cells, diagonal included, on which the two agree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CongruenceLabel, TrackId};
use crate::permutation::{PairwiseResultMatrix, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("missing label for {0}")]
    MissingLabel(TrackId),
    #[error("need at least 2 tracks, got {0}")]
    TooFewTracks(usize),
    #[error("matrices cover different tracks")]
    OrderMismatch,
    #[error("no scores to average")]
    EmptyInput,
    #[error("{labels} labels but {classes} classes")]
    LengthMismatch { labels: usize, classes: usize },
    #[error("grid is {found} cells, expected {expected}")]
    BadGrid { expected: usize, found: usize },
    #[error("grid is not a sameness matrix: {0}")]
    NotSameness(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamenessSource {
    Human,
    Model,
}

/// Symmetric K×K `I`/`D` grid with an all-`I` diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamenessMatrix {
    pub order: Vec<TrackId>,
    pub cells: Vec<Verdict>,
    pub source: SamenessSource,
}

impl SamenessMatrix {
    /// Checks symmetry, the diagonal and the grid size.
    pub fn new(order: Vec<TrackId>, cells: Vec<Verdict>, source: SamenessSource) -> Result<Self, AlignmentError> {
        let k = order.len();
        if cells.len() != k * k {
            return Err(AlignmentError::BadGrid { expected: k * k, found: cells.len() });
        }
        for i in 0..k {
            if cells[i * k + i] != Verdict::I {
                return Err(AlignmentError::NotSameness(format!("diagonal cell {} is D", order[i])));
            }
            for j in i + 1..k {
                if cells[i * k + j] != cells[j * k + i] {
                    return Err(AlignmentError::NotSameness(format!(
                        "cells {}/{} are asymmetric",
                        order[i], order[j]
                    )));
                }
            }
        }
        Ok(Self { order, cells, source })
    }

    pub fn size(&self) -> usize {
        self.order.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Verdict {
        self.cells[i * self.size() + j]
    }
}

/// Match (`M`) or no match (`NM`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Match {
    M,
    NM,
}

impl Match {
    pub fn token(self) -> &'static str {
        match self {
            Match::M => "M",
            Match::NM => "NM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchMatrix {
    pub order: Vec<TrackId>,
    pub cells: Vec<Match>,
    /// `100 * #M / K²`.
    pub score_percent: f64,
}

impl MatchMatrix {
    pub fn size(&self) -> usize {
        self.order.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Match {
        self.cells[i * self.size() + j]
    }

    pub fn matches(&self) -> usize {
        self.cells.iter().filter(|&&c| c == Match::M).count()
    }
}

/// `cells[i][j] = I` iff variations `i` and `j` share a label.
pub fn human_sameness_matrix(
    order: &[TrackId],
    labels: &[Option<CongruenceLabel>],
) -> Result<SamenessMatrix, AlignmentError> {
    let k = order.len();
    if k < 2 {
        return Err(AlignmentError::TooFewTracks(k));
    }
    if labels.len() != k {
        return Err(AlignmentError::LengthMismatch { labels: labels.len(), classes: k });
    }
    let labels: Vec<CongruenceLabel> = order
        .iter()
        .zip(labels)
        .map(|(t, l)| l.ok_or(AlignmentError::MissingLabel(*t)))
        .collect::<Result<_, _>>()?;
    let cells = (0..k * k)
        .map(|c| if labels[c / k] == labels[c % k] { Verdict::I } else { Verdict::D })
        .collect();
    Ok(SamenessMatrix { order: order.to_vec(), cells, source: SamenessSource::Human })
}

/// Re-thresholds the stored p-values at `alpha`; diagonal cells stay `I`.
pub fn model_sameness_matrix(m: &PairwiseResultMatrix, alpha: f64) -> SamenessMatrix {
    let k = m.size();
    let cells = (0..k * k)
        .map(|c| {
            if c / k == c % k {
                Verdict::I
            } else {
                Verdict::from_p_value(m.cells[c].p_value, alpha)
            }
        })
        .collect();
    SamenessMatrix { order: m.order.clone(), cells, source: SamenessSource::Model }
}

pub fn match_matrix(human: &SamenessMatrix, model: &SamenessMatrix) -> Result<MatchMatrix, AlignmentError> {
    if human.order != model.order || human.cells.len() != model.cells.len() {
        return Err(AlignmentError::OrderMismatch);
    }
    let cells: Vec<Match> = human
        .cells
        .iter()
        .zip(&model.cells)
        .map(|(h, m)| if h == m { Match::M } else { Match::NM })
        .collect();
    let matches = cells.iter().filter(|&&c| c == Match::M).count();
    let score_percent = 100.0 * matches as f64 / cells.len() as f64;
    Ok(MatchMatrix { order: human.order.clone(), cells, score_percent })
}

pub fn average_alignment(scores: &[f64]) -> Result<f64, AlignmentError> {
    if scores.is_empty() {
        return Err(AlignmentError::EmptyInput);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Formats a percentage truncated (not rounded) to two decimals, so 24/36
/// reads `66.66`.
pub fn format_percent(score: f64) -> String {
    let hundredths = (score * 100.0 + 1e-7).floor();
    format!("{:.2}", hundredths / 100.0)
}

/// Connected components of the graph whose edges are `I` cells, numbered by
/// first appearance in variation order.
pub fn equivalence_classes(s: &SamenessMatrix) -> Vec<usize> {
    let k = s.size();
    let mut class = vec![usize::MAX; k];
    let mut next = 0;
    for start in 0..k {
        if class[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        class[start] = next;
        while let Some(i) = stack.pop() {
            for (j, c) in class.iter_mut().enumerate() {
                if *c == usize::MAX && s.get(i, j) == Verdict::I {
                    *c = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    class
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingPoint {
    pub variation: u32,
    pub human_ordinal: u8,
    /// Connected-component class of the model's `I` graph (derived, not a
    /// rating the model produces itself).
    pub model_class: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatingSeries {
    pub points: Vec<RatingPoint>,
}

impl RatingSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn rating_plot_data(
    order: &[TrackId],
    labels: &[CongruenceLabel],
    classes: &[usize],
) -> Result<RatingSeries, AlignmentError> {
    if labels.len() != classes.len() || order.len() != labels.len() {
        return Err(AlignmentError::LengthMismatch { labels: labels.len(), classes: classes.len() });
    }
    if labels.is_empty() {
        return Err(AlignmentError::EmptyInput);
    }
    let points = order
        .iter()
        .zip(labels.iter().zip(classes))
        .map(|(t, (l, &c))| RatingPoint { variation: t.variation(), human_ordinal: l.ordinal(), model_class: c })
        .collect();
    Ok(RatingSeries { points })
}
