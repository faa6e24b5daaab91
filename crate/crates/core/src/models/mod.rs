//! Probabilistic multi-label outcome models.
//!
//! `p(o | x) = Π_k p(o_k | x)`: each article gets its own logistic model
//! over hashed n-gram counts of a conditioning bundle. Scores produced by an
//! external model can be loaded instead through the shared score-file format.

mod features;
mod logistic;
mod scores;

pub use features::{featurize, FeatureSpec, SparseVec};
pub use logistic::{train, OutcomeModel, TrainConfig, TrainMeta};
pub use scores::{load_external_scores, ScoreRecord, ScoreTable};

use crate::bundles::{ConditioningBundle, Variant};
use crate::Exec;

/// Probability clamp keeping every log-loss finite.
pub const EPSILON: f64 = 1e-7;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(EPSILON, 1.0 - EPSILON)
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("no training examples")]
    NoTrainingData,
    #[error("learning rate must be positive and finite, got {0}")]
    BadLearningRate(f64),
    #[error("training loss became non-finite at epoch {epoch}; lower the learning rate")]
    NonFiniteLoss { epoch: usize },
    #[error("expected {expected} articles, got {got}")]
    ArticleMismatch { expected: usize, got: usize },
    #[error("row {row}: probability {value} outside [0, 1]")]
    ProbabilityRange { row: usize, value: f64 },
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("duplicate score row for case {case_id} ({variant})")]
    DuplicateRow { case_id: String, variant: Variant },
    #[error("missing scores for {} (case, variant) pair(s): {}", .0.len(), fmt_gaps(.0))]
    Coverage(Vec<(String, Variant)>),
    #[error("checkpoint {0} is inconsistent")]
    CorruptCheckpoint(String),
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
}

fn fmt_gaps(gaps: &[(String, Variant)]) -> String {
    const SHOW: usize = 20;
    let mut s = gaps
        .iter()
        .take(SHOW)
        .map(|(id, v)| format!("{id}/{v}"))
        .collect::<Vec<_>>()
        .join(", ");
    if gaps.len() > SHOW {
        s.push_str(&format!(", ... ({} more)", gaps.len() - SHOW));
    }
    s
}

/// Featurizes a batch of bundles, preserving order.
pub fn featurize_all(
    bundles: &[ConditioningBundle],
    spec: &FeatureSpec,
    exec: Exec,
) -> Vec<SparseVec> {
    exec.map(bundles, |b| featurize(b, spec))
}

/// Scores every bundle with `model` into a table keyed by the bundles' own variant.
pub fn score_bundles(
    model: &OutcomeModel,
    bundles: &[ConditioningBundle],
    exec: Exec,
) -> Result<ScoreTable, ModelError> {
    let probs = exec.map(bundles, |b| model.predict_proba(&featurize(b, &model.spec)));
    let mut table = ScoreTable::new(model.n_articles);
    for (b, p) in bundles.iter().zip(probs) {
        table.insert(&b.case_id, b.variant, p)?;
    }
    Ok(table)
}
