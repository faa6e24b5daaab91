//! Sample cross-entropies and the mutual-information quantities derived
//! from them. Everything is in nats.
//!
//! For a variant `x` with per-case predicted probabilities `p`:
//!
//! ```text
//! loss(c)       = -Σ_k [o_k ln p_k + (1 - o_k) ln(1 - p_k)]
//! H_θ(O | x)    = mean_c loss(c)                 = Σ_k H_θ(O_k | x)
//! MI_x          = H_θ(O | F) - H_θ(O | x, F)
//! U_x           = MI_x / H_θ(O | F)
//! ```

mod report;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use report::{
    render_article_mi_csv, render_article_table, render_main_table, render_tests_csv, ArticleRow,
    EstimateReport, ReportMeta, Units,
};

use crate::bundles::Variant;
use crate::corpus::Outcome;
use crate::models::ScoreTable;

#[derive(Debug, thiserror::Error)]
pub enum EstimateError {
    #[error("no evaluation cases")]
    NoCases,
    #[error("no {variant} score for case {case_id}")]
    MissingScore { case_id: String, variant: Variant },
    #[error("no gold outcome for case {0}")]
    MissingGold(String),
    #[error("case {case_id}: {got} probabilities / outcome bits, expected {expected}")]
    Width {
        case_id: String,
        expected: usize,
        got: usize,
    },
    #[error("estimates cover different case sets ({0} vs {1})")]
    CaseSetMismatch(Variant, Variant),
    #[error("expected a {expected} estimate, got {got}")]
    WrongVariant { expected: Variant, got: Variant },
    #[error("baseline entropy is zero: outcome already fully determined")]
    FullyDetermined,
}

/// Held-out cross-entropy of one variant's scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub variant: Variant,
    pub n_cases: usize,
    pub total_nats: f64,
    pub per_article: Vec<f64>,
    pub case_ids: Vec<String>,
    pub per_case_loss: Vec<f64>,
    /// `per_case_article[c][k]`: loss of case `c` on article `k`.
    pub per_case_article: Vec<Vec<f64>>,
}

/// Binary log-loss of one probability against one bit.
pub fn bit_loss(bit: bool, p: f64) -> f64 {
    if bit {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Cross-entropy of `variant` over `case_ids`, which fixes the case order.
pub fn cross_entropy(
    scores: &ScoreTable,
    gold: &HashMap<String, Outcome>,
    variant: Variant,
    case_ids: &[String],
) -> Result<EntropyEstimate, EstimateError> {
    if case_ids.is_empty() {
        return Err(EstimateError::NoCases);
    }
    let k = scores.n_articles();
    let mut per_case_loss = Vec::with_capacity(case_ids.len());
    let mut per_case_article = Vec::with_capacity(case_ids.len());
    let mut per_article = vec![0.0; k];
    for id in case_ids {
        let probs = scores
            .get(id, variant)
            .ok_or_else(|| EstimateError::MissingScore {
                case_id: id.clone(),
                variant,
            })?;
        let outcome = gold
            .get(id)
            .ok_or_else(|| EstimateError::MissingGold(id.clone()))?;
        if outcome.len() != k {
            return Err(EstimateError::Width {
                case_id: id.clone(),
                expected: k,
                got: outcome.len(),
            });
        }
        let row: Vec<f64> = probs
            .iter()
            .zip(&outcome.0)
            .map(|(&p, &bit)| bit_loss(bit, p))
            .collect();
        for (acc, l) in per_article.iter_mut().zip(&row) {
            *acc += l;
        }
        per_case_loss.push(row.iter().sum());
        per_case_article.push(row);
    }
    let n = case_ids.len() as f64;
    per_article.iter_mut().for_each(|v| *v /= n);
    Ok(EntropyEstimate {
        variant,
        n_cases: case_ids.len(),
        total_nats: per_case_loss.iter().sum::<f64>() / n,
        per_article,
        case_ids: case_ids.to_vec(),
        per_case_loss,
        per_case_article,
    })
}

fn same_cases(a: &EntropyEstimate, b: &EntropyEstimate) -> Result<(), EstimateError> {
    if a.case_ids != b.case_ids {
        return Err(EstimateError::CaseSetMismatch(a.variant, b.variant));
    }
    Ok(())
}

/// `base.total - conditioned.total`. Negative values are returned as is.
pub fn mutual_information(
    base: &EntropyEstimate,
    conditioned: &EntropyEstimate,
) -> Result<f64, EstimateError> {
    same_cases(base, conditioned)?;
    Ok(base.total_nats - conditioned.total_nats)
}

/// Fraction of the baseline uncertainty removed.
pub fn uncertainty_coefficient(mi: f64, base: &EntropyEstimate) -> Result<f64, EstimateError> {
    if base.total_nats <= 0.0 {
        return Err(EstimateError::FullyDetermined);
    }
    Ok(mi / base.total_nats)
}

/// Per-article MI and U for both precedent variants.
pub fn per_article_report(
    labels: &[String],
    base: &EntropyEstimate,
    goodhart: &EntropyEstimate,
    halsbury: &EntropyEstimate,
) -> Result<Vec<ArticleRow>, EstimateError> {
    same_cases(base, goodhart)?;
    same_cases(base, halsbury)?;
    let u = |mi: f64, h: f64| if h > 0.0 { Some(mi / h) } else { None };
    Ok(labels
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let h = base.per_article[k];
            let mi_g = h - goodhart.per_article[k];
            let mi_h = h - halsbury.per_article[k];
            ArticleRow {
                article: label.clone(),
                h_facts: h,
                mi_goodhart: mi_g,
                u_goodhart: u(mi_g, h),
                mi_halsbury: mi_h,
                u_halsbury: u(mi_h, h),
            }
        })
        .collect())
}
