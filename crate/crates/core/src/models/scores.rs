use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{clamp_prob, ModelError};
use crate::bundles::Variant;

/// One line of a score file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub case_id: String,
    pub variant: Variant,
    pub probs: Vec<f64>,
}

/// Predicted violation probabilities per `(case, variant)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreTable {
    n_articles: usize,
    rows: BTreeMap<(String, Variant), Vec<f64>>,
}

impl ScoreTable {
    pub fn new(n_articles: usize) -> Self {
        ScoreTable {
            n_articles,
            rows: BTreeMap::new(),
        }
    }

    pub fn n_articles(&self) -> usize {
        self.n_articles
    }

    /// Inserts a row, clamping every probability into `[ε, 1-ε]`.
    pub fn insert(
        &mut self,
        case_id: &str,
        variant: Variant,
        probs: Vec<f64>,
    ) -> Result<(), ModelError> {
        if probs.len() != self.n_articles {
            return Err(ModelError::ArticleMismatch {
                expected: self.n_articles,
                got: probs.len(),
            });
        }
        if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ModelError::ProbabilityRange {
                row: 0,
                value: *bad,
            });
        }
        let key = (case_id.to_string(), variant);
        if self.rows.contains_key(&key) {
            return Err(ModelError::DuplicateRow {
                case_id: key.0,
                variant,
            });
        }
        self.rows
            .insert(key, probs.into_iter().map(clamp_prob).collect());
        Ok(())
    }

    pub fn get(&self, case_id: &str, variant: Variant) -> Option<&[f64]> {
        self.rows
            .get(&(case_id.to_string(), variant))
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn variants(&self) -> BTreeSet<Variant> {
        self.rows.keys().map(|(_, v)| *v).collect()
    }

    /// Adds every row of `other`; duplicate keys are an error.
    pub fn merge(&mut self, other: ScoreTable) -> Result<(), ModelError> {
        if other.n_articles != self.n_articles && !other.is_empty() {
            return Err(ModelError::ArticleMismatch {
                expected: self.n_articles,
                got: other.n_articles,
            });
        }
        for ((id, v), p) in other.rows {
            self.insert(&id, v, p)?;
        }
        Ok(())
    }

    /// Keys in `required` that have no row.
    pub fn missing(&self, case_ids: &[String], variants: &[Variant]) -> Vec<(String, Variant)> {
        let mut gaps = Vec::new();
        for id in case_ids {
            for &v in variants {
                if !self.rows.contains_key(&(id.clone(), v)) {
                    gaps.push((id.clone(), v));
                }
            }
        }
        gaps
    }

    pub fn check_coverage(
        &self,
        case_ids: &[String],
        variants: &[Variant],
    ) -> Result<(), ModelError> {
        let gaps = self.missing(case_ids, variants);
        if gaps.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Coverage(gaps))
        }
    }

    pub fn records(&self) -> Vec<ScoreRecord> {
        self.rows
            .iter()
            .map(|((id, v), p)| ScoreRecord {
                case_id: id.clone(),
                variant: *v,
                probs: p.clone(),
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(crate::io::write_jsonl(path, &self.records())?)
    }
}

/// Reads and validates a score file. Row numbers in diagnostics are 1-based
/// line numbers. When `required` is given, every listed `(case, variant)`
/// must be present.
pub fn load_external_scores(
    path: &Path,
    n_articles: usize,
    required: Option<(&[String], &[Variant])>,
) -> Result<ScoreTable, ModelError> {
    let file = std::fs::File::open(path).map_err(|source| crate::io::IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut table = ScoreTable::new(n_articles);
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|source| crate::io::IoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreRecord =
            serde_json::from_str(&line).map_err(|e| ModelError::MalformedRow {
                row,
                message: e.to_string(),
            })?;
        if rec.probs.len() != n_articles {
            return Err(ModelError::MalformedRow {
                row,
                message: format!(
                    "expected {n_articles} probabilities, found {}",
                    rec.probs.len()
                ),
            });
        }
        if let Some(&value) = rec
            .probs
            .iter()
            .find(|p| !p.is_finite() || !(0.0..=1.0).contains(*p))
        {
            return Err(ModelError::ProbabilityRange { row, value });
        }
        table.insert(&rec.case_id, rec.variant, rec.probs)?;
    }
    if let Some((ids, variants)) = required {
        table.check_coverage(ids, variants)?;
    }
    Ok(table)
}
