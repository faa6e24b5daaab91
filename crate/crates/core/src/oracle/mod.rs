//! Synthetic citation-structured corpora with exactly known entropies.
//!
//! Generative process for one citing case:
//!
//! 1. Facts: `doc_length` tokens drawn uniformly from a `vocab_size` alphabet.
//! 2. Outcome: each article `k` is violated independently with probability
//!    `σ(bias_k + w_k · counts(facts))` (or deterministically, when the rule
//!    is a threshold).
//! 3. Each of `precedents_per_case` precedents copies every outcome bit with
//!    probability `outcome_agreement` (flipping it otherwise), and emits
//!    arguments and facts token by token: with probability `s` the token is
//!    the signal token `code(o) = Σ_k o_k 2^k` of the *citing* case's outcome,
//!    otherwise a uniform draw. Arguments use `s_args`, facts `s_facts`.
//!
//! `info_asymmetry` moves a fixed total signal between the two:
//! `s_args = signal (1 + a) / 2`, `s_facts = signal (1 - a) / 2`.
//!
//! Because tokens are exchangeable, every likelihood depends on a document
//! only through its token counts, so entropies are exact sums over count
//! vectors rather than over all `vocab_size^doc_length` sequences.

mod exact;
mod generate;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use exact::exact_entropies;
pub use generate::{generate, SyntheticCorpus};

/// Upper bound on `vocab_size ^ doc_length`.
pub const MAX_SEQUENCES: f64 = 1e7;
/// Upper bound on the inner-loop work of one conditional entropy.
pub const MAX_WORK: f64 = 2e9;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("infeasible spec: {0}")]
    Infeasible(String),
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error("spec file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum OutcomeRule {
    /// `P(o_k = 1 | f) = σ(bias_k + Σ_t weights[k][t] · count_t(f))`.
    Logistic {
        bias: Vec<f64>,
        weights: Vec<Vec<f64>>,
    },
    /// `o_k = 1` iff `bias_k + Σ_t weights[k][t] · count_t(f) > 0`.
    Threshold {
        bias: Vec<f64>,
        weights: Vec<Vec<f64>>,
    },
}

impl OutcomeRule {
    fn parts(&self) -> (&[f64], &[Vec<f64>]) {
        match self {
            OutcomeRule::Logistic { bias, weights } | OutcomeRule::Threshold { bias, weights } => {
                (bias, weights)
            }
        }
    }

    /// Violation probability of article `k` given fact token counts.
    pub fn prob(&self, k: usize, counts: &[u8]) -> f64 {
        let (bias, weights) = self.parts();
        let z = bias[k]
            + weights[k]
                .iter()
                .zip(counts)
                .map(|(w, &c)| w * c as f64)
                .sum::<f64>();
        match self {
            OutcomeRule::Logistic { .. } => 1.0 / (1.0 + (-z).exp()),
            OutcomeRule::Threshold { .. } => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub vocab_size: usize,
    pub doc_length: usize,
    pub n_articles: usize,
    #[serde(default = "one")]
    pub precedents_per_case: usize,
    pub signal_strength: f64,
    /// In `[-1, 1]`; positive values put more signal in precedent arguments.
    pub info_asymmetry: f64,
    /// Probability that a precedent's outcome bit equals the citing case's.
    #[serde(default = "half")]
    pub outcome_agreement: f64,
    #[serde(default = "train_default")]
    pub train_fraction: f64,
    #[serde(default = "val_default")]
    pub validation_fraction: f64,
    pub outcome: OutcomeRule,
}

fn one() -> usize {
    1
}
fn half() -> f64 {
    0.5
}
fn train_default() -> f64 {
    0.8
}
fn val_default() -> f64 {
    0.1
}

/// Number of count vectors of `len` tokens over `vocab` symbols: C(len + vocab - 1, vocab - 1).
fn n_types(vocab: usize, len: usize) -> f64 {
    (1..vocab).fold(1.0, |acc, i| acc * (len + i) as f64 / i as f64)
}

impl SyntheticSpec {
    pub fn args_signal(&self) -> f64 {
        self.signal_strength * (1.0 + self.info_asymmetry) / 2.0
    }

    pub fn facts_signal(&self) -> f64 {
        self.signal_strength * (1.0 - self.info_asymmetry) / 2.0
    }

    /// Signal token for an outcome vector.
    pub fn code(&self, outcome: &[bool]) -> usize {
        outcome
            .iter()
            .enumerate()
            .map(|(k, &b)| (b as usize) << k)
            .sum()
    }

    /// Rejects malformed specs and ones too large to enumerate.
    pub fn validate(&self) -> Result<(), OracleError> {
        let invalid = |m: String| Err(OracleError::Invalid(m));
        if self.vocab_size < 2 || self.doc_length == 0 || self.n_articles == 0 {
            return invalid("vocab_size >= 2, doc_length >= 1 and n_articles >= 1 required".into());
        }
        if self.doc_length > 255 {
            return invalid("doc_length must fit in a byte".into());
        }
        if self.precedents_per_case == 0 {
            return invalid("precedents_per_case must be >= 1".into());
        }
        for (name, v, lo, hi) in [
            ("signal_strength", self.signal_strength, 0.0, 1.0),
            ("info_asymmetry", self.info_asymmetry, -1.0, 1.0),
            ("outcome_agreement", self.outcome_agreement, 0.0, 1.0),
            ("train_fraction", self.train_fraction, 0.0, 1.0),
            ("validation_fraction", self.validation_fraction, 0.0, 1.0),
        ] {
            if !(lo..=hi).contains(&v) {
                return invalid(format!("{name} = {v} outside [{lo}, {hi}]"));
            }
        }
        if self.train_fraction + self.validation_fraction > 1.0 {
            return invalid("train_fraction + validation_fraction exceeds 1".into());
        }
        let (bias, weights) = self.outcome.parts();
        if bias.len() != self.n_articles
            || weights.len() != self.n_articles
            || weights.iter().any(|w| w.len() != self.vocab_size)
        {
            return invalid(format!(
                "outcome rule must have {} biases and {}x{} weights",
                self.n_articles, self.n_articles, self.vocab_size
            ));
        }
        if bias
            .iter()
            .chain(weights.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return invalid("outcome weights must be finite".into());
        }

        let infeasible = |m: String| Err(OracleError::Infeasible(m));
        if self.n_articles >= usize::BITS as usize || (1usize << self.n_articles) > self.vocab_size
        {
            return infeasible(format!(
                "{} articles need 2^{} signal tokens but vocab_size is {}",
                self.n_articles, self.n_articles, self.vocab_size
            ));
        }
        let sequences = (self.vocab_size as f64).powi(self.doc_length as i32);
        if sequences > MAX_SEQUENCES {
            return infeasible(format!(
                "{}^{} = {sequences:.3e} fact strings exceeds {MAX_SEQUENCES:.0e}",
                self.vocab_size, self.doc_length
            ));
        }
        let work = self.work();
        if work > MAX_WORK {
            return infeasible(format!(
                "enumeration needs ~{work:.3e} steps (limit {MAX_WORK:.0e})"
            ));
        }
        Ok(())
    }

    /// Inner-loop steps of one conditional-entropy enumeration.
    pub fn work(&self) -> f64 {
        let outcomes = 2f64.powi(self.n_articles as i32);
        let types = n_types(self.vocab_size, self.doc_length);
        let per_precedent = types * outcomes;
        types * per_precedent.powi(self.precedents_per_case as i32) * outcomes
    }

    pub fn from_toml(text: &str) -> Result<Self, OracleError> {
        let spec: Self = toml::from_str(text).map_err(|e| OracleError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn load(path: &Path) -> Result<Self, OracleError> {
        Self::from_toml(&crate::io::read_text(path)?)
    }

    /// Two articles; precedent arguments carry most of the outcome signal.
    pub fn argument_favoring(seed: u64) -> Self {
        SyntheticSpec {
            seed,
            vocab_size: 4,
            doc_length: 4,
            n_articles: 2,
            precedents_per_case: 1,
            signal_strength: 0.6,
            info_asymmetry: 0.4,
            outcome_agreement: 0.6,
            train_fraction: 0.8,
            validation_fraction: 0.1,
            outcome: OutcomeRule::Logistic {
                bias: vec![-0.4, 0.2],
                weights: vec![vec![0.9, -0.6, 0.3, -0.4], vec![-0.5, 0.4, -0.7, 0.6]],
            },
        }
    }

    /// Mirror image of [`Self::argument_favoring`]: precedent facts carry the signal.
    pub fn fact_favoring(seed: u64) -> Self {
        SyntheticSpec {
            info_asymmetry: -0.4,
            ..Self::argument_favoring(seed)
        }
    }

    /// One article, so every view's true posterior is logistic in token counts.
    pub fn convergence(seed: u64) -> Self {
        SyntheticSpec {
            seed,
            vocab_size: 4,
            doc_length: 4,
            n_articles: 1,
            precedents_per_case: 1,
            signal_strength: 0.6,
            info_asymmetry: 0.5,
            outcome_agreement: 0.7,
            train_fraction: 0.5,
            validation_fraction: 0.1,
            outcome: OutcomeRule::Logistic {
                bias: vec![-0.3],
                weights: vec![vec![0.8, -0.5, 0.2, -0.4]],
            },
        }
    }

    /// Outcome independent of everything: one article, base rate 0.5, no signal.
    pub fn independent(seed: u64) -> Self {
        SyntheticSpec {
            seed,
            vocab_size: 4,
            doc_length: 4,
            n_articles: 1,
            precedents_per_case: 1,
            signal_strength: 0.0,
            info_asymmetry: 0.0,
            outcome_agreement: 0.5,
            train_fraction: 0.8,
            validation_fraction: 0.1,
            outcome: OutcomeRule::Logistic {
                bias: vec![0.0],
                weights: vec![vec![0.0; 4]],
            },
        }
    }

    /// Single fact token; the article is violated iff that token is `w0` or `w1`.
    pub fn deterministic_first_token(seed: u64) -> Self {
        SyntheticSpec {
            seed,
            vocab_size: 4,
            doc_length: 1,
            n_articles: 1,
            precedents_per_case: 1,
            signal_strength: 0.8,
            info_asymmetry: 0.5,
            outcome_agreement: 0.9,
            train_fraction: 0.8,
            validation_fraction: 0.1,
            outcome: OutcomeRule::Threshold {
                bias: vec![-0.5],
                weights: vec![vec![1.0, 1.0, 0.0, 0.0]],
            },
        }
    }
}

/// Exact conditional entropies of a spec, in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub h_facts: f64,
    pub h_goodhart: f64,
    pub h_halsbury: f64,
    pub mi_goodhart: f64,
    pub mi_halsbury: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in [
            SyntheticSpec::argument_favoring(1),
            SyntheticSpec::fact_favoring(1),
            SyntheticSpec::independent(1),
            SyntheticSpec::convergence(1),
            SyntheticSpec::deterministic_first_token(1),
        ] {
            s.validate().unwrap();
            assert_eq!(SyntheticSpec::from_toml(&s.to_toml()).unwrap(), s);
        }
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let mut s = SyntheticSpec::argument_favoring(0);
        s.vocab_size = 30;
        s.doc_length = 6;
        s.outcome = OutcomeRule::Logistic {
            bias: vec![0.0; 2],
            weights: vec![vec![0.0; 30]; 2],
        };
        assert!(matches!(s.validate(), Err(OracleError::Infeasible(_))));

        let mut s = SyntheticSpec::argument_favoring(0);
        s.n_articles = 3;
        s.outcome = OutcomeRule::Logistic {
            bias: vec![0.0; 3],
            weights: vec![vec![0.0; 4]; 3],
        };
        assert!(matches!(s.validate(), Err(OracleError::Infeasible(_))));
    }

    #[test]
    fn type_count() {
        assert_eq!(n_types(4, 4), 35.0);
        assert_eq!(n_types(8, 6), 1716.0);
    }
}
