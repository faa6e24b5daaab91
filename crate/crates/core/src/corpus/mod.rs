//! Case documents, article sets, and the citation-filtered sub-corpus.

mod citations;
mod sections;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use citations::{
    corpus_stats, filter_subcorpus, normalize_citation, resolve_citations, CitationGraph,
    CorpusStats, SplitCounts,
};
pub use sections::{SectionExtractor, Sections};

use crate::io::IoError;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("document {id}: no facts heading found")]
    MissingFacts { id: String },
    #[error("document {id}: facts section is empty")]
    EmptyFacts { id: String },
    #[error("document {id}: unknown article label {label:?}")]
    UnknownArticle { id: String, label: String },
    #[error("document {id}: unknown split {split:?}")]
    UnknownSplit { id: String, split: String },
    #[error("document {id}: record has neither a body nor a facts field")]
    NoText { id: String },
    #[error("duplicate case id {0:?}")]
    DuplicateId(String),
    #[error("article set is empty")]
    EmptyArticleSet,
    #[error("duplicate article label {0:?}")]
    DuplicateArticle(String),
    #[error("case {case}: outcome has {got} entries, expected {expected}")]
    OutcomeLength {
        case: String,
        got: usize,
        expected: usize,
    },
    #[error("citation graph references unknown case {0:?}")]
    DanglingEdge(String),
    #[error("case {0:?} cites itself")]
    SelfCitation(String),
    #[error("case {case:?} lists precedent {precedent:?} twice")]
    DuplicatePrecedent { case: String, precedent: String },
    #[error("no case has a resolvable in-corpus citation; nothing to analyze")]
    EmptySubcorpus,
    #[error("invalid heading pattern {pattern:?}: {source}")]
    Pattern {
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// The ordered list of article labels. Position `k` in every outcome vector
/// refers to `labels()[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ArticleSet {
    labels: Vec<String>,
}

impl ArticleSet {
    pub fn new<I, S>(labels: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels
            .into_iter()
            .map(|s| s.into().trim().to_string())
            .collect();
        if labels.is_empty() {
            return Err(CorpusError::EmptyArticleSet);
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(CorpusError::DuplicateArticle(l.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// Newline-delimited labels; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Self::parse(&crate::io::read_text(path)?)
    }

    /// The 30 labels of the ECtHR corpus: Convention articles then protocol articles.
    pub fn echr() -> Self {
        let labels = [
            "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12", "13", "14", "18", "34", "38",
            "41", "46", "P1-1", "P1-2", "P1-3", "P4-2", "P4-4", "P6-1", "P6-3", "P7-1", "P7-2",
            "P7-3", "P7-4", "P12-1",
        ];
        Self::new(labels).expect("static labels are unique")
    }

    /// Labels `"A0".."A{k-1}"`, used by synthetic corpora.
    pub fn synthetic(k: usize) -> Self {
        Self::new((0..k).map(|i| format!("A{i}"))).expect("k >= 1")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        let label = label.trim();
        self.labels.iter().position(|l| l == label)
    }

    pub fn to_text(&self) -> String {
        let mut s = self.labels.join("\n");
        s.push('\n');
        s
    }
}

impl TryFrom<Vec<String>> for ArticleSet {
    type Error = CorpusError;
    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ArticleSet> for Vec<String> {
    fn from(a: ArticleSet) -> Self {
        a.labels
    }
}

/// Violation bits over an [`ArticleSet`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome(pub Vec<bool>);

impl Outcome {
    pub fn none(k: usize) -> Self {
        Outcome(vec![false; k])
    }

    pub fn from_labels<S: AsRef<str>>(
        case_id: &str,
        labels: &[S],
        articles: &ArticleSet,
    ) -> Result<Self, CorpusError> {
        let mut bits = vec![false; articles.len()];
        for l in labels {
            let idx = articles
                .index_of(l.as_ref())
                .ok_or_else(|| CorpusError::UnknownArticle {
                    id: case_id.to_string(),
                    label: l.as_ref().to_string(),
                })?;
            bits[idx] = true;
        }
        Ok(Outcome(bits))
    }

    pub fn to_labels(&self, articles: &ArticleSet) -> Vec<String> {
        self.violated()
            .map(|k| articles.labels()[k].clone())
            .collect()
    }

    pub fn violated(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, k: usize) -> bool {
        self.0[k]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" => Ok(Split::Train),
            "validation" | "valid" | "val" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(other.to_string()),
        }
    }
}

/// One court document.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub id: String,
    pub facts: String,
    pub arguments: String,
    pub outcome: Outcome,
    pub cited_ids: Vec<String>,
    pub split: Split,
}

impl Case {
    /// Cases without argument text can still serve as Goodhart precedents.
    pub fn has_arguments(&self) -> bool {
        !self.arguments.trim().is_empty()
    }

    pub fn to_record(&self, articles: &ArticleSet) -> CaseRecord {
        CaseRecord {
            id: self.id.clone(),
            body: None,
            facts: Some(self.facts.clone()),
            arguments: Some(self.arguments.clone()),
            outcome: self.outcome.to_labels(articles),
            citations: self.cited_ids.clone(),
            split: Some(self.split.as_str().to_string()),
        }
    }
}

/// Input record: either a raw `body` to be sectioned or pre-split
/// `facts`/`arguments` fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facts: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arguments: Option<String>,
    #[serde(default)]
    pub outcome: Vec<String>,
    #[serde(default)]
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

/// Parses one record into a [`Case`]. Records without a split are assigned
/// to the training split.
pub fn parse_case(
    record: &CaseRecord,
    articles: &ArticleSet,
    sections: &SectionExtractor,
) -> Result<Case, CorpusError> {
    let id = record.id.trim().to_string();
    let (facts, arguments) = match (&record.facts, &record.body) {
        (Some(f), _) => (
            f.trim().to_string(),
            record.arguments.as_deref().unwrap_or("").trim().to_string(),
        ),
        (None, Some(body)) => {
            let s = sections.extract(&id, body)?;
            (s.facts(body).to_string(), s.arguments(body).to_string())
        }
        (None, None) => return Err(CorpusError::NoText { id }),
    };
    if facts.is_empty() {
        return Err(CorpusError::EmptyFacts { id });
    }
    if arguments.is_empty() {
        log::warn!("document {id}: no argument section; usable only as a facts precedent");
    }
    let outcome = Outcome::from_labels(&id, &record.outcome, articles)?;
    let split = match &record.split {
        None => Split::Train,
        Some(s) => s.parse().map_err(|split| CorpusError::UnknownSplit {
            id: id.clone(),
            split,
        })?,
    };
    let mut seen = HashSet::new();
    let cited_ids = record
        .citations
        .iter()
        .filter(|c| seen.insert(normalize_citation(c)))
        .cloned()
        .collect();
    Ok(Case {
        id,
        facts,
        arguments,
        outcome,
        cited_ids,
        split,
    })
}

/// Rejects corpora whose ids collide after citation normalization.
pub fn check_unique_ids(cases: &[Case]) -> Result<(), CorpusError> {
    let mut seen = HashSet::new();
    for c in cases {
        if !seen.insert(normalize_citation(&c.id)) {
            return Err(CorpusError::DuplicateId(c.id.clone()));
        }
    }
    Ok(())
}

/// Parsed cases plus the records that were rejected, with their diagnostics.
#[derive(Debug, Default)]
pub struct ParsedCorpus {
    pub cases: Vec<Case>,
    pub rejected: Vec<(String, CorpusError)>,
}

/// Parses every record; per-document failures are collected, not fatal.
pub fn parse_corpus(
    records: &[CaseRecord],
    articles: &ArticleSet,
    sections: &SectionExtractor,
    exec: crate::Exec,
) -> ParsedCorpus {
    let results = exec.map(records, |r| parse_case(r, articles, sections));
    let mut out = ParsedCorpus::default();
    for (r, res) in records.iter().zip(results) {
        match res {
            Ok(c) => out.cases.push(c),
            Err(e) => {
                log::warn!("rejected: {e}");
                out.rejected.push((r.id.clone(), e));
            }
        }
    }
    out
}

pub fn load_cases(path: &Path, articles: &ArticleSet) -> Result<Vec<Case>, CorpusError> {
    let records: Vec<CaseRecord> = crate::io::read_jsonl(path)?;
    let sections = SectionExtractor::default();
    let cases = records
        .iter()
        .map(|r| parse_case(r, articles, &sections))
        .collect::<Result<Vec<_>, _>>()?;
    check_unique_ids(&cases)?;
    Ok(cases)
}

pub fn save_cases(path: &Path, cases: &[Case], articles: &ArticleSet) -> Result<(), CorpusError> {
    let records: Vec<CaseRecord> = cases.iter().map(|c| c.to_record(articles)).collect();
    crate::io::write_jsonl(path, &records)?;
    Ok(())
}
