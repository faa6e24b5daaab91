//! Conditioning inputs for the three outcome models.
//!
//! Layout of a precedent bundle:
//!
//! ```text
//! [ outcome(P1) text(P1) outcome(P2) text(P2) ... ]  <= precedent budget, head-truncated
//! [ facts of the current case ]                       <= facts budget, head-truncated
//! ```
//!
//! `text(P)` is the precedent's arguments for the Halsbury variant and its
//! facts for the Goodhart variant. An outcome is the delimiter token followed
//! by one marker per violated article.

mod tokenizer;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use tokenizer::{pre_tokenize, violation_marker, Tokenizer, OUTCOME, UNK};

use crate::corpus::{ArticleSet, Case, CitationGraph, Split};

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("case {0}: facts are empty")]
    EmptyFacts(String),
    #[error("case {0}: no precedents")]
    NoPrecedents(String),
    #[error("case {0}: no argument material among its precedents")]
    NoArgumentMaterial(String),
    #[error("case {case}: precedent {precedent} is not in the corpus")]
    UnknownPrecedent { case: String, precedent: String },
    #[error("budgets must be positive")]
    ZeroBudget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[serde(rename = "facts")]
    FactsOnly,
    Halsbury,
    Goodhart,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::FactsOnly, Variant::Goodhart, Variant::Halsbury];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::FactsOnly => "facts",
            Variant::Halsbury => "halsbury",
            Variant::Goodhart => "goodhart",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Variant::FactsOnly => "Facts",
            Variant::Halsbury => "Halsbury",
            Variant::Goodhart => "Goodhart",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "facts" | "factsonly" | "facts-only" => Ok(Variant::FactsOnly),
            "halsbury" => Ok(Variant::Halsbury),
            "goodhart" => Ok(Variant::Goodhart),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Facts,
    Arguments,
    Outcome,
}

/// A run of tokens taken from one source case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub case_id: String,
    pub kind: SegmentKind,
    pub start: usize,
    pub end: usize,
    /// Source text that produced the tokens (marker names for outcome segments).
    pub text: String,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditioningBundle {
    pub case_id: String,
    pub variant: Variant,
    pub tokens: Vec<u32>,
    pub segments: Vec<Segment>,
}

impl ConditioningBundle {
    /// Segments contributed by precedents (everything except the current case's own text).
    pub fn precedent_segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments
            .iter()
            .filter(move |s| s.case_id != self.case_id)
    }

    /// Length of the leading precedent region.
    pub fn precedent_len(&self) -> usize {
        self.precedent_segments().map(Segment::len).sum()
    }

    /// True when segments cover `tokens` contiguously, in order, without overlap.
    pub fn segments_tile(&self) -> bool {
        let mut pos = 0;
        for s in &self.segments {
            if s.start != pos || s.end <= s.start {
                return false;
            }
            pos = s.end;
        }
        pos == self.tokens.len()
    }
}

/// Token budgets for the two halves of a bundle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub facts: usize,
    pub precedent: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            facts: 512,
            precedent: 512,
        }
    }
}

impl Budget {
    pub fn validate(&self) -> Result<(), BundleError> {
        if self.facts == 0 || self.precedent == 0 {
            return Err(BundleError::ZeroBudget);
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.facts + self.precedent
    }
}

struct Builder {
    tokens: Vec<u32>,
    segments: Vec<Segment>,
    cap: usize,
}

impl Builder {
    fn new(cap: usize) -> Self {
        Builder {
            tokens: Vec::new(),
            segments: Vec::new(),
            cap,
        }
    }

    fn room(&self) -> usize {
        self.cap - self.tokens.len()
    }

    fn push(&mut self, case_id: &str, kind: SegmentKind, ids: Vec<u32>, text: String) {
        if ids.is_empty() {
            return;
        }
        let start = self.tokens.len();
        self.tokens.extend(ids);
        self.segments.push(Segment {
            case_id: case_id.to_string(),
            kind,
            start,
            end: self.tokens.len(),
            text,
        });
    }

    fn push_text(&mut self, case_id: &str, kind: SegmentKind, text: &str, tok: &Tokenizer) {
        let (ids, end) = tok.tokenize_prefix(text, self.room());
        self.push(case_id, kind, ids, text[..end].trim_start().to_string());
    }

    fn push_outcome(&mut self, case: &Case, tok: &Tokenizer) {
        let mut ids = vec![tok.outcome_id()];
        ids.extend(case.outcome.violated().map(|k| tok.violation_id(k)));
        ids.truncate(self.room());
        let text = ids
            .iter()
            .map(|&i| tok.token(i).unwrap_or(UNK))
            .collect::<Vec<_>>()
            .join(" ");
        self.push(&case.id, SegmentKind::Outcome, ids, text);
    }
}

/// The first `budget.facts` tokens of the case's facts.
pub fn build_facts_bundle(
    case: &Case,
    tok: &Tokenizer,
    budget: &Budget,
) -> Result<ConditioningBundle, BundleError> {
    let mut b = Builder::new(budget.facts);
    b.push_text(&case.id, SegmentKind::Facts, &case.facts, tok);
    if b.tokens.is_empty() {
        return Err(BundleError::EmptyFacts(case.id.clone()));
    }
    Ok(ConditioningBundle {
        case_id: case.id.clone(),
        variant: Variant::FactsOnly,
        tokens: b.tokens,
        segments: b.segments,
    })
}

/// Concatenates `outcome + text` for each precedent in order and cuts the
/// result at `max_len` tokens. Halsbury skips precedents without arguments.
pub fn build_precedent_segment(
    case_id: &str,
    precedents: &[&Case],
    variant: Variant,
    tok: &Tokenizer,
    max_len: usize,
) -> Result<(Vec<u32>, Vec<Segment>), BundleError> {
    assert!(
        variant != Variant::FactsOnly,
        "facts-only bundles have no precedent segment"
    );
    if precedents.is_empty() {
        return Err(BundleError::NoPrecedents(case_id.to_string()));
    }
    let usable: Vec<&Case> = match variant {
        Variant::Halsbury => {
            let with_args: Vec<&Case> = precedents
                .iter()
                .copied()
                .filter(|p| p.has_arguments())
                .collect();
            if with_args.len() < precedents.len() {
                log::warn!(
                    "case {case_id}: {} precedent(s) without arguments skipped",
                    precedents.len() - with_args.len()
                );
            }
            if with_args.is_empty() {
                return Err(BundleError::NoArgumentMaterial(case_id.to_string()));
            }
            with_args
        }
        _ => precedents.to_vec(),
    };
    let mut b = Builder::new(max_len);
    for p in usable {
        if b.room() == 0 {
            break;
        }
        b.push_outcome(p, tok);
        match variant {
            Variant::Halsbury => b.push_text(&p.id, SegmentKind::Arguments, &p.arguments, tok),
            _ => b.push_text(&p.id, SegmentKind::Facts, &p.facts, tok),
        }
    }
    Ok((b.tokens, b.segments))
}

/// Case lookup by id, used to fetch precedent material.
pub type CaseIndex<'a> = HashMap<&'a str, &'a Case>;

pub fn index_cases(cases: &[Case]) -> CaseIndex<'_> {
    cases.iter().map(|c| (c.id.as_str(), c)).collect()
}

/// Assembles `[precedent segment] + [current facts]` for the requested variant.
pub fn build_bundle(
    case: &Case,
    graph: &CitationGraph,
    index: &CaseIndex<'_>,
    variant: Variant,
    tok: &Tokenizer,
    budget: &Budget,
) -> Result<ConditioningBundle, BundleError> {
    if variant == Variant::FactsOnly {
        return build_facts_bundle(case, tok, budget);
    }
    let precedents = graph
        .precedents(&case.id)
        .iter()
        .map(|p| {
            index
                .get(p.as_str())
                .copied()
                .ok_or_else(|| BundleError::UnknownPrecedent {
                    case: case.id.clone(),
                    precedent: p.clone(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (mut tokens, mut segments) =
        build_precedent_segment(&case.id, &precedents, variant, tok, budget.precedent)?;
    let facts = build_facts_bundle(case, tok, budget)?;
    let offset = tokens.len();
    tokens.extend(facts.tokens);
    segments.extend(facts.segments.into_iter().map(|mut s| {
        s.start += offset;
        s.end += offset;
        s
    }));
    Ok(ConditioningBundle {
        case_id: case.id.clone(),
        variant,
        tokens,
        segments,
    })
}

/// Builds one bundle per case, preserving order.
pub fn build_bundles(
    cases: &[Case],
    graph: &CitationGraph,
    index: &CaseIndex<'_>,
    variant: Variant,
    tok: &Tokenizer,
    budget: &Budget,
    exec: crate::Exec,
) -> Result<Vec<ConditioningBundle>, BundleError> {
    exec.map(cases, |c| {
        build_bundle(c, graph, index, variant, tok, budget)
    })
    .into_iter()
    .collect()
}

/// Fits the shared tokenizer on the training split's facts and arguments.
pub fn fit_tokenizer(cases: &[Case], articles: &ArticleSet, min_freq: usize) -> Tokenizer {
    let train = cases.iter().filter(|c| c.split == Split::Train);
    Tokenizer::fit(
        train.flat_map(|c| [c.facts.as_str(), c.arguments.as_str()]),
        articles,
        min_freq,
    )
}

/// JSONL line of an exported bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleRecord {
    pub case_id: String,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    pub tokens: Vec<u32>,
    pub text_segments: Vec<Segment>,
}

impl BundleRecord {
    pub fn new(bundle: &ConditioningBundle, split: Option<Split>) -> Self {
        BundleRecord {
            case_id: bundle.case_id.clone(),
            variant: bundle.variant,
            split,
            tokens: bundle.tokens.clone(),
            text_segments: bundle.segments.clone(),
        }
    }

    pub fn into_bundle(self) -> ConditioningBundle {
        ConditioningBundle {
            case_id: self.case_id,
            variant: self.variant,
            tokens: self.tokens,
            segments: self.text_segments,
        }
    }
}
