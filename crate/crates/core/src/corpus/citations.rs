use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{ArticleSet, Case, CorpusError, Split};

/// Trim, case-fold, collapse internal whitespace.
pub fn normalize_citation(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Resolved precedent lists per citing case, plus the citations that could
/// not be matched to a document in the corpus.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CitationGraph {
    pub edges: BTreeMap<String, Vec<String>>,
    /// Normalized out-of-corpus citation strings per citing case.
    pub unresolved: BTreeMap<String, Vec<String>>,
}

impl CitationGraph {
    /// Precedents of `id` in citation order; empty if unknown.
    pub fn precedents(&self, id: &str) -> &[String] {
        self.edges.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn unresolved_count(&self, id: &str) -> usize {
        self.unresolved.get(id).map_or(0, Vec::len)
    }

    /// Checks that every edge points at a known, distinct, non-self case.
    pub fn validate(&self, cases: &[Case]) -> Result<(), CorpusError> {
        let ids: HashSet<&str> = cases.iter().map(|c| c.id.as_str()).collect();
        for (from, tos) in &self.edges {
            if !ids.contains(from.as_str()) {
                return Err(CorpusError::DanglingEdge(from.clone()));
            }
            let mut seen = HashSet::new();
            for to in tos {
                if to == from {
                    return Err(CorpusError::SelfCitation(from.clone()));
                }
                if !ids.contains(to.as_str()) {
                    return Err(CorpusError::DanglingEdge(to.clone()));
                }
                if !seen.insert(to) {
                    return Err(CorpusError::DuplicatePrecedent {
                        case: from.clone(),
                        precedent: to.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Splits each case's citations into in-corpus precedents and unresolved
/// strings. Duplicates collapse onto their first occurrence; self-citations
/// are dropped. If two cases share a normalized id the first one is used.
pub fn resolve_citations(cases: &[Case]) -> CitationGraph {
    let mut by_key: HashMap<String, &str> = HashMap::with_capacity(cases.len());
    for c in cases {
        by_key.entry(normalize_citation(&c.id)).or_insert(&c.id);
    }
    let mut graph = CitationGraph::default();
    for c in cases {
        let mut seen = HashSet::new();
        let mut resolved = Vec::new();
        let mut unresolved = Vec::new();
        for cite in &c.cited_ids {
            let key = normalize_citation(cite);
            if !seen.insert(key.clone()) {
                continue;
            }
            match by_key.get(&key) {
                Some(&target) if target == c.id => {}
                Some(&target) => resolved.push(target.to_string()),
                None => unresolved.push(key),
            }
        }
        graph.edges.insert(c.id.clone(), resolved);
        if !unresolved.is_empty() {
            graph.unresolved.insert(c.id.clone(), unresolved);
        }
    }
    graph
}

/// Keeps the cases with at least one resolved precedent.
pub fn filter_subcorpus(cases: &[Case], graph: &CitationGraph) -> Result<Vec<Case>, CorpusError> {
    let kept: Vec<Case> = cases
        .iter()
        .filter(|c| !graph.precedents(&c.id).is_empty())
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(CorpusError::EmptySubcorpus);
    }
    Ok(kept)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub total: usize,
}

impl SplitCounts {
    pub fn add(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::Validation => self.validation += 1,
            Split::Test => self.test += 1,
        }
        self.total += 1;
    }

    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: SplitCounts,
    /// Resolved citation tokens.
    pub in_corpus_links: usize,
    /// Distinct cited in-corpus documents.
    pub in_corpus_types: usize,
    pub out_of_corpus_links: usize,
    pub out_of_corpus_types: usize,
    /// `(article label, number of cases violating it)` in article order.
    pub article_frequencies: Vec<(String, usize)>,
}

/// Counts over `cases`, using `graph` for their links.
pub fn corpus_stats(cases: &[Case], graph: &CitationGraph, articles: &ArticleSet) -> CorpusStats {
    let mut stats = CorpusStats {
        article_frequencies: articles.labels().iter().map(|l| (l.clone(), 0)).collect(),
        ..Default::default()
    };
    let mut in_types = BTreeSet::new();
    let mut out_types = BTreeSet::new();
    for c in cases {
        stats.documents.add(c.split);
        for p in graph.precedents(&c.id) {
            stats.in_corpus_links += 1;
            in_types.insert(p.as_str());
        }
        if let Some(un) = graph.unresolved.get(&c.id) {
            stats.out_of_corpus_links += un.len();
            out_types.extend(un.iter().map(String::as_str));
        }
        for k in c.outcome.violated() {
            if let Some(slot) = stats.article_frequencies.get_mut(k) {
                slot.1 += 1;
            }
        }
    }
    stats.in_corpus_types = in_types.len();
    stats.out_of_corpus_types = out_types.len();
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Outcome;

    fn case(id: &str, cites: &[&str], split: Split) -> Case {
        Case {
            id: id.into(),
            facts: "f".into(),
            arguments: "a".into(),
            outcome: Outcome::none(1),
            cited_ids: cites.iter().map(|s| s.to_string()).collect(),
            split,
        }
    }

    #[test]
    fn duplicates_collapse_and_absent_are_counted() {
        let cases = vec![
            case("A", &["X", "X", "Y"], Split::Train),
            case("X", &[], Split::Train),
        ];
        let g = resolve_citations(&cases);
        assert_eq!(g.precedents("A"), &["X".to_string()]);
        assert_eq!(g.unresolved_count("A"), 1);
        g.validate(&cases).unwrap();
    }

    #[test]
    fn normalized_matching_and_order() {
        let cases = vec![
            case("Smith  v. UK", &[], Split::Train),
            case("B", &["c", " smith v.   uk ", "A", "B"], Split::Test),
            case("C", &[], Split::Train),
        ];
        let g = resolve_citations(&cases);
        assert_eq!(
            g.precedents("B"),
            &["C".to_string(), "Smith  v. UK".to_string()]
        );
        assert_eq!(g.unresolved.get("B").unwrap(), &vec!["a".to_string()]);
    }

    #[test]
    fn no_citations_gives_empty_edges() {
        let cases = vec![case("A", &[], Split::Train), case("B", &[], Split::Test)];
        let g = resolve_citations(&cases);
        assert!(g.edges.values().all(Vec::is_empty));
        assert!(matches!(
            filter_subcorpus(&cases, &g),
            Err(CorpusError::EmptySubcorpus)
        ));
    }

    #[test]
    fn only_unresolved_is_excluded_and_filter_is_idempotent() {
        let cases = vec![
            case("A", &["Z"], Split::Train),
            case("B", &["A"], Split::Validation),
            case("C", &["B", "Q"], Split::Test),
        ];
        let g = resolve_citations(&cases);
        let once = filter_subcorpus(&cases, &g).unwrap();
        let ids: Vec<&str> = once.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, vec!["B", "C"]);
        assert_eq!(once[0].split, Split::Validation);
        assert_eq!(filter_subcorpus(&once, &g).unwrap(), once);
    }

    #[test]
    fn everyone_cites_gives_identity_filter() {
        let cases = vec![
            case("A", &["B"], Split::Train),
            case("B", &["A"], Split::Test),
        ];
        let g = resolve_citations(&cases);
        assert_eq!(filter_subcorpus(&cases, &g).unwrap(), cases);
    }

    #[test]
    fn stats_empty_and_single() {
        let arts = ArticleSet::synthetic(1);
        let empty = corpus_stats(&[], &CitationGraph::default(), &arts);
        assert_eq!(empty.documents, SplitCounts::default());
        assert_eq!(empty.in_corpus_links + empty.in_corpus_types, 0);
        assert_eq!(empty.article_frequencies, vec![("A0".to_string(), 0)]);

        let all = vec![
            case("A", &["B"], Split::Train),
            case("B", &[], Split::Train),
        ];
        let g = resolve_citations(&all);
        let sub = filter_subcorpus(&all, &g).unwrap();
        let s = corpus_stats(&sub, &g, &arts);
        assert_eq!(s.documents.total, 1);
        assert_eq!((s.in_corpus_links, s.in_corpus_types), (1, 1));
    }

    #[test]
    fn validate_catches_dangling() {
        let cases = vec![case("A", &[], Split::Train)];
        let mut g = CitationGraph::default();
        g.edges.insert("A".into(), vec!["ghost".into()]);
        assert!(matches!(
            g.validate(&cases),
            Err(CorpusError::DanglingEdge(_))
        ));
    }
}
