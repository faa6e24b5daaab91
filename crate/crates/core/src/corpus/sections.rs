use std::ops::Range;

use regex::Regex;

use super::CorpusError;

/// Locates the facts and law headings in a judgment body.
///
/// Each heading kind has an ordered list of patterns; the first pattern that
/// matches wins. Matching is case-insensitive and a heading must occupy its
/// own line, optionally preceded by a roman or arabic section number.
#[derive(Clone, Debug)]
pub struct SectionExtractor {
    facts: Vec<Regex>,
    law: Vec<Regex>,
}

/// Byte spans of the two sections within the source body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sections {
    pub facts: Range<usize>,
    pub arguments: Range<usize>,
}

impl Sections {
    pub fn facts<'a>(&self, body: &'a str) -> &'a str {
        &body[self.facts.clone()]
    }

    pub fn arguments<'a>(&self, body: &'a str) -> &'a str {
        &body[self.arguments.clone()]
    }
}

impl Default for SectionExtractor {
    fn default() -> Self {
        Self::new(&["THE FACTS"], &["THE LAW"]).expect("default patterns compile")
    }
}

fn heading_regex(pattern: &str) -> Result<Regex, CorpusError> {
    let full =
        format!(r"(?im)^[ \t]*(?:(?:[IVXLCDM]+|\d+)\.[ \t]*)?(?:{pattern})[ \t]*:?[ \t]*\r?$");
    Regex::new(&full).map_err(|source| CorpusError::Pattern {
        pattern: pattern.to_string(),
        source,
    })
}

/// Shrinks `range` so it excludes leading and trailing whitespace of `body`.
fn trimmed(body: &str, range: Range<usize>) -> Range<usize> {
    let s = &body[range.clone()];
    let start = range.start + (s.len() - s.trim_start().len());
    let end = range.end - (s.len() - s.trim_end().len());
    start..end.max(start)
}

impl SectionExtractor {
    pub fn new<S: AsRef<str>>(facts: &[S], law: &[S]) -> Result<Self, CorpusError> {
        Ok(Self {
            facts: facts
                .iter()
                .map(|p| heading_regex(p.as_ref()))
                .collect::<Result<_, _>>()?,
            law: law
                .iter()
                .map(|p| heading_regex(p.as_ref()))
                .collect::<Result<_, _>>()?,
        })
    }

    fn first_match(patterns: &[Regex], body: &str, from: usize) -> Option<Range<usize>> {
        patterns
            .iter()
            .find_map(|re| re.find_at(body, from).map(|m| m.range()))
    }

    /// Facts run from the end of the facts heading to the start of the law
    /// heading (or end of body); arguments run from the law heading to the end.
    pub fn extract(&self, id: &str, body: &str) -> Result<Sections, CorpusError> {
        let facts_head = Self::first_match(&self.facts, body, 0)
            .ok_or_else(|| CorpusError::MissingFacts { id: id.to_string() })?;
        let law_head = Self::first_match(&self.law, body, facts_head.end);
        let (facts, arguments) = match law_head {
            Some(law) => (facts_head.end..law.start, law.end..body.len()),
            None => (facts_head.end..body.len(), body.len()..body.len()),
        };
        Ok(Sections {
            facts: trimmed(body, facts),
            arguments: trimmed(body, arguments),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn case_insensitive_and_numbered() {
        let body = "I. the facts\nA\nII. The Law:\nB";
        let s = SectionExtractor::default().extract("x", body).unwrap();
        assert_eq!(s.facts(body), "A");
        assert_eq!(s.arguments(body), "B");
    }

    #[test]
    fn heading_must_be_its_own_line() {
        let body = "The facts of the case are disputed.\nTHE FACTS\nA\nTHE LAW\nB";
        let s = SectionExtractor::default().extract("x", body).unwrap();
        assert_eq!(s.facts(body), "A");
    }

    #[test]
    fn first_pattern_wins() {
        let ex = SectionExtractor::new(&["AS TO THE FACTS", "THE FACTS"], &["THE LAW"]).unwrap();
        let body = "THE FACTS\nearly\nAS TO THE FACTS\nlate\nTHE LAW\nz";
        let s = ex.extract("x", body).unwrap();
        assert_eq!(s.facts(body), "late");
    }

    #[test]
    fn law_heading_before_facts_is_ignored() {
        let body = "THE LAW\nstray\nTHE FACTS\nf\nTHE LAW\na";
        let s = SectionExtractor::default().extract("x", body).unwrap();
        assert_eq!((s.facts(body), s.arguments(body)), ("f", "a"));
    }

    proptest! {
        #[test]
        fn facts_and_arguments_are_disjoint_spans(
            pre in "[a-su-z \n]{0,20}",
            facts in "[a-su-z .\n]{0,40}[a-z]",
            law in "[a-su-z .\n]{0,40}",
        ) {
            let body = format!("{pre}\nTHE FACTS\n{facts}\nTHE LAW\n{law}");
            let s = SectionExtractor::default().extract("x", &body).unwrap();
            prop_assert!(s.facts.end <= s.arguments.start);
            prop_assert!(s.facts.start <= s.facts.end);
            prop_assert_eq!(s.facts(&body), facts.trim());
            prop_assert_eq!(s.arguments(&body), law.trim());
        }
    }
}
