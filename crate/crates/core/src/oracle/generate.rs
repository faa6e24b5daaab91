use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{OracleError, SyntheticSpec};
use crate::corpus::{resolve_citations, ArticleSet, Case, CitationGraph, Outcome, Split};
use crate::Exec;

/// A generated corpus: citing cases followed by the precedents they cite.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub articles: ArticleSet,
    pub cases: Vec<Case>,
    pub graph: CitationGraph,
}

pub fn word(token: usize) -> String {
    format!("w{token}")
}

fn render(tokens: &[usize]) -> String {
    tokens
        .iter()
        .map(|&t| word(t))
        .collect::<Vec<_>>()
        .join(" ")
}

fn counts(spec: &SyntheticSpec, tokens: &[usize]) -> Vec<u8> {
    let mut c = vec![0u8; spec.vocab_size];
    for &t in tokens {
        c[t] += 1;
    }
    c
}

fn uniform_doc(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..spec.doc_length)
        .map(|_| rng.gen_range(0..spec.vocab_size))
        .collect()
}

fn signal_doc(spec: &SyntheticSpec, s: f64, code: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..spec.doc_length)
        .map(|_| {
            if rng.gen::<f64>() < s {
                code
            } else {
                rng.gen_range(0..spec.vocab_size)
            }
        })
        .collect()
}

fn split_of(spec: &SyntheticSpec, index: usize, n: usize) -> Split {
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    let n_val = (spec.validation_fraction * n as f64).round() as usize;
    if index < n_train {
        Split::Train
    } else if index < n_train + n_val {
        Split::Validation
    } else {
        Split::Test
    }
}

pub fn case_id(index: usize) -> String {
    format!("c{index:07}")
}

/// One citing case and its precedents, drawn from a per-case random stream.
fn generate_one(spec: &SyntheticSpec, index: usize, split: Split) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let facts = uniform_doc(spec, &mut rng);
    let fact_counts = counts(spec, &facts);
    let outcome: Vec<bool> = (0..spec.n_articles)
        .map(|k| rng.gen::<f64>() < spec.outcome.prob(k, &fact_counts))
        .collect();
    let code = spec.code(&outcome);
    let arguments = uniform_doc(spec, &mut rng);

    let id = case_id(index);
    let mut cases = Vec::with_capacity(spec.precedents_per_case + 1);
    let mut cited = Vec::with_capacity(spec.precedents_per_case);
    for j in 0..spec.precedents_per_case {
        let prec_outcome: Vec<bool> = outcome
            .iter()
            .map(|&b| {
                if rng.gen::<f64>() < spec.outcome_agreement {
                    b
                } else {
                    !b
                }
            })
            .collect();
        let prec_args = signal_doc(spec, spec.args_signal(), code, &mut rng);
        let prec_facts = signal_doc(spec, spec.facts_signal(), code, &mut rng);
        let pid = format!("{id}-p{j}");
        cited.push(pid.clone());
        cases.push(Case {
            id: pid,
            facts: render(&prec_facts),
            arguments: render(&prec_args),
            outcome: Outcome(prec_outcome),
            cited_ids: Vec::new(),
            split,
        });
    }
    cases.insert(
        0,
        Case {
            id,
            facts: render(&facts),
            arguments: render(&arguments),
            outcome: Outcome(outcome),
            cited_ids: cited,
            split,
        },
    );
    cases
}

/// Draws `n_cases` citing cases. Output depends only on the spec and `n_cases`.
pub fn generate(
    spec: &SyntheticSpec,
    n_cases: usize,
    exec: Exec,
) -> Result<SyntheticCorpus, OracleError> {
    spec.validate()?;
    if n_cases == 0 {
        return Err(OracleError::Invalid("n_cases must be positive".into()));
    }
    let groups = exec.map_range(n_cases, |i| {
        generate_one(spec, i, split_of(spec, i, n_cases))
    });
    let cases: Vec<Case> = groups.into_iter().flatten().collect();
    let graph = resolve_citations(&cases);
    Ok(SyntheticCorpus {
        articles: ArticleSet::synthetic(spec.n_articles),
        cases,
        graph,
    })
}
