use precedent::bundles::{
    build_bundles, fit_tokenizer, index_cases, Budget, BundleRecord, Variant,
};
use precedent::corpus::{resolve_citations, ArticleSet, Case, Outcome, Split};
use precedent::Exec;
use proptest::prelude::*;

const WORDS: [&str; 8] = [
    "court",
    "applicant",
    "state",
    "detention",
    "article",
    "remedy",
    ",",
    ".",
];

fn text(lens: usize, salt: usize) -> String {
    (0..lens)
        .map(|i| WORDS[(i * 7 + salt * 13 + i / 3) % WORDS.len()])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Cases with random text lengths; case `i` cites the cases in `cites[i]`.
fn corpus(lens: &[(usize, usize)], cites: &[Vec<usize>], outcomes: &[u8]) -> Vec<Case> {
    lens.iter()
        .enumerate()
        .map(|(i, &(f, a))| Case {
            id: format!("c{i}"),
            facts: text(f.max(1), i),
            arguments: text(a, i + 1),
            outcome: Outcome((0..3).map(|k| outcomes[i] >> k & 1 == 1).collect()),
            cited_ids: cites[i]
                .iter()
                .map(|j| format!("c{}", j % lens.len()))
                .collect(),
            split: Split::ALL[i % 3],
        })
        .collect()
}

fn arb_corpus() -> impl Strategy<Value = Vec<Case>> {
    (2usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec((0usize..900, 0usize..900), n),
            prop::collection::vec(prop::collection::vec(0usize..8, 1..5), n),
            prop::collection::vec(any::<u8>(), n),
        )
            .prop_map(|(lens, cites, outcomes)| corpus(&lens, &cites, &outcomes))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn layout_limits_and_rebuilds(cases in arb_corpus()) {
        let articles = ArticleSet::synthetic(3);
        let graph = resolve_citations(&cases);
        let index = index_cases(&cases);
        let tok = fit_tokenizer(&cases, &articles, 1);
        let budget = Budget::default();
        let citing: Vec<Case> = cases.iter().filter(|c| !graph.precedents(&c.id).is_empty()).cloned().collect();

        for v in Variant::ALL {
            let a = build_bundles(&citing, &graph, &index, v, &tok, &budget, Exec::Sequential).unwrap();
            let b = build_bundles(&citing, &graph, &index, v, &tok, &budget, Exec::Parallel).unwrap();
            let facts = build_bundles(&citing, &graph, &index, Variant::FactsOnly, &tok, &budget, Exec::Sequential).unwrap();
            for ((x, y), f) in a.iter().zip(&b).zip(&facts) {
                let bytes = |b| serde_json::to_vec(&BundleRecord::new(b, None)).unwrap();
                prop_assert_eq!(bytes(x), bytes(y));
                prop_assert!(x.segments_tile());
                prop_assert!(f.tokens.len() <= 512);
                prop_assert!(x.precedent_len() <= 512);
                prop_assert!(x.tokens.len() <= 1024);
                // The current facts always follow the precedent segment unchanged.
                prop_assert_eq!(&x.tokens[x.precedent_len()..], f.tokens.as_slice());
                if v == Variant::FactsOnly {
                    prop_assert_eq!(x.precedent_len(), 0);
                } else {
                    prop_assert!(x.precedent_len() > 0);
                }
            }
        }
    }
}

#[test]
fn long_inputs_fill_both_halves() {
    let lens = [(2000, 2000), (2000, 2000)];
    let cases = corpus(&lens, &[vec![1], vec![0]], &[1, 2]);
    let graph = resolve_citations(&cases);
    let index = index_cases(&cases);
    let tok = fit_tokenizer(&cases, &ArticleSet::synthetic(3), 1);
    for v in [Variant::Halsbury, Variant::Goodhart] {
        let b = build_bundles(
            &cases,
            &graph,
            &index,
            v,
            &tok,
            &Budget::default(),
            Exec::Sequential,
        )
        .unwrap();
        assert!(b
            .iter()
            .all(|b| b.tokens.len() == 1024 && b.precedent_len() == 512));
    }
}
