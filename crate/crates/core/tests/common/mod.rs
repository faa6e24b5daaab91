#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use precedent::bundles::Variant;
use precedent::corpus::Outcome;
use precedent::estimator::{cross_entropy, EstimateReport, ReportMeta};
use precedent::models::ScoreTable;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Probability whose loss on a non-violated article is exactly `loss` nats (up to rounding).
pub fn prob_for_loss(loss: f64) -> f64 {
    -(-loss).exp_m1()
}

/// Score table and gold outcomes where each variant's per-case losses
/// average to the given totals. Every case has no violations; each case's
/// loss is split evenly over `k` articles and perturbed case by case.
pub fn losses_fixture(
    totals: &[(Variant, f64)],
    n_cases: usize,
    k: usize,
) -> (ScoreTable, HashMap<String, Outcome>, Vec<String>) {
    let ids: Vec<String> = (0..n_cases).map(|i| format!("case{i:03}")).collect();
    let mut table = ScoreTable::new(k);
    for &(v, total) in totals {
        for (i, id) in ids.iter().enumerate() {
            // Perturbations cancel in pairs, so the mean is unchanged.
            let delta = if i % 2 == 0 { 0.1 } else { -0.1 } * ((i / 2) % 3) as f64;
            let delta = if n_cases % 2 == 1 && i == n_cases - 1 {
                0.0
            } else {
                delta
            };
            let per_article = (total + delta) / k as f64;
            table
                .insert(id, v, vec![prob_for_loss(per_article); k])
                .unwrap();
        }
    }
    let gold = ids
        .iter()
        .map(|id| (id.clone(), Outcome::none(k)))
        .collect();
    (table, gold, ids)
}

/// Report built from stored per-case losses averaging 2.99 / 2.81 / 2.68 nats.
pub fn reference_report() -> EstimateReport {
    let (table, gold, ids) = losses_fixture(
        &[
            (Variant::FactsOnly, 2.99),
            (Variant::Goodhart, 2.81),
            (Variant::Halsbury, 2.68),
        ],
        12,
        3,
    );
    let labels: Vec<String> = ["3", "6", "8"].iter().map(|s| s.to_string()).collect();
    let est = |v| cross_entropy(&table, &gold, v, &ids).unwrap();
    EstimateReport::build(
        &labels,
        est(Variant::FactsOnly),
        est(Variant::Goodhart),
        est(Variant::Halsbury),
        ReportMeta::default(),
    )
    .unwrap()
}
