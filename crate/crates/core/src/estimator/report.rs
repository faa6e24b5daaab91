use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    mutual_information, per_article_report, uncertainty_coefficient, EntropyEstimate, EstimateError,
};
use crate::bundles::Variant;
use crate::stats::TestResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArticleRow {
    pub article: String,
    pub h_facts: f64,
    pub mi_goodhart: f64,
    /// `None` when the article's baseline entropy is zero.
    pub u_goodhart: Option<f64>,
    pub mi_halsbury: f64,
    pub u_halsbury: Option<f64>,
}

/// Provenance carried by every report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub scorer: String,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub meta: ReportMeta,
    pub articles: Vec<String>,
    pub h_facts: EntropyEstimate,
    pub h_goodhart: EntropyEstimate,
    pub h_halsbury: EntropyEstimate,
    pub mi_goodhart: f64,
    pub mi_halsbury: f64,
    pub u_goodhart: f64,
    pub u_halsbury: f64,
    pub per_article: Vec<ArticleRow>,
    /// Aggregate comparisons, corrected as one family.
    #[serde(default)]
    pub tests: Vec<TestResult>,
    /// Per-article comparisons, corrected as a separate family.
    #[serde(default)]
    pub article_tests: Vec<TestResult>,
}

impl EstimateReport {
    pub fn build(
        articles: &[String],
        h_facts: EntropyEstimate,
        h_goodhart: EntropyEstimate,
        h_halsbury: EntropyEstimate,
        mut meta: ReportMeta,
    ) -> Result<Self, EstimateError> {
        for (est, expected) in [
            (&h_facts, Variant::FactsOnly),
            (&h_goodhart, Variant::Goodhart),
            (&h_halsbury, Variant::Halsbury),
        ] {
            if est.variant != expected {
                return Err(EstimateError::WrongVariant {
                    expected,
                    got: est.variant,
                });
            }
        }
        let mi_goodhart = mutual_information(&h_facts, &h_goodhart)?;
        let mi_halsbury = mutual_information(&h_facts, &h_halsbury)?;
        let u_goodhart = uncertainty_coefficient(mi_goodhart, &h_facts)?;
        let u_halsbury = uncertainty_coefficient(mi_halsbury, &h_facts)?;
        let per_article = per_article_report(articles, &h_facts, &h_goodhart, &h_halsbury)?;
        for (name, mi) in [("Goodhart", mi_goodhart), ("Halsbury", mi_halsbury)] {
            if mi < 0.0 {
                log::warn!("negative {name} MI estimate ({mi:.4} nats): model approximation error");
                meta.notes.push(format!(
                    "{name} MI estimate is negative ({mi:.4} nats); reported unclipped"
                ));
            }
        }
        let negative: Vec<&str> = per_article
            .iter()
            .filter(|r| r.mi_goodhart < 0.0 || r.mi_halsbury < 0.0)
            .map(|r| r.article.as_str())
            .collect();
        if !negative.is_empty() {
            meta.notes.push(format!(
                "negative per-article MI estimates (unclipped) for: {}",
                negative.join(", ")
            ));
        }
        Ok(EstimateReport {
            meta,
            articles: articles.to_vec(),
            h_facts,
            h_goodhart,
            h_halsbury,
            mi_goodhart,
            mi_halsbury,
            u_goodhart,
            u_halsbury,
            per_article,
            tests: Vec::new(),
            article_tests: Vec::new(),
        })
    }
}

/// Display units; stored values are always nats.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    fn scale(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

/// Cross-entropy, MI and U per model input; nats to 2 decimals, U in whole percent.
pub fn render_main_table(r: &EstimateReport, units: Units) -> String {
    let unit = match units {
        Units::Nats => "nats",
        Units::Bits => "bits",
    };
    let rows = [
        ("Facts", r.h_facts.total_nats, None),
        (
            "Goodhart",
            r.h_goodhart.total_nats,
            Some((r.mi_goodhart, r.u_goodhart)),
        ),
        (
            "Halsbury",
            r.h_halsbury.total_nats,
            Some((r.mi_halsbury, r.u_halsbury)),
        ),
    ];
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>8} {:>8} {:>6}", "Model Input", "H", "MI", "U");
    for (name, h, rest) in rows {
        let (mi, u) = match rest {
            Some((mi, u)) => (
                format!("{:.2}", units.scale(mi)),
                format!("{:.0}%", u * 100.0),
            ),
            None => ("-".to_string(), "-".to_string()),
        };
        let _ = writeln!(s, "{:<12} {:>8.2} {:>8} {:>6}", name, units.scale(h), mi, u);
    }
    let _ = writeln!(s, "({unit}; n = {} evaluation cases)", r.h_facts.n_cases);
    s
}

fn pct(u: Option<f64>) -> String {
    u.map_or("-".to_string(), |u| format!("{:.2}%", u * 100.0))
}

/// Per-article breakdown: baseline entropy, then MI and U for each precedent view.
pub fn render_article_table(r: &EstimateReport, units: Units) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>6} {:>9} | {:>8} {:>9} | {:>8} {:>9}",
        "", "", "Goodhart", "", "Halsbury", ""
    );
    let _ = writeln!(
        s,
        "{:>6} {:>9} | {:>8} {:>9} | {:>8} {:>9}",
        "Art", "H(O_k|F)", "MI", "U", "MI", "U"
    );
    for row in &r.per_article {
        let _ = writeln!(
            s,
            "{:>6} {:>9.3} | {:>8.3} {:>9} | {:>8.3} {:>9}",
            row.article,
            units.scale(row.h_facts),
            units.scale(row.mi_goodhart),
            pct(row.u_goodhart),
            units.scale(row.mi_halsbury),
            pct(row.u_halsbury),
        );
    }
    s
}

fn csv_num(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}

/// `article,u_goodhart,u_halsbury`, one row per article.
pub fn render_article_mi_csv(r: &EstimateReport) -> String {
    let mut s = String::from("article,u_goodhart,u_halsbury\n");
    for row in &r.per_article {
        let _ = writeln!(
            s,
            "{},{},{}",
            row.article,
            csv_num(row.u_goodhart),
            csv_num(row.u_halsbury)
        );
    }
    s
}

/// `comparison,statistic,p_value,rejected` for both test families.
pub fn render_tests_csv(r: &EstimateReport) -> String {
    let mut s = String::from("comparison,statistic,p_value,rejected\n");
    for t in r.tests.iter().chain(&r.article_tests) {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            t.comparison, t.statistic, t.p_value, t.bh_rejected
        );
    }
    s
}
