//! The stages behind the command-line tool.
//!
//! Every stage reads and writes a fixed layout inside one output directory:
//!
//! ```text
//! config.toml          resolved run configuration
//! manifest.json        config hash, seeds and the artifacts written so far
//! articles.txt         article labels, one per line
//! cases.jsonl          every parsed case (the precedent pool)
//! subcorpus.jsonl      cases with at least one resolved precedent
//! stats.json           corpus statistics
//! tokenizer.json
//! bundles/<variant>.jsonl
//! models/<variant>.json
//! scores/<variant>.jsonl
//! report.json          estimates and test results, full precision
//! table.txt, articles_table.txt, article_mi.csv, tests.csv
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bundles::{
    build_bundles, fit_tokenizer, index_cases, Budget, BundleRecord, ConditioningBundle, Tokenizer,
    Variant,
};
use crate::corpus::{
    check_unique_ids, corpus_stats, filter_subcorpus, load_cases, parse_corpus, resolve_citations,
    save_cases, ArticleSet, Case, CaseRecord, CitationGraph, CorpusError, CorpusStats, Outcome,
    SectionExtractor, Split,
};
use crate::estimator::{
    cross_entropy, render_article_mi_csv, render_article_table, render_main_table,
    render_tests_csv, EstimateReport, ReportMeta, Units,
};
use crate::models::{
    featurize_all, load_external_scores, score_bundles, train, FeatureSpec, OutcomeModel,
    ScoreTable, TrainConfig,
};
use crate::oracle::{exact_entropies, generate, GroundTruth, SyntheticSpec};
use crate::stats::{
    correct_family, paired_permutation_test, PairedLosses, TestResult, DEFAULT_PERMUTATIONS,
};
use crate::{io, Error, Exec, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScorerMode {
    #[default]
    Builtin,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Input corpus JSONL.
    pub corpus: Option<PathBuf>,
    /// Article labels file; the 30 ECHR labels when absent.
    pub articles: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// External score files, used in external mode.
    pub scores: Vec<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: None,
            articles: None,
            output_dir: PathBuf::from("out"),
            scores: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SectionConfig {
    pub facts: Vec<String>,
    pub law: Vec<String>,
}

impl Default for SectionConfig {
    fn default() -> Self {
        SectionConfig {
            facts: vec!["THE FACTS".into()],
            law: vec!["THE LAW".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub min_freq: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            min_freq: Tokenizer::DEFAULT_MIN_FREQ,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub permutations: u64,
    pub seed: u64,
    /// False discovery rate for Benjamini-Hochberg.
    pub q: f64,
    pub per_article: bool,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            permutations: DEFAULT_PERMUTATIONS,
            seed: 0,
            q: 0.05,
            per_article: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scorer: ScorerMode,
    pub exec: Exec,
    pub paths: Paths,
    pub sections: SectionConfig,
    pub tokenizer: TokenizerConfig,
    pub features: FeatureSpec,
    pub training: TrainConfig,
    pub budget: Budget,
    pub stats: StatsConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&io::read_text(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        if !(self.stats.q > 0.0 && self.stats.q < 1.0) {
            return Err(Error::Config(format!(
                "stats.q must be in (0, 1), got {}",
                self.stats.q
            )));
        }
        if self.stats.permutations == 0 {
            return Err(Error::Config("stats.permutations must be positive".into()));
        }
        if self.tokenizer.min_freq == 0 {
            return Err(Error::Config("tokenizer.min_freq must be positive".into()));
        }
        if self.features.orders.is_empty() || self.features.orders.contains(&0) {
            return Err(Error::Config(
                "features.orders must be non-empty and positive".into(),
            ));
        }
        if !(1..=32).contains(&self.features.dim_log2) {
            return Err(Error::Config("features.dim_log2 must be in 1..=32".into()));
        }
        Ok(())
    }

    /// SHA-256 of the configuration with the output directory and execution
    /// strategy blanked, so relocating a run or switching strategy keeps its hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths.output_dir = PathBuf::new();
        c.exec = Exec::Sequential;
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([
            ("permutation".to_string(), self.stats.seed),
            ("training".to_string(), self.training.seed),
        ])
    }

    pub fn meta(&self) -> ReportMeta {
        ReportMeta {
            config_hash: self.hash(),
            seeds: self.seeds(),
            scorer: match self.scorer {
                ScorerMode::Builtin => "builtin".into(),
                ScorerMode::External => "external".into(),
            },
            notes: vec![format!(
                "precedents fill the {}-token precedent segment in citation order, cut at the end",
                self.budget.precedent
            )],
        }
    }

    fn out(&self, rel: &str) -> PathBuf {
        self.paths.output_dir.join(rel)
    }

    fn articles(&self) -> Result<ArticleSet> {
        Ok(match &self.paths.articles {
            Some(p) => ArticleSet::load(p)?,
            None => ArticleSet::echr(),
        })
    }
}

/// Provenance of the files in an output directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: BTreeSet<String>,
}

/// Writes `config.toml` and records `written` in `manifest.json`.
fn record(config: &RunConfig, written: &[&str]) -> Result<()> {
    let path = config.out("manifest.json");
    let hash = config.hash();
    let mut manifest = match io::read_json::<Manifest>(&path) {
        Ok(m) if m.config_hash == hash => m,
        _ => Manifest::default(),
    };
    manifest.config_hash = hash;
    manifest.seeds = config.seeds();
    manifest
        .artifacts
        .extend(written.iter().map(|s| s.to_string()));
    io::write_text(&config.out("config.toml"), &config.to_toml())?;
    io::write_json(&path, &manifest)?;
    Ok(())
}

/// Corpus statistics plus provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub rejected: usize,
    pub subcorpus: crate::corpus::SplitCounts,
    #[serde(flatten)]
    pub stats: CorpusStats,
}

/// Parsed corpus held in memory between stages.
#[derive(Clone, Debug)]
pub struct Ingested {
    pub articles: ArticleSet,
    /// Every parsed case; precedent material is looked up here.
    pub pool: Vec<Case>,
    pub graph: CitationGraph,
    pub subcorpus: Vec<Case>,
    pub stats: CorpusStats,
    pub rejected: usize,
}

/// Builds the citation graph and sub-corpus from already-parsed cases.
pub fn prepare(pool: Vec<Case>, articles: ArticleSet, rejected: usize) -> Result<Ingested> {
    check_unique_ids(&pool)?;
    let graph = resolve_citations(&pool);
    graph.validate(&pool)?;
    let subcorpus = filter_subcorpus(&pool, &graph)?;
    let stats = corpus_stats(&pool, &graph, &articles);
    Ok(Ingested {
        articles,
        pool,
        graph,
        subcorpus,
        stats,
        rejected,
    })
}

fn split_counts(cases: &[Case]) -> crate::corpus::SplitCounts {
    let mut counts = crate::corpus::SplitCounts::default();
    for c in cases {
        counts.add(c.split);
    }
    counts
}

/// Parses the input corpus, resolves citations and writes the sub-corpus.
pub fn cmd_ingest(config: &RunConfig) -> Result<Ingested> {
    let input = config
        .paths
        .corpus
        .as_ref()
        .ok_or_else(|| Error::Config("paths.corpus is required for ingest".into()))?;
    let articles = config.articles()?;
    let sections = SectionExtractor::new(&config.sections.facts, &config.sections.law)?;
    let records: Vec<CaseRecord> = io::read_jsonl(input)?;
    let parsed = parse_corpus(&records, &articles, &sections, config.exec);
    if parsed.cases.is_empty() {
        return Err(CorpusError::EmptySubcorpus.into());
    }
    let ing = prepare(parsed.cases, articles, parsed.rejected.len())?;
    log::info!(
        "ingested {} cases ({} rejected); sub-corpus {}",
        ing.pool.len(),
        ing.rejected,
        ing.subcorpus.len()
    );
    write_ingested(config, &ing)?;
    Ok(ing)
}

fn write_ingested(config: &RunConfig, ing: &Ingested) -> Result<()> {
    io::write_text(&config.out("articles.txt"), &ing.articles.to_text())?;
    save_cases(&config.out("cases.jsonl"), &ing.pool, &ing.articles)?;
    save_cases(
        &config.out("subcorpus.jsonl"),
        &ing.subcorpus,
        &ing.articles,
    )?;
    io::write_json(
        &config.out("stats.json"),
        &StatsFile {
            config_hash: config.hash(),
            seeds: config.seeds(),
            rejected: ing.rejected,
            subcorpus: split_counts(&ing.subcorpus),
            stats: ing.stats.clone(),
        },
    )?;
    record(
        config,
        &[
            "articles.txt",
            "cases.jsonl",
            "subcorpus.jsonl",
            "stats.json",
        ],
    )
}

/// Reloads the output of [`cmd_ingest`].
pub fn load_ingested(config: &RunConfig) -> Result<Ingested> {
    let articles = ArticleSet::load(&config.out("articles.txt"))?;
    let pool = load_cases(&config.out("cases.jsonl"), &articles)?;
    prepare(pool, articles, 0)
}

/// Renders stats as the lines printed by `ingest`.
pub fn render_stats(ing: &Ingested) -> String {
    let s = &ing.stats;
    let sub = split_counts(&ing.subcorpus);
    format!(
        "documents: {} (train {}, validation {}, test {})\nin-corpus citations: {} links to {} cases\nout-of-corpus citations: {} links to {} distinct strings\nsub-corpus: {} (train {}, validation {}, test {})\n",
        s.documents.total,
        s.documents.train,
        s.documents.validation,
        s.documents.test,
        s.in_corpus_links,
        s.in_corpus_types,
        s.out_of_corpus_links,
        s.out_of_corpus_types,
        sub.total,
        sub.train,
        sub.validation,
        sub.test
    )
}

pub type BundleSet = BTreeMap<Variant, Vec<ConditioningBundle>>;

/// Fits the tokenizer and builds all three bundle variants for the sub-corpus.
pub fn make_bundles(ing: &Ingested, config: &RunConfig) -> Result<(Tokenizer, BundleSet)> {
    let tok = fit_tokenizer(&ing.pool, &ing.articles, config.tokenizer.min_freq);
    let index = index_cases(&ing.pool);
    let mut set = BundleSet::new();
    for v in Variant::ALL {
        let b = build_bundles(
            &ing.subcorpus,
            &ing.graph,
            &index,
            v,
            &tok,
            &config.budget,
            config.exec,
        )?;
        set.insert(v, b);
    }
    Ok((tok, set))
}

fn bundle_path(v: Variant) -> String {
    format!("bundles/{}.jsonl", v.as_str())
}

fn model_path(v: Variant) -> String {
    format!("models/{}.json", v.as_str())
}

fn score_path(v: Variant) -> String {
    format!("scores/{}.jsonl", v.as_str())
}

pub fn cmd_bundle(config: &RunConfig) -> Result<BundleSet> {
    let ing = load_ingested(config)?;
    let (tok, set) = make_bundles(&ing, config)?;
    tok.save(&config.out("tokenizer.json"))?;
    let splits: HashMap<&str, Split> = ing
        .subcorpus
        .iter()
        .map(|c| (c.id.as_str(), c.split))
        .collect();
    let mut written = vec!["tokenizer.json".to_string()];
    for (v, bundles) in &set {
        let records: Vec<BundleRecord> = bundles
            .iter()
            .map(|b| BundleRecord::new(b, splits.get(b.case_id.as_str()).copied()))
            .collect();
        io::write_jsonl(&config.out(&bundle_path(*v)), &records)?;
        written.push(bundle_path(*v));
    }
    record(
        config,
        &written.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;
    Ok(set)
}

fn load_bundles(config: &RunConfig) -> Result<BundleSet> {
    let mut set = BundleSet::new();
    for v in Variant::ALL {
        let records: Vec<BundleRecord> = io::read_jsonl(&config.out(&bundle_path(v)))?;
        set.insert(
            v,
            records.into_iter().map(BundleRecord::into_bundle).collect(),
        );
    }
    Ok(set)
}

/// Trains one model per variant and scores every sub-corpus case.
pub fn train_and_score(
    cases: &[Case],
    bundles: &BundleSet,
    n_articles: usize,
    config: &RunConfig,
) -> Result<(BTreeMap<Variant, OutcomeModel>, ScoreTable)> {
    let by_id: HashMap<&str, &Case> = cases.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut models = BTreeMap::new();
    let mut scores = ScoreTable::new(n_articles);
    for (&v, bs) in bundles {
        let xs = featurize_all(bs, &config.features, config.exec);
        let mut train_set = Vec::new();
        let mut val_set = Vec::new();
        for (b, x) in bs.iter().zip(&xs) {
            let case = by_id
                .get(b.case_id.as_str())
                .ok_or_else(|| crate::estimator::EstimateError::MissingGold(b.case_id.clone()))?;
            match case.split {
                Split::Train => train_set.push((x, &case.outcome)),
                Split::Validation => val_set.push((x, &case.outcome)),
                Split::Test => {}
            }
        }
        let model = train(
            &config.features,
            n_articles,
            &train_set,
            &val_set,
            &config.training,
            config.exec,
        )?;
        log::info!(
            "{}: trained on {} cases, selected epoch {}",
            v.as_str(),
            model.meta.n_train,
            model.meta.selected_epoch
        );
        scores.merge(score_bundles(&model, bs, config.exec)?)?;
        models.insert(v, model);
    }
    Ok((models, scores))
}

pub fn cmd_train(config: &RunConfig) -> Result<ScoreTable> {
    let ing = load_ingested(config)?;
    let bundles = load_bundles(config)?;
    let (models, scores) = train_and_score(&ing.subcorpus, &bundles, ing.articles.len(), config)?;
    let mut written = Vec::new();
    for (v, m) in &models {
        m.save(&config.out(&model_path(*v)))?;
        written.push(model_path(*v));
    }
    written.extend(save_scores(config, &scores)?);
    record(
        config,
        &written.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;
    Ok(scores)
}

fn save_scores(config: &RunConfig, scores: &ScoreTable) -> Result<Vec<String>> {
    let mut written = Vec::new();
    for v in Variant::ALL {
        let mut part = ScoreTable::new(scores.n_articles());
        for r in scores.records().into_iter().filter(|r| r.variant == v) {
            part.insert(&r.case_id, r.variant, r.probs)?;
        }
        part.save(&config.out(&score_path(v)))?;
        written.push(score_path(v));
    }
    Ok(written)
}

fn test_ids(cases: &[Case]) -> Vec<String> {
    cases
        .iter()
        .filter(|c| c.split == Split::Test)
        .map(|c| c.id.clone())
        .collect()
}

/// Loads external score files, requiring every test case under every variant.
pub fn import_scores(config: &RunConfig, ing: &Ingested) -> Result<ScoreTable> {
    if config.paths.scores.is_empty() {
        return Err(Error::Config(
            "external mode needs at least one score file (paths.scores)".into(),
        ));
    }
    let k = ing.articles.len();
    let mut table = ScoreTable::new(k);
    for p in &config.paths.scores {
        table.merge(load_external_scores(p, k, None)?)?;
    }
    table.check_coverage(&test_ids(&ing.subcorpus), &Variant::ALL)?;
    Ok(table)
}

pub fn cmd_score_import(config: &RunConfig) -> Result<ScoreTable> {
    let ing = load_ingested(config)?;
    let table = import_scores(config, &ing)?;
    let written = save_scores(config, &table)?;
    record(
        config,
        &written.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;
    Ok(table)
}

/// Held-out cross-entropies of all three variants over the test split.
pub fn estimate(ing: &Ingested, scores: &ScoreTable, config: &RunConfig) -> Result<EstimateReport> {
    let ids = test_ids(&ing.subcorpus);
    let gold: HashMap<String, Outcome> = ing
        .subcorpus
        .iter()
        .map(|c| (c.id.clone(), c.outcome.clone()))
        .collect();
    let hf = cross_entropy(scores, &gold, Variant::FactsOnly, &ids)?;
    let hg = cross_entropy(scores, &gold, Variant::Goodhart, &ids)?;
    let hh = cross_entropy(scores, &gold, Variant::Halsbury, &ids)?;
    Ok(EstimateReport::build(
        ing.articles.labels(),
        hf,
        hg,
        hh,
        config.meta(),
    )?)
}

pub fn cmd_estimate(config: &RunConfig) -> Result<EstimateReport> {
    let ing = load_ingested(config)?;
    let k = ing.articles.len();
    let mut scores = ScoreTable::new(k);
    for v in Variant::ALL {
        scores.merge(load_external_scores(&config.out(&score_path(v)), k, None)?)?;
    }
    let report = estimate(&ing, &scores, config)?;
    io::write_json(&config.out("report.json"), &report)?;
    record(config, &["report.json"])?;
    Ok(report)
}

/// Comparison name, baseline view, conditioned view.
const COMPARISONS: [(&str, Variant, Variant); 3] = [
    ("goodhart_vs_facts", Variant::FactsOnly, Variant::Goodhart),
    ("halsbury_vs_facts", Variant::FactsOnly, Variant::Halsbury),
    ("halsbury_vs_goodhart", Variant::Goodhart, Variant::Halsbury),
];

/// Runs the aggregate and per-article test families, each BH-corrected.
pub fn permutation_tests(report: &mut EstimateReport, config: &RunConfig) -> Result<()> {
    let est = |v: Variant| match v {
        Variant::FactsOnly => &report.h_facts,
        Variant::Goodhart => &report.h_goodhart,
        Variant::Halsbury => &report.h_halsbury,
    };
    let mut seed = config.stats.seed;
    let mut next_seed = || {
        let s = seed;
        seed = seed.wrapping_add(1);
        s
    };
    let mut tests = Vec::new();
    for (name, a, b) in COMPARISONS {
        let (ea, eb) = (est(a), est(b));
        let pairs = PairedLosses::new(
            ea.case_ids.clone(),
            ea.per_case_loss.clone(),
            eb.per_case_loss.clone(),
        )?;
        let mut t =
            paired_permutation_test(&pairs, config.stats.permutations, next_seed(), config.exec)?;
        t.comparison = name.to_string();
        tests.push(t);
    }
    correct_family(&mut tests, config.stats.q);

    let mut article_tests: Vec<TestResult> = Vec::new();
    if config.stats.per_article {
        for (k, label) in report.articles.iter().enumerate() {
            for (name, a, b) in COMPARISONS {
                let (ea, eb) = (est(a), est(b));
                let column = |e: &crate::estimator::EntropyEstimate| -> Vec<f64> {
                    e.per_case_article.iter().map(|row| row[k]).collect()
                };
                let pairs = PairedLosses::new(ea.case_ids.clone(), column(ea), column(eb))?;
                let mut t = paired_permutation_test(
                    &pairs,
                    config.stats.permutations,
                    next_seed(),
                    config.exec,
                )?;
                t.comparison = format!("{label}:{name}");
                article_tests.push(t);
            }
        }
        correct_family(&mut article_tests, config.stats.q);
    }
    report.tests = tests;
    report.article_tests = article_tests;
    Ok(())
}

pub fn cmd_permtest(config: &RunConfig) -> Result<EstimateReport> {
    let mut report: EstimateReport = io::read_json(&config.out("report.json"))?;
    permutation_tests(&mut report, config)?;
    io::write_json(&config.out("report.json"), &report)?;
    record(config, &["report.json"])?;
    Ok(report)
}

fn provenance_footer(meta: &ReportMeta) -> String {
    let seeds: Vec<String> = meta.seeds.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let mut s = format!(
        "config {}; seeds {}; scorer {}\n",
        meta.config_hash,
        seeds.join(" "),
        meta.scorer
    );
    for note in &meta.notes {
        s.push_str(&format!("note: {note}\n"));
    }
    s
}

/// Writes the text tables and CSV files for a report; returns the main table.
pub fn write_report(config: &RunConfig, report: &EstimateReport, units: Units) -> Result<String> {
    let footer = provenance_footer(&report.meta);
    let table = format!("{}{footer}", render_main_table(report, units));
    io::write_text(&config.out("table.txt"), &table)?;
    io::write_text(
        &config.out("articles_table.txt"),
        &format!("{}{footer}", render_article_table(report, units)),
    )?;
    io::write_text(
        &config.out("article_mi.csv"),
        &render_article_mi_csv(report),
    )?;
    io::write_text(&config.out("tests.csv"), &render_tests_csv(report))?;
    record(
        config,
        &[
            "table.txt",
            "articles_table.txt",
            "article_mi.csv",
            "tests.csv",
        ],
    )?;
    Ok(table)
}

pub fn cmd_report(config: &RunConfig, units: Units) -> Result<String> {
    let report: EstimateReport = io::read_json(&config.out("report.json"))?;
    write_report(config, &report, units)
}

/// Estimates, tests and the report from an already-ingested corpus, in memory.
///
/// Builtin mode trains and never reads score files; external mode reads the
/// configured score files and never trains.
pub fn run_ingested(ing: &Ingested, config: &RunConfig) -> Result<EstimateReport> {
    let scores = match config.scorer {
        ScorerMode::Builtin => {
            let (_, bundles) = make_bundles(ing, config)?;
            train_and_score(&ing.subcorpus, &bundles, ing.articles.len(), config)?.1
        }
        ScorerMode::External => import_scores(config, ing)?,
    };
    let mut report = estimate(ing, &scores, config)?;
    permutation_tests(&mut report, config)?;
    Ok(report)
}

/// Every stage end to end, writing all artifacts.
pub fn cmd_run(config: &RunConfig, units: Units) -> Result<(EstimateReport, String)> {
    let ing = cmd_ingest(config)?;
    let mut written = Vec::new();
    let scores = match config.scorer {
        ScorerMode::Builtin => {
            let (tok, bundles) = make_bundles(&ing, config)?;
            tok.save(&config.out("tokenizer.json"))?;
            written.push("tokenizer.json".to_string());
            let (models, scores) =
                train_and_score(&ing.subcorpus, &bundles, ing.articles.len(), config)?;
            for (v, m) in &models {
                m.save(&config.out(&model_path(*v)))?;
                written.push(model_path(*v));
            }
            scores
        }
        ScorerMode::External => import_scores(config, &ing)?,
    };
    written.extend(save_scores(config, &scores)?);
    let mut report = estimate(&ing, &scores, config)?;
    permutation_tests(&mut report, config)?;
    io::write_json(&config.out("report.json"), &report)?;
    written.push("report.json".into());
    record(
        config,
        &written.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;
    let table = write_report(config, &report, units)?;
    Ok((report, table))
}

/// Ground truth plus the spec it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub spec_hash: String,
    pub seed: u64,
    #[serde(flatten)]
    pub truth: GroundTruth,
}

fn spec_hash(spec: &SyntheticSpec) -> String {
    Sha256::digest(spec.to_toml().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn cmd_synth_truth(spec: &SyntheticSpec, out: &Path, exec: Exec) -> Result<TruthFile> {
    let truth = TruthFile {
        spec_hash: spec_hash(spec),
        seed: spec.seed,
        truth: exact_entropies(spec, exec)?,
    };
    io::write_json(&out.join("truth.json"), &truth)?;
    Ok(truth)
}

/// Writes a synthetic corpus (`cases.jsonl`, `articles.txt`, `spec.toml`) and its ground truth.
pub fn cmd_synth_gen(
    spec: &SyntheticSpec,
    n_cases: usize,
    out: &Path,
    exec: Exec,
) -> Result<TruthFile> {
    spec.validate()?;
    let truth = cmd_synth_truth(spec, out, exec)?;
    let corpus = generate(spec, n_cases, exec)?;
    save_cases(&out.join("cases.jsonl"), &corpus.cases, &corpus.articles)?;
    io::write_text(&out.join("articles.txt"), &corpus.articles.to_text())?;
    io::write_text(&out.join("spec.toml"), &spec.to_toml())?;
    Ok(truth)
}

/// Builtin-mode configuration suited to synthetic corpora.
pub fn synthetic_run_config(output_dir: PathBuf) -> RunConfig {
    RunConfig {
        paths: Paths {
            output_dir,
            ..Paths::default()
        },
        tokenizer: TokenizerConfig { min_freq: 1 },
        features: FeatureSpec::unigrams(),
        training: TrainConfig {
            epochs: 300,
            learning_rate: 0.5,
            seed: 0,
            early_stopping: true,
        },
        stats: StatsConfig {
            permutations: 1000,
            per_article: false,
            ..StatsConfig::default()
        },
        ..RunConfig::default()
    }
}

/// Generates a synthetic corpus in memory and prepares it like `ingest` would.
pub fn synthetic_ingested(spec: &SyntheticSpec, n_cases: usize, exec: Exec) -> Result<Ingested> {
    let corpus = generate(spec, n_cases, exec)?;
    prepare(corpus.cases, corpus.articles, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip_and_hash() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let mut moved = c.clone();
        moved.paths.output_dir = PathBuf::from("/elsewhere");
        assert_eq!(moved.hash(), c.hash());
        let mut other = c.clone();
        other.stats.seed = 7;
        assert_ne!(other.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c =
            RunConfig::from_toml("scorer = \"external\"\n[stats]\npermutations = 50\n").unwrap();
        assert_eq!(c.scorer, ScorerMode::External);
        assert_eq!(c.stats.permutations, 50);
        assert_eq!(c.budget, Budget::default());
    }

    #[test]
    fn bad_config_is_rejected() {
        assert!(RunConfig::from_toml("[budget]\nfacts = 0\nprecedent = 512\n").is_err());
        assert!(RunConfig::from_toml("[stats]\nq = 1.5\n").is_err());
        assert!(RunConfig::from_toml("unknown_scorer = 3\nscorer = \"magic\"").is_err());
    }
}
