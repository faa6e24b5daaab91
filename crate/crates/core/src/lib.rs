//! Information-theoretic comparison of precedent arguments and precedent
//! facts as predictors of case outcomes.
//!
//! The pipeline builds three conditioning inputs per case (facts only;
//! facts plus precedent arguments and outcomes; facts plus precedent facts
//! and outcomes), fits a probabilistic multi-label outcome model on each,
//! and estimates conditional mutual information as a difference of held-out
//! cross-entropies. A synthetic generator with exactly computable entropies
//! validates the estimator end to end.
//!
//! Module map:
//!
//! - [`corpus`]: parsing, sectioning, citation resolution, sub-corpus filtering
//! - [`bundles`]: tokenizer and the truncated conditioning layouts
//! - [`models`]: hashed n-gram logistic models and external score files
//! - [`estimator`]: cross-entropy, MI, uncertainty coefficients, reports
//! - [`stats`]: paired permutation tests and Benjamini-Hochberg
//! - [`oracle`]: synthetic corpora with exact ground truth
//! - [`pipeline`]: the stages behind the command-line tool

pub mod bundles;
pub mod corpus;
pub mod estimator;
mod exec;
pub mod io;
pub mod models;
pub mod oracle;
pub mod pipeline;
pub mod stats;

pub use exec::Exec;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Bundle(#[from] bundles::BundleError),
    #[error(transparent)]
    Model(#[from] models::ModelError),
    #[error(transparent)]
    Estimate(#[from] estimator::EstimateError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error("{0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
