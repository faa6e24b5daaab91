use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use precedent::estimator::Units;
use precedent::oracle::SyntheticSpec;
use precedent::pipeline::{self, RunConfig, ScorerMode};
use precedent::Exec;

#[derive(Parser)]
#[command(
    name = "precedent",
    version,
    about = "Estimate how much precedent arguments and facts tell about case outcomes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input corpus JSONL.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Article labels file (one per line).
    #[arg(long)]
    articles: Option<PathBuf>,
    #[arg(long, env = "PRECEDENT_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    scorer: Option<ScorerMode>,
    /// External score JSONL files.
    #[arg(long = "scores", num_args = 1..)]
    scores: Vec<PathBuf>,
    #[arg(long)]
    permutations: Option<u64>,
    /// Seed for permutation draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed recorded for model training.
    #[arg(long)]
    train_seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Run every stage on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Report information in bits instead of nats.
    #[arg(long)]
    bits: bool,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.corpus {
            c.paths.corpus = Some(p.clone());
        }
        if let Some(p) = &self.articles {
            c.paths.articles = Some(p.clone());
        }
        if let Some(p) = &self.output_dir {
            c.paths.output_dir = p.clone();
        }
        if let Some(s) = self.scorer {
            c.scorer = s;
        }
        if !self.scores.is_empty() {
            c.paths.scores = self.scores.clone();
        }
        if let Some(n) = self.permutations {
            c.stats.permutations = n;
        }
        if let Some(s) = self.seed {
            c.stats.seed = s;
        }
        if let Some(s) = self.train_seed {
            c.training.seed = s;
        }
        if let Some(e) = self.epochs {
            c.training.epochs = e;
        }
        if let Some(lr) = self.learning_rate {
            c.training.learning_rate = lr;
        }
        if self.sequential {
            c.exec = Exec::Sequential;
        }
        c.validate()?;
        Ok(c)
    }

    fn units(&self) -> Units {
        if self.bits {
            Units::Bits
        } else {
            Units::Nats
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Synthetic spec (TOML).
    spec: PathBuf,
    #[arg(long, env = "PRECEDENT_OUTPUT_DIR", default_value = "synth")]
    output_dir: PathBuf,
    #[arg(long)]
    sequential: bool,
}

impl SynthArgs {
    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse the corpus, resolve citations and write the sub-corpus.
    Ingest(RunArgs),
    /// Build the three conditioning bundles for every sub-corpus case.
    Bundle(RunArgs),
    /// Train the built-in model on each bundle variant and score all cases.
    Train(RunArgs),
    /// Validate external score files and copy them into the output directory.
    ScoreImport(RunArgs),
    /// Compute cross-entropies, MI and uncertainty coefficients.
    Estimate(RunArgs),
    /// Run the paired permutation tests with Benjamini-Hochberg correction.
    Permtest(RunArgs),
    /// Render text tables and CSV files from report.json.
    Report(RunArgs),
    /// Every stage end to end.
    Run(RunArgs),
    /// Generate a synthetic corpus and its exact ground truth.
    SynthGen {
        #[command(flatten)]
        args: SynthArgs,
        /// Number of citing cases.
        #[arg(long, short = 'n')]
        n_cases: usize,
    },
    /// Compute the exact ground truth of a synthetic spec.
    SynthTruth {
        #[command(flatten)]
        args: SynthArgs,
    },
}

fn init_logging(dir: Option<&PathBuf>) {
    let mut builder =
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    builder.format_timestamp(None);
    if let Some(dir) = dir {
        if std::fs::create_dir_all(dir).is_ok() {
            if let Ok(file) = std::fs::File::create(dir.join("run.log")) {
                builder.target(env_logger::Target::Pipe(Box::new(Tee(file))));
            }
        }
    }
    builder.init();
}

/// Copies log output to stderr and a file.
struct Tee(std::fs::File);

impl Write for Tee {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        std::io::stderr().write_all(buf)?;
        self.0.write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        std::io::stderr().flush()?;
        self.0.flush()
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let run_args = match &cli.command {
        Command::Ingest(a)
        | Command::Bundle(a)
        | Command::Train(a)
        | Command::ScoreImport(a)
        | Command::Estimate(a)
        | Command::Permtest(a)
        | Command::Report(a)
        | Command::Run(a) => Some(a.clone()),
        _ => None,
    };
    let config = run_args.as_ref().map(RunArgs::resolve).transpose()?;
    match &cli.command {
        Command::SynthGen { args, .. } | Command::SynthTruth { args } => {
            init_logging(Some(&args.output_dir))
        }
        _ => init_logging(config.as_ref().map(|c| &c.paths.output_dir)),
    }

    match (cli.command, config, run_args) {
        (Command::Ingest(_), Some(c), _) => {
            let ing = pipeline::cmd_ingest(&c)?;
            print!("{}", pipeline::render_stats(&ing));
        }
        (Command::Bundle(_), Some(c), _) => {
            let set = pipeline::cmd_bundle(&c)?;
            for (v, b) in set {
                println!("{}: {} bundles", v.as_str(), b.len());
            }
        }
        (Command::Train(_), Some(c), _) => {
            let scores = pipeline::cmd_train(&c)?;
            println!("scored {} (case, variant) pairs", scores.len());
        }
        (Command::ScoreImport(_), Some(c), _) => {
            let scores = pipeline::cmd_score_import(&c)?;
            println!("imported {} (case, variant) pairs", scores.len());
        }
        (Command::Estimate(_), Some(c), Some(a)) => {
            let report = pipeline::cmd_estimate(&c)?;
            print!(
                "{}",
                precedent::estimator::render_main_table(&report, a.units())
            );
        }
        (Command::Permtest(_), Some(c), _) => {
            let report = pipeline::cmd_permtest(&c)?;
            for t in report.tests.iter().chain(&report.article_tests) {
                println!(
                    "{}: mean difference {:.4}, p = {:.4}{}",
                    t.comparison,
                    t.statistic,
                    t.p_value,
                    if t.bh_rejected { " (significant)" } else { "" }
                );
            }
        }
        (Command::Report(_), Some(c), Some(a)) => {
            print!("{}", pipeline::cmd_report(&c, a.units())?)
        }
        (Command::Run(_), Some(c), Some(a)) => print!("{}", pipeline::cmd_run(&c, a.units())?.1),
        (Command::SynthGen { args, n_cases }, _, _) => {
            let spec = SyntheticSpec::load(&args.spec)?;
            let t = pipeline::cmd_synth_gen(&spec, n_cases, &args.output_dir, args.exec())?;
            println!("{}", serde_json::to_string_pretty(&t)?);
        }
        (Command::SynthTruth { args }, _, _) => {
            let spec = SyntheticSpec::load(&args.spec)?;
            let t = pipeline::cmd_synth_truth(&spec, &args.output_dir, args.exec())?;
            println!("{}", serde_json::to_string_pretty(&t)?);
        }
        _ => unreachable!("run arguments resolved above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
