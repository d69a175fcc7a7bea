//! Command-line front end: `specqa <subcommand>`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or input parse error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{ingest_catalog, CatalogFormat, CorpusError, ProductCatalog};
use crate::desm::DesmMode;
use crate::embeddings::{train_with_stats, DualEmbedding, EmbeddingError, TrainConfig};
use crate::evaluation::{
    evaluate, parse_report_tsv, render_rows, report, EvalError, EvalReport, ReportFormat,
};
use crate::labeling::{
    balance, label_corpus, read_validation_tsv, sweep_threshold_with, write_labeled_tsv,
    write_validation_tsv, LabelingError, SweepStrategy, ThresholdGrid, ThresholdReport,
};
use crate::ranking::{rank, DesmScorer, ExternalScorer, ExternalScorerConfig, RankError, Scorer};
use crate::synth::{generate, split_questions, validation_pairs, SynthConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) | CliError::Input(_) => 2,
        }
    }

    fn in_stage(self, stage: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{stage}: {m}")),
            CliError::Input(m) => CliError::Input(format!("{stage}: {m}")),
            CliError::Runtime(m) => CliError::Runtime(format!("{stage}: {m}")),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(e) => CliError::Runtime(format!("i/o error: {e}")),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::NonFiniteLoss { .. } | EmbeddingError::Io(_) => {
                CliError::Runtime(e.to_string())
            }
            EmbeddingError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<LabelingError> for CliError {
    fn from(e: LabelingError) -> Self {
        match e {
            LabelingError::Io(e) => CliError::Runtime(format!("i/o error: {e}")),
            LabelingError::DegenerateGrid(_) => CliError::Usage(e.to_string()),
            LabelingError::Parse { .. } => CliError::Input(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Scorer(_) => CliError::Runtime(e.to_string()),
            EvalError::EmptyKs | EvalError::ZeroK => CliError::Usage(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "specqa", version, about = "Rank product specifications for user questions")]
pub struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Force single-threaded, bit-reproducible code paths.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a catalog, optionally writing a normalized copy.
    Ingest(IngestArgs),
    /// Generate a synthetic catalog with gold annotations.
    Synth(SynthArgs),
    /// Train IN/OUT embeddings over all questions and specifications.
    TrainEmbeddings(TrainArgs),
    /// Choose the DUAL-score threshold on a labeled validation set.
    SweepThreshold(SweepArgs),
    /// Label every question/specification pair by DUAL score.
    Label(LabelArgs),
    /// Rank one product's specifications for a question.
    Rank(RankArgs),
    /// HIT@k over gold-annotated questions.
    Evaluate(EvaluateArgs),
    /// Combine report TSVs into one table.
    Report(ReportArgs),
    /// Train, sweep, label and balance in one run.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Catalog JSONL.
    #[arg(long)]
    pub catalog: PathBuf,
    /// Extra question rows (TSV: product_id, question_id, text, gold_spec_index).
    #[arg(long)]
    pub questions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: CatalogArgs,
    /// Write the validated catalog here as JSONL.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long = "products", default_value_t = 50)]
    pub n_products: usize,
    #[arg(long = "specs", default_value_t = 10)]
    pub specs_per_product: usize,
    #[arg(long = "questions", default_value_t = 2)]
    pub questions_per_spec: usize,
    #[arg(long, default_value_t = 0.2)]
    pub noise: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Full catalog output.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a train/held-out split of the questions.
    #[arg(long, requires = "test_out")]
    pub train_out: Option<PathBuf>,
    #[arg(long, requires = "train_out")]
    pub test_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Also write a balanced validation TSV drawn from the training side.
    #[arg(long)]
    pub validation_out: Option<PathBuf>,
    #[arg(long, default_value_t = 380)]
    pub validation_pairs: usize,
}

#[derive(Debug, Args, Default)]
pub struct TrainFlags {
    /// Vector size [default: 100]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Context window radius [default: 5]
    #[arg(long)]
    pub window: Option<usize>,
    /// Negative samples per positive pair [default: 5]
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Passes over the corpus [default: 5]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Initial learning rate, decayed linearly [default: 0.025]
    #[arg(long = "lr")]
    pub initial_lr: Option<f64>,
    /// Drop rarer terms [default: 1]
    #[arg(long)]
    pub min_count: Option<u64>,
    /// RNG seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: CatalogArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridFlags {
    /// Grid start [default: -1]
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    /// Grid end [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    /// Grid step [default: 0.01]
    #[arg(long)]
    pub step: Option<f64>,
    /// Sweep midpoints between observed scores instead of a fixed grid.
    #[arg(long)]
    pub midpoints: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value = "out-out")]
    pub mode: DesmMode,
    #[command(flatten)]
    pub grid: GridFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub input: CatalogArgs,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value = "out-out")]
    pub mode: DesmMode,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: f64,
    /// Keep all positives and an equal random sample of negatives.
    #[arg(long)]
    pub balance: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScorerFlags {
    #[arg(long, required_unless_present = "scorer_cmd")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value = "out-out")]
    pub mode: DesmMode,
    /// External scorer command line, run through `sh -c`.
    #[arg(long, conflicts_with = "embeddings")]
    pub scorer_cmd: Option<String>,
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
    /// Name used for the scorer in reports.
    #[arg(long)]
    pub scorer_name: Option<String>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub input: CatalogArgs,
    #[arg(long)]
    pub product: String,
    #[arg(long)]
    pub question: String,
    #[arg(long, default_value_t = 3)]
    pub top: usize,
    #[command(flatten)]
    pub scorer: ScorerFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: CatalogArgs,
    #[command(flatten)]
    pub scorer: ScorerFlags,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub ks: Vec<usize>,
    #[arg(long, default_value = "dataset")]
    pub dataset: String,
    #[arg(long, default_value = "tsv")]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value = "markdown")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub input: CatalogArgs,
    /// Hand-labeled validation pairs (question_text, spec_text, label).
    #[arg(long)]
    pub validation: PathBuf,
    /// Directory receiving all artifacts.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
    /// in-in, in-out, out-in or out-out [default: out-out]
    #[arg(long)]
    pub mode: Option<DesmMode>,
    #[command(flatten)]
    pub grid: GridFlags,
    /// Skip the sweep and label with this threshold.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Held-out gold-annotated catalog evaluated with the DESM scorer.
    #[arg(long)]
    pub eval_catalog: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let threads = if cli.deterministic { Some(1) } else { cli.threads };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        // Fails only if the pool was already built, e.g. by a previous run
        // in the same process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let parallel = Parallelism {
        threads: threads.unwrap_or(1),
        deterministic: cli.deterministic || threads.unwrap_or(1) == 1,
    };
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::TrainEmbeddings(a) => cmd_train(a, parallel, out),
        Command::SweepThreshold(a) => cmd_sweep(a, out),
        Command::Label(a) => cmd_label(a, out),
        Command::Rank(a) => cmd_rank(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Report(a) => cmd_report(a, out),
        Command::Pipeline(a) => cmd_pipeline(a, parallel, out),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Parallelism {
    pub threads: usize,
    pub deterministic: bool,
}

fn require_exists(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input {} does not exist", path.display())))
    }
}

fn load_catalog(args: &CatalogArgs) -> Result<ProductCatalog, CliError> {
    require_exists(&args.catalog)?;
    let mut catalog = ingest_catalog(&args.catalog, CatalogFormat::Jsonl)?;
    if let Some(q) = &args.questions {
        require_exists(q)?;
        catalog.attach_questions(ingest_catalog(q, CatalogFormat::Tsv)?)?;
    }
    Ok(catalog)
}

fn load_embeddings(path: &Path) -> Result<DualEmbedding, CliError> {
    require_exists(path)?;
    Ok(DualEmbedding::load(path)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_catalog(path: &Path, catalog: &ProductCatalog) -> Result<(), CliError> {
    let mut w = create(path)?;
    catalog.write_jsonl(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_ingest(args: IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = load_catalog(&args.input)?;
    if let Some(path) = &args.out {
        write_catalog(path, &catalog)?;
    }
    writeln!(out, "products={} questions={}", catalog.len(), catalog.question_count())?;
    Ok(())
}

pub fn cmd_synth(args: SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = SynthConfig {
        n_products: args.n_products,
        specs_per_product: args.specs_per_product,
        questions_per_spec: args.questions_per_spec,
        noise: args.noise,
        seed: args.seed,
    };
    let catalog = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    if !(0.0..=1.0).contains(&args.test_fraction) {
        return Err(CliError::Usage("--test-fraction must be in [0, 1]".into()));
    }
    writeln!(out, "# seed={}", args.seed)?;
    write_catalog(&args.out, &catalog)?;
    let (train, test) = split_questions(&catalog, args.test_fraction, args.seed);
    if let (Some(train_path), Some(test_path)) = (&args.train_out, &args.test_out) {
        write_catalog(train_path, &train)?;
        write_catalog(test_path, &test)?;
        writeln!(
            out,
            "train_questions={} test_questions={}",
            train.question_count(),
            test.question_count()
        )?;
    }
    if let Some(path) = &args.validation_out {
        let source = if args.train_out.is_some() { &train } else { &catalog };
        let pairs = validation_pairs(source, args.validation_pairs, args.seed);
        let mut w = create(path)?;
        write_validation_tsv(&mut w, &pairs)?;
        w.flush()?;
        writeln!(out, "validation_pairs={}", pairs.len())?;
    }
    writeln!(out, "products={} questions={}", catalog.len(), catalog.question_count())?;
    Ok(())
}

fn resolve_train(flags: &TrainFlags, file: &ConfigFile, parallel: Parallelism) -> Result<TrainConfig, CliError> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        dim: flags.dim.map_or_else(|| file.get("dim", d.dim), Ok)?,
        window: flags.window.map_or_else(|| file.get("window", d.window), Ok)?,
        negatives: flags.negatives.map_or_else(|| file.get("negatives", d.negatives), Ok)?,
        epochs: flags.epochs.map_or_else(|| file.get("epochs", d.epochs), Ok)?,
        initial_lr: flags.initial_lr.map_or_else(|| file.get("lr", d.initial_lr), Ok)?,
        min_count: flags.min_count.map_or_else(|| file.get("min_count", d.min_count), Ok)?,
        seed: flags.seed.map_or_else(|| file.get("seed", d.seed), Ok)?,
        deterministic: parallel.deterministic,
        threads: parallel.threads,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn train_on(catalog: &ProductCatalog, cfg: &TrainConfig, out: &mut dyn Write) -> Result<DualEmbedding, CliError> {
    let (embedding, stats) = train_with_stats(catalog.token_corpus(), cfg)?;
    writeln!(
        out,
        "vocab={} dim={} pairs_per_epoch={} loss_first={:.6} loss_last={:.6}",
        embedding.vocab().len(),
        embedding.dim(),
        stats.pairs_per_epoch,
        stats.epoch_losses.first().copied().unwrap_or(f64::NAN),
        stats.epoch_losses.last().copied().unwrap_or(f64::NAN)
    )?;
    Ok(embedding)
}

pub fn cmd_train(args: TrainArgs, parallel: Parallelism, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = load_catalog(&args.input)?;
    let cfg = resolve_train(&args.train, &ConfigFile::default(), parallel)?;
    writeln!(out, "# seed={}", cfg.seed)?;
    let embedding = train_on(&catalog, &cfg, out)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    embedding.save(&args.out)?;
    Ok(())
}

fn resolve_grid(flags: &GridFlags, file: &ConfigFile) -> Result<(ThresholdGrid, SweepStrategy), CliError> {
    let d = ThresholdGrid::default();
    let grid = ThresholdGrid {
        lo: flags.lo.map_or_else(|| file.get("lo", d.lo), Ok)?,
        hi: flags.hi.map_or_else(|| file.get("hi", d.hi), Ok)?,
        step: flags.step.map_or_else(|| file.get("step", d.step), Ok)?,
    };
    grid.validate()?;
    let midpoints = flags.midpoints || file.get("midpoints", false)?;
    let strategy = if midpoints { SweepStrategy::Midpoints } else { SweepStrategy::Grid };
    Ok((grid, strategy))
}

fn run_sweep(
    validation: &Path,
    embedding: &DualEmbedding,
    mode: DesmMode,
    grid: ThresholdGrid,
    strategy: SweepStrategy,
) -> Result<ThresholdReport, CliError> {
    require_exists(validation)?;
    let pairs = read_validation_tsv(BufReader::new(File::open(validation)?))?;
    Ok(sweep_threshold_with(&pairs, embedding, mode, grid, strategy)?)
}

pub fn cmd_sweep(args: SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let embedding = load_embeddings(&args.embeddings)?;
    let (grid, strategy) = resolve_grid(&args.grid, &ConfigFile::default())?;
    let report = run_sweep(&args.validation, &embedding, args.mode, grid, strategy)?;
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        report.write_tsv(&mut w)?;
        w.flush()?;
    }
    writeln!(
        out,
        "mode={} theta_star={} accuracy={} pairs={} rejected={}",
        args.mode, report.theta_star, report.accuracy_at_theta_star, report.n_pairs, report.rejected
    )?;
    Ok(())
}

pub fn cmd_label(args: LabelArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !args.theta.is_finite() {
        return Err(CliError::Usage("--theta must be finite".into()));
    }
    let catalog = load_catalog(&args.input)?;
    let embedding = load_embeddings(&args.embeddings)?;
    let labeled = label_corpus(&catalog, &embedding, args.mode, args.theta);
    let (positives, negatives, skipped) = (labeled.positives(), labeled.negatives(), labeled.skipped_pairs);
    let pairs = if args.balance {
        balance(labeled.pairs, args.seed)?
    } else {
        labeled.pairs
    };
    let mut w = create(&args.out)?;
    writeln!(w, "# seed={} theta={} mode={}", args.seed, args.theta, args.mode)?;
    write_labeled_tsv(&mut w, &pairs)?;
    w.flush()?;
    writeln!(
        out,
        "positives={positives} negatives={negatives} skipped={skipped} written={}",
        pairs.len()
    )?;
    Ok(())
}

fn open_scorer<'e>(
    flags: &ScorerFlags,
    embedding: Option<&'e DualEmbedding>,
) -> Result<Box<dyn Scorer + 'e>, CliError> {
    if let Some(cmd) = &flags.scorer_cmd {
        let config = ExternalScorerConfig {
            timeout: Duration::from_secs(flags.timeout_secs),
            name: flags.scorer_name.clone().unwrap_or_else(|| "external".into()),
        };
        let scorer = ExternalScorer::spawn_shell(cmd, config)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        return Ok(Box::new(scorer));
    }
    let embedding = embedding.expect("embeddings are required without --scorer-cmd");
    Ok(Box::new(DesmScorer::new(embedding, flags.mode)))
}

pub fn cmd_rank(args: RankArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = load_catalog(&args.input)?;
    let product = catalog
        .product(&args.product)
        .ok_or_else(|| CliError::Usage(format!("unknown product {:?}", args.product)))?;
    let embedding = args.scorer.embeddings.as_deref().map(load_embeddings).transpose()?;
    let mut scorer = open_scorer(&args.scorer, embedding.as_ref())?;
    let question = crate::corpus::Question::new(
        "cli",
        args.question.as_str(),
        None,
        &crate::corpus::AnswerTypeRules::default(),
    )?;
    let list = match rank(&question, product, &mut scorer) {
        Ok(list) => list,
        Err(e @ RankError::Unrankable { .. }) => return Err(CliError::Runtime(e.to_string())),
        Err(RankError::Scorer(e)) => return Err(CliError::Runtime(e.to_string())),
    };
    writeln!(out, "rank\tspec_index\tscore\tspecification")?;
    for (i, entry) in list.top(args.top).iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{:.6}\t{}",
            i + 1,
            entry.spec_index,
            entry.score,
            product.specs[entry.spec_index].text()
        )?;
    }
    if list.unscorable > 0 {
        writeln!(out, "# unscorable={}", list.unscorable)?;
    }
    Ok(())
}

fn eval_with(
    catalog: &ProductCatalog,
    scorer: &mut dyn Scorer,
    ks: &[usize],
    dataset: &str,
) -> Result<EvalReport, CliError> {
    Ok(evaluate(catalog, scorer, ks, dataset)?)
}

pub fn cmd_evaluate(args: EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = load_catalog(&args.input)?;
    let embedding = args.scorer.embeddings.as_deref().map(load_embeddings).transpose()?;
    let mut scorer = open_scorer(&args.scorer, embedding.as_ref())?;
    let report_data = eval_with(&catalog, scorer.as_mut(), &args.ks, &args.dataset)?;
    let text = report(&[report_data], args.format);
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_report(args: ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for path in &args.input {
        require_exists(path)?;
        rows.extend(parse_report_tsv(&fs::read_to_string(path)?)?);
    }
    out.write_all(render_rows(&rows, args.format).as_bytes())?;
    Ok(())
}

/// `key = value` lines; `#` starts a comment.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("config line {}: expected key = value", i + 1)))?;
            let v = v.trim().trim_matches('"');
            values.insert(k.trim().replace('-', "_"), v.to_owned());
        }
        Ok(Self { values })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Input(format!("config key {key}: cannot parse {v:?}"))),
        }
    }
}

/// Fully resolved pipeline settings; its hash tags every artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub catalog: PathBuf,
    pub validation: PathBuf,
    pub out_dir: PathBuf,
    pub train: TrainConfig,
    pub mode: DesmMode,
    pub grid: ThresholdGrid,
    pub strategy: SweepStrategy,
    pub theta: Option<f64>,
    pub seed: u64,
}

impl PipelineConfig {
    fn canonical(&self) -> String {
        let t = &self.train;
        format!(
            "catalog={}\nvalidation={}\ndim={}\nwindow={}\nnegatives={}\nepochs={}\nlr={}\nmin_count={}\nseed={}\ndeterministic={}\nmode={}\nlo={}\nhi={}\nstep={}\nstrategy={:?}\ntheta={:?}\n",
            self.catalog.display(),
            self.validation.display(),
            t.dim,
            t.window,
            t.negatives,
            t.epochs,
            t.initial_lr,
            t.min_count,
            t.seed,
            t.deterministic,
            self.mode,
            self.grid.lo,
            self.grid.hi,
            self.grid.step,
            self.strategy,
            self.theta,
        )
    }

    /// First 16 hex digits of SHA-256 over the canonical settings.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

pub const EMBEDDINGS_FILE: &str = "embeddings.desm";
pub const THRESHOLD_FILE: &str = "threshold.tsv";
pub const LABELED_FILE: &str = "labeled_balanced.tsv";
pub const REPORT_FILE: &str = "report.tsv";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn cmd_pipeline(args: PipelineArgs, parallel: Parallelism, out: &mut dyn Write) -> Result<(), CliError> {
    let file = match &args.config {
        Some(p) => {
            require_exists(p)?;
            ConfigFile::parse(&fs::read_to_string(p)?)?
        }
        None => ConfigFile::default(),
    };
    let train = resolve_train(&args.train, &file, parallel)?;
    let mode = match args.mode {
        Some(m) => m,
        None => file
            .get("mode", "out-out".to_owned())?
            .parse()
            .map_err(CliError::Input)?,
    };
    let (grid, strategy) = resolve_grid(&args.grid, &file)?;
    let theta = match args.theta {
        Some(t) => Some(t),
        None => file.get::<String>("theta", String::new()).and_then(|s| {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| CliError::Input(format!("bad theta {s:?}")))
            }
        })?,
    };
    let config = PipelineConfig {
        catalog: args.input.catalog.clone(),
        validation: args.validation.clone(),
        out_dir: args.out_dir.clone(),
        seed: train.seed,
        train,
        mode,
        grid,
        strategy,
        theta,
    };
    let hash = config.hash();
    writeln!(out, "# seed={} config={hash}", config.seed)?;

    let catalog = load_catalog(&args.input).map_err(|e| e.in_stage("ingest"))?;
    require_exists(&args.validation)?;
    fs::create_dir_all(&args.out_dir)?;

    let embedding = train_on(&catalog, &config.train, out).map_err(|e| e.in_stage("train"))?;
    let emb_path = args.out_dir.join(EMBEDDINGS_FILE);
    embedding.save(&emb_path).map_err(|e| CliError::from(e).in_stage("train"))?;

    let sweep = run_sweep(&args.validation, &embedding, mode, grid, strategy)
        .map_err(|e| e.in_stage("sweep"))?;
    let mut w = create(&args.out_dir.join(THRESHOLD_FILE))?;
    writeln!(w, "# seed={} config={hash} mode={mode}", config.seed)?;
    sweep.write_tsv(&mut w)?;
    w.flush()?;
    let theta = config.theta.unwrap_or(sweep.theta_star);
    writeln!(
        out,
        "theta_star={} accuracy={} theta_used={theta}",
        sweep.theta_star, sweep.accuracy_at_theta_star
    )?;

    let labeled = label_corpus(&catalog, &embedding, mode, theta);
    writeln!(
        out,
        "positives={} negatives={} skipped={}",
        labeled.positives(),
        labeled.negatives(),
        labeled.skipped_pairs
    )?;
    let balanced = balance(labeled.pairs, config.seed).map_err(|e| CliError::from(e).in_stage("balance"))?;
    let mut w = create(&args.out_dir.join(LABELED_FILE))?;
    writeln!(w, "# seed={} config={hash} theta={theta} mode={mode}", config.seed)?;
    write_labeled_tsv(&mut w, &balanced)?;
    w.flush()?;
    writeln!(out, "balanced_pairs={}", balanced.len())?;

    if let Some(eval_path) = &args.eval_catalog {
        require_exists(eval_path)?;
        let test = ingest_catalog(eval_path, CatalogFormat::Jsonl).map_err(|e| CliError::from(e).in_stage("evaluate"))?;
        let mut scorer = DesmScorer::new(&embedding, mode);
        let r = eval_with(&test, &mut scorer, &crate::evaluation::DEFAULT_KS, "held-out")
            .map_err(|e| e.in_stage("evaluate"))?;
        let text = report(std::slice::from_ref(&r), ReportFormat::Tsv);
        let mut w = create(&args.out_dir.join(REPORT_FILE))?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        out.write_all(text.as_bytes())?;
    }

    let mut m = create(&args.out_dir.join(MANIFEST_FILE))?;
    writeln!(m, "config_hash={hash}")?;
    m.write_all(config.canonical().as_bytes())?;
    m.flush()?;
    Ok(())
}
