mod config;

use std::fmt::Display;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sentimt::corpus::{apply_annotations, load_annotations, load_reviews, write_corpus, write_jsonl, AnnotationRecord, Corpus, CorpusError, CorpusFormat, ReviewRecord};
use sentimt::detect::{classify_flags, flag_discrepancies, frequency_report, Classifier, DetectError, DiscrepancyFlag, Thresholds};
use sentimt::embed::{train, EmbedError, TrainConfig};
use sentimt::lexicons::{Lexica, LexiconError, PolarityTag};
use sentimt::metrics::{costs_csv, evaluate, CostModes, EvalOptions, MetricError, Smoothing};
use sentimt::normalize::{normalize_token, prepare_source, split_segments, tokenize};
use sentimt::sentiment::{ExternalScorer, LexiconScorer, ScalarMode, ScoreError, SentenceScorer};
use sentimt::EmbeddingModel;
use sentimt_service::{Service, ServiceConfig, DEFAULT_PORT};

use config::ConfigFile;

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 64;
const DEFAULT_MAX_LEN: usize = 20;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        match e {
            LexiconError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(format!("lexicon: {e}")),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::Transport(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Score(s) => s.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Score(s) => s.into(),
            MetricError::Corpus(c) => c.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "sentimt", version, about = "Sentiment-error analysis for Arabic-English review translation")]
struct Cli {
    /// Flat key = value config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// Review corpus (.jsonl or .tsv).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Directory of lexicon files; missing files fall back to the shipped seeds.
    #[arg(long)]
    lexica: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ScorerArgs {
    /// `builtin` or `external` (endpoint and key from SENTI_ENDPOINT / SENTI_KEY).
    #[arg(long)]
    scorer: Option<String>,
}

#[derive(Args, Clone)]
struct ThresholdArgs {
    #[arg(long)]
    positive_min_rating: Option<u8>,
    #[arg(long)]
    negative_max_rating: Option<u8>,
    #[arg(long)]
    cutoff: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize sources and split them into segments of at most --max-len tokens.
    Normalize {
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Score every translation; writes one JSON object per record.
    Score {
        #[command(flatten)]
        input: CorpusArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Flag records whose translation sentiment contradicts the rating.
    Flag {
        #[command(flatten)]
        input: CorpusArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign error categories to flags.
    Classify {
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long)]
        flags: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply polarity tags and post-edits from an annotation file, or collect tags interactively.
    Tag {
        #[command(flatten)]
        input: CorpusArgs,
        /// Annotation JSONL to apply; with --interactive, new annotations are appended here.
        #[arg(long)]
        annotations: PathBuf,
        /// Materialized corpus to write.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        interactive: bool,
        #[arg(long, default_value = "cli")]
        annotator: String,
    },
    /// Train CBOW embeddings on the (tagged) normalized sources.
    TrainEmbed {
        #[command(flatten)]
        input: CorpusArgs,
        /// Binary model file.
        #[arg(long)]
        out: PathBuf,
        /// Optional text export, one `token v1 ... vd` line per token.
        #[arg(long)]
        text: Option<PathBuf>,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        min_count: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// BLEU, word-level polarity P/R/F1 and sentiment cost.
    Evaluate {
        #[command(flatten)]
        input: CorpusArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-sentence cost CSV (overall scalar mode).
        #[arg(long)]
        costs: Option<PathBuf>,
        /// `per_subset` or one of positive_class, negative_class, signed.
        #[arg(long)]
        scalar_mode: Option<String>,
        /// `none` or `add_one`.
        #[arg(long)]
        smoothing: Option<String>,
    },
    /// Category histogram CSV from classified flags.
    Report {
        #[arg(long)]
        flags: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the annotation API.
    Serve {
        #[command(flatten)]
        input: CorpusArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long)]
        port: Option<u16>,
        /// Directory of static UI files.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

struct Ctx {
    config: ConfigFile,
}

impl Ctx {
    fn corpus_path(&self, args: &CorpusArgs) -> Result<PathBuf, CliError> {
        self.config.pick_opt(args.corpus.clone(), "corpus")?.ok_or_else(|| CliError::Validation("no corpus given (--corpus or config key corpus)".into()))
    }

    fn corpus(&self, args: &CorpusArgs) -> Result<(PathBuf, Corpus), CliError> {
        let path = self.corpus_path(args)?;
        let corpus = load_reviews(&path, CorpusFormat::from_path(&path))?;
        Ok((path, corpus))
    }

    fn lexica(&self, args: &CorpusArgs) -> Result<Lexica, CliError> {
        match self.config.pick_opt(args.lexica.clone(), "lexica")? {
            Some(dir) if !dir.is_dir() => Err(CliError::Io(format!("{}: lexicon directory not found", dir.display()))),
            Some(dir) => Ok(Lexica::load_dir(&dir)?),
            None => Ok(Lexica::builtin()),
        }
    }

    fn scorer(&self, args: &ScorerArgs, lexica: &Lexica) -> Result<Arc<dyn SentenceScorer>, CliError> {
        match self.config.pick(args.scorer.clone(), "scorer", "builtin".to_string())?.as_str() {
            "builtin" => Ok(Arc::new(LexiconScorer::from_lexica(lexica))),
            "external" => Ok(Arc::new(ExternalScorer::from_env()?)),
            other => Err(CliError::Validation(format!("unknown scorer {other:?} (builtin, external)"))),
        }
    }

    fn thresholds(&self, args: &ThresholdArgs) -> Result<Thresholds, CliError> {
        let d = Thresholds::default();
        let t = Thresholds {
            positive_min_rating: self.config.pick(args.positive_min_rating, "positive_min_rating", d.positive_min_rating)?,
            negative_max_rating: self.config.pick(args.negative_max_rating, "negative_max_rating", d.negative_max_rating)?,
            cutoff: self.config.pick(args.cutoff, "cutoff", d.cutoff)?,
        };
        t.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(t)
    }
}

fn io_err(path: &Path, e: impl Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn read_flags(path: &Path) -> Result<Vec<DiscrepancyFlag>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn run(cli: Cli) -> Result<String, CliError> {
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let ctx = Ctx { config };
    match cli.command {
        Command::Normalize { input, out, max_len } => normalize(&ctx, &input, &out, max_len),
        Command::Score { input, scorer, out } => {
            let (_, corpus) = ctx.corpus(&input)?;
            let scorer = ctx.scorer(&scorer, &ctx.lexica(&input)?)?;
            score(&corpus, scorer.as_ref(), &out)
        }
        Command::Flag { input, scorer, thresholds, out } => {
            let (_, corpus) = ctx.corpus(&input)?;
            let thresholds = ctx.thresholds(&thresholds)?;
            let scorer = ctx.scorer(&scorer, &ctx.lexica(&input)?)?;
            let flags = flag_discrepancies(&corpus, scorer.as_ref(), &thresholds)?;
            write_jsonl(&out, &flags)?;
            Ok(format!("flagged {} of {} records -> {}", flags.len(), corpus.len(), out.display()))
        }
        Command::Classify { input, flags, out } => {
            let (_, corpus) = ctx.corpus(&input)?;
            let classifier = Classifier::new(&ctx.lexica(&input)?);
            let classified = classify_flags(&corpus, &read_flags(&flags)?, &classifier)?;
            write_jsonl(&out, &classified)?;
            let report = frequency_report(&classified);
            let summary: Vec<String> = report.entries.iter().map(|e| format!("{}={}", e.category, e.count)).collect();
            Ok(format!("classified {} flags ({}) -> {}", classified.len(), summary.join(" "), out.display()))
        }
        Command::Tag { input, annotations, out, interactive, annotator } => tag(&ctx, &input, &annotations, out.as_deref(), interactive, &annotator),
        Command::TrainEmbed { input, out, text, dimension, window, min_count, epochs, learning_rate, seed } => {
            let c = &ctx.config;
            let d = TrainConfig::default();
            let train_config = TrainConfig {
                dimension: c.pick(dimension, "dimension", d.dimension)?,
                window: c.pick(window, "window", d.window)?,
                min_count: c.pick(min_count, "min_count", d.min_count)?,
                epochs: c.pick(epochs, "epochs", d.epochs)?,
                initial_learning_rate: c.pick(learning_rate, "learning_rate", d.initial_learning_rate)?,
                seed: c.pick(seed, "seed", d.seed)?,
            };
            let (_, corpus) = ctx.corpus(&input)?;
            let corpus = apply_annotations(&corpus)?;
            let sentences: Vec<Vec<String>> = corpus.records().iter().map(|r| prepare_source(&r.source_text).into_inner()).collect();
            let model: EmbeddingModel = train(&sentences, &train_config)?;
            model.save(&out)?;
            if let Some(text) = &text {
                model.write_text(text)?;
            }
            Ok(format!("trained {} vectors of dimension {} -> {}", model.vocabulary().len(), model.dimension(), out.display()))
        }
        Command::Evaluate { input, scorer, thresholds, out, costs, scalar_mode, smoothing } => {
            let (_, corpus) = ctx.corpus(&input)?;
            let lexica = ctx.lexica(&input)?;
            let scorer = ctx.scorer(&scorer, &lexica)?;
            let modes = match ctx.config.pick(scalar_mode, "scalar_mode", "per_subset".to_string())?.as_str() {
                "per_subset" => CostModes::per_subset(),
                other => CostModes::uniform(other.parse::<ScalarMode>().map_err(CliError::Validation)?),
            };
            let smoothing = match ctx.config.pick(smoothing, "smoothing", "none".to_string())?.as_str() {
                "none" => Smoothing::None,
                "add_one" => Smoothing::AddOne,
                other => return Err(CliError::Validation(format!("unknown smoothing {other:?} (none, add_one)"))),
            };
            let options = EvalOptions { modes, bands: ctx.thresholds(&thresholds)?, smoothing };
            let report = evaluate(&corpus, &lexica.contronyms, scorer.as_ref(), &options)?;
            print!("{}", report.to_table());
            if let Some(out) = &out {
                write_json(out, &report)?;
            }
            if let Some(path) = &costs {
                write_text(path, &costs_csv(&corpus, scorer.as_ref(), modes.overall)?)?;
            }
            Ok(format!("evaluated {} records{}", report.records, out.map(|p| format!(" -> {}", p.display())).unwrap_or_default()))
        }
        Command::Report { flags, out } => {
            let report = frequency_report(&read_flags(&flags)?);
            write_text(&out, &report.to_csv())?;
            Ok(format!("{} flags in {} categories -> {}", report.total, report.entries.len(), out.display()))
        }
        Command::Serve { input, scorer, thresholds, port, static_dir } => {
            let path = ctx.corpus_path(&input)?;
            let lexica = ctx.lexica(&input)?;
            let scorer = ctx.scorer(&scorer, &lexica)?;
            let mut config = ServiceConfig::new(&path);
            config.thresholds = ctx.thresholds(&thresholds)?;
            config.lexica = lexica;
            config.static_dir = ctx.config.pick_opt(static_dir, "static_dir")?;
            let port = ctx.config.pick(port, "port", DEFAULT_PORT)?;
            let service = Service::load(&config, scorer).map_err(|e| match e {
                sentimt_service::ServiceError::Corpus(c) => c.into(),
                sentimt_service::ServiceError::Detect(d) => d.into(),
                sentimt_service::ServiceError::Io(e) => CliError::Io(e.to_string()),
            })?;
            eprintln!("serving {} flagged items on http://127.0.0.1:{port}", service.flags().len());
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
            rt.block_on(sentimt_service::serve(Arc::new(service), config.static_dir, port)).map_err(|e| CliError::Io(format!("port {port}: {e}")))?;
            Ok("server stopped".into())
        }
    }
}

/// Normalized, split copies of every record. A review that needs more than one
/// segment loses its translations, which cannot be aligned to the pieces.
fn normalize(ctx: &Ctx, input: &CorpusArgs, out: &Path, max_len: Option<usize>) -> Result<String, CliError> {
    let max_len = ctx.config.pick(max_len, "max_len", DEFAULT_MAX_LEN)?;
    if max_len == 0 {
        return Err(CliError::Validation("max_len must be positive".into()));
    }
    let (_, corpus) = ctx.corpus(input)?;
    let mut records = Vec::new();
    for r in corpus.records() {
        let tokens = prepare_source(&r.source_text);
        let segments = split_segments(&tokens, max_len);
        if segments.len() <= 1 {
            records.push(ReviewRecord { source_text: tokens.join(), ..r.clone() });
            continue;
        }
        for (k, seg) in segments.iter().enumerate() {
            records.push(ReviewRecord {
                id: format!("{}-{}", r.id, k),
                source_text: seg.join(),
                rating: r.rating,
                mt_text: None,
                reference_text: None,
                segment_index: k as u32,
                origin_id: r.id.clone(),
            });
        }
    }
    let normalized = Corpus::new(records, Vec::new())?;
    write_corpus(&normalized, out)?;
    Ok(format!("normalized {} records into {} segments -> {}", corpus.len(), normalized.len(), out.display()))
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    id: &'a str,
    positive: f64,
    neutral: f64,
    negative: f64,
}

fn score(corpus: &Corpus, scorer: &dyn SentenceScorer, out: &Path) -> Result<String, CliError> {
    let mut texts = Vec::with_capacity(corpus.len());
    for r in corpus.records() {
        texts.push(r.mt_text.as_deref().ok_or_else(|| CliError::Validation(format!("record {:?} has no mt_text", r.id)))?);
    }
    let scores = scorer.score_batch(&texts)?;
    let rows = corpus.records().iter().zip(&scores).map(|(r, s)| ScoreRow { id: &r.id, positive: s.positive, neutral: s.neutral, negative: s.negative });
    write_jsonl(out, rows)?;
    Ok(format!("scored {} records -> {}", scores.len(), out.display()))
}

fn tag(ctx: &Ctx, input: &CorpusArgs, annotations: &Path, out: Option<&Path>, interactive: bool, annotator: &str) -> Result<String, CliError> {
    let (_, corpus) = ctx.corpus(input)?;
    let lexica = ctx.lexica(input)?;
    let mut added = 0;
    if interactive {
        added = tag_interactively(&corpus, &lexica, annotations, annotator)?;
    } else if out.is_none() {
        return Err(CliError::Validation("--out is required unless --interactive".into()));
    }
    let loaded = if annotations.exists() { load_annotations(annotations)? } else { Vec::new() };
    let mut annotated = corpus.clone();
    for a in &loaded {
        if let Some(idx) = a.token_index {
            let record = annotated.get(&a.item_id).ok_or_else(|| CliError::Validation(format!("annotation for unknown record {:?}", a.item_id)))?;
            let token = tokenize(&record.source_text).get(idx).cloned();
            if token.as_deref().map_or(true, |t| lexica.contronyms.lookup(&normalize_token(t)).is_none()) {
                return Err(CliError::Validation(format!("{}: token {idx} is not a contronym occurrence", a.item_id)));
            }
        }
        annotated = annotated.with_annotation(a.clone())?;
    }
    let tags = loaded.iter().filter(|a| a.token_index.is_some()).count();
    if let Some(out) = out {
        let materialized = Corpus::new(apply_annotations(&annotated)?.records().to_vec(), Vec::new())?;
        write_corpus(&materialized, out)?;
        return Ok(format!("applied {tags} polarity tags and {} post-edits ({added} new) -> {}", loaded.len() - tags, out.display()));
    }
    Ok(format!("recorded {added} polarity tags -> {}", annotations.display()))
}

/// Prompts for every untagged contronym occurrence; answers `p`, `n`, `s`kip or `q`uit.
fn tag_interactively(corpus: &Corpus, lexica: &Lexica, annotations: &Path, annotator: &str) -> Result<usize, CliError> {
    let existing = if annotations.exists() { load_annotations(annotations)? } else { Vec::new() };
    let mut last = existing.iter().map(|a| a.timestamp).max().unwrap_or(0);
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    let mut stdout = std::io::stdout();
    let mut added = 0;
    'records: for r in corpus.records() {
        let tokens = tokenize(&r.source_text);
        let normalized: Vec<String> = tokens.iter().map(|t| normalize_token(t)).collect();
        for occ in lexica.contronyms.find_contronyms(&normalized) {
            if occ.tag.is_some() || existing.iter().any(|a| a.item_id == r.id && a.token_index == Some(occ.token_index)) {
                continue;
            }
            let entry = lexica.contronyms.entry(&occ.lemma).expect("occurrence lemma is in the lexicon");
            let pos: Vec<&str> = entry.positive_glosses.iter().map(String::as_str).collect();
            let neg: Vec<&str> = entry.negative_glosses.iter().map(String::as_str).collect();
            let _ = writeln!(stdout, "[{}] {}\n  token {} {:?}: p = {} / n = {}  (s skip, q quit)", r.id, r.source_text, occ.token_index, tokens[occ.token_index], pos.join(", "), neg.join(", "));
            let _ = stdout.flush();
            let answer = match lines.next() {
                Some(line) => line.map_err(|e| CliError::Io(e.to_string()))?,
                None => break 'records,
            };
            let polarity = match answer.trim() {
                "p" | "pos" | "POS" => PolarityTag::Pos,
                "n" | "neg" | "NEG" => PolarityTag::Neg,
                "q" => break 'records,
                _ => continue,
            };
            last = (last + 1).max(now_millis());
            let record = AnnotationRecord::polarity_tag(&r.id, occ.token_index, polarity, annotator, last);
            sentimt::corpus::append_annotation(annotations, &record)?;
            added += 1;
        }
    }
    Ok(added)
}

fn now_millis() -> i64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_millis() as i64).unwrap_or(0)
}
