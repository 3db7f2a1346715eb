//! The `tbger` command line: `ingest`, `split`, `build`, `recommend`, `evaluate`.
//!
//! Settings come from flags, then an optional JSON config file (the
//! serialized [`ExperimentConfig`]), then defaults. Exit codes: 0 success,
//! 1 internal error, 2 I/O or parse error, 3 usage error or unknown id.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::activity::{build_windowed_activity, read_snapshot, temporal_activity, write_snapshot, SECONDS_PER_DAY};
use crate::corpus::{chronological_split, select_candidates, SplitManifest, SplitRatios, TrainingView};
use crate::diffusion::BipartiteGraph;
use crate::eval::{recommend_with_graph, run_experiment, EvalConfig, EvalReport, Method};
use crate::ingest::{
    build_corpus, format_timestamp, parse_timestamp, CorpusStats, ParseStats, PostCorpus, PostReader, Timestamp,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Io { .. } | CliError::Parse(_) => 2,
            CliError::Usage(_) | CliError::NotFound(_) => 3,
        }
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<crate::eval::EvalError> for CliError {
    fn from(e: crate::eval::EvalError) -> Self {
        use crate::eval::EvalError as E;
        match e {
            E::UnknownMethod(_) | E::InvalidK => CliError::Usage(e.to_string()),
            E::UnknownQuestion(_) => CliError::NotFound(e.to_string()),
            E::Io(source) => CliError::Io {
                path: PathBuf::new(),
                source,
            },
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<crate::corpus::CorpusError> for CliError {
    fn from(e: crate::corpus::CorpusError) -> Self {
        use crate::corpus::CorpusError as E;
        match e {
            E::UnknownQuestion(_) => CliError::Parse(format!("manifest does not match corpus: {e}")),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Everything needed to replay an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub site: Option<String>,
    pub dump: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub method: String,
    #[serde(flatten)]
    pub eval: EvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            site: None,
            dump: None,
            corpus: None,
            manifest: None,
            out_dir: None,
            method: Method::TBger.name().to_string(),
            eval: EvalConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path).map_err(CliError::io(path))?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }
}

/// Hex SHA-256 over the canonical JSON of every part, newline separated.
pub fn fingerprint<T: Serialize>(parts: &[&T]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(serde_json::to_vec(p).expect("fingerprinted values serialize"));
        hasher.update(b"\n");
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Settings that determine results; output paths are deliberately absent.
#[derive(Serialize)]
struct ResultInputs<'a> {
    site: &'a str,
    method: Method,
    eval: &'a EvalConfig,
    manifest: &'a SplitManifest,
}

#[derive(Parser, Debug)]
#[command(
    name = "tbger",
    version,
    about = "Temporal bipartite-graph expert recommendation for Stack Exchange sites"
)]
pub struct Cli {
    /// JSON experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log verbosity (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a Posts.xml dump into a corpus file and print its statistics.
    Ingest(IngestArgs),
    /// Split a corpus chronologically and select candidate answerers.
    Split(SplitArgs),
    /// Write the windowed activity snapshot for one query time.
    Build(BuildArgs),
    /// Rank candidate answerers for a question or a tag set.
    Recommend(RecommendArgs),
    /// Evaluate one or all methods on the test partition.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Path to Posts.xml.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Output corpus file (newline-delimited JSON).
    #[arg(long)]
    out: PathBuf,
    /// Site name; defaults to the dump's parent directory name.
    #[arg(long)]
    site: Option<String>,
    /// Drop posts created at or after this time (ISO-8601 UTC), to
    /// reproduce an older snapshot of the site.
    #[arg(long)]
    until: Option<String>,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Corpus file written by `ingest`.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Split manifest written by `split`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct TuningArgs {
    /// Activity window length in days.
    #[arg(long)]
    window_days: Option<i64>,
    /// Minimum training answers for a user to be a candidate.
    #[arg(long)]
    min_answers: Option<usize>,
    /// `weighted` or `edge-count`.
    #[arg(long)]
    degree_mode: Option<crate::diffusion::DegreeMode>,
    /// Seed for the randomized baselines.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Corpus file written by `ingest`.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output manifest (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.7,0.1,0.2")]
    ratios: String,
    /// Minimum training answers for a user to be a candidate.
    #[arg(long)]
    min_answers: Option<usize>,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Output snapshot file.
    #[arg(long)]
    out: PathBuf,
    /// Query time (ISO-8601 UTC); defaults to the first test question.
    #[arg(long)]
    at: Option<String>,
}

#[derive(Args, Debug)]
struct RecommendArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Rank for an existing question, at its posting time.
    #[arg(long, conflicts_with_all = ["tags", "at"])]
    question: Option<u64>,
    /// Comma-separated tags.
    #[arg(long, value_delimiter = ',', requires = "at")]
    tags: Vec<String>,
    /// Query time (ISO-8601 UTC).
    #[arg(long)]
    at: Option<String>,
    /// Reuse a snapshot written by `build` instead of rebuilding windows.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Number of users to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    /// t-bger, score, tag-mf, t-tag-mf or all.
    #[arg(long)]
    method: Option<String>,
    /// Rank every user with at least one training answer and report cold-start metrics.
    #[arg(long)]
    cold_start: bool,
    /// Training answers below which a user counts as cold.
    #[arg(long)]
    cold_threshold: Option<usize>,
    /// Trials for the vote-score baseline.
    #[arg(long)]
    score_trials: Option<usize>,
    /// SGD epochs for the factorization baselines.
    #[arg(long)]
    mf_epochs: Option<usize>,
    /// Directory for JSON, text and CSV reports.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command, and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();

    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args, &mut config, out),
        Command::Split(args) => cmd_split(args, &mut config, out),
        Command::Build(args) => cmd_build(args, &mut config, out),
        Command::Recommend(args) => cmd_recommend(args, &mut config, out),
        Command::Evaluate(args) => cmd_evaluate(args, &mut config, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(CliError::io(Path::new("<stdout>")))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    File::create(path).map(BufWriter::new).map_err(CliError::io(path))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(CliError::io(path))
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("missing --{flag} (or `{flag}` in the config file)")))
}

fn parse_time(s: &str) -> Result<Timestamp, CliError> {
    parse_timestamp(s).ok_or_else(|| CliError::Usage(format!("cannot parse time `{s}` (expected YYYY-MM-DDTHH:MM:SS)")))
}

/// Corpus statistics printed by `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub site: String,
    pub questions: usize,
    pub tagged_questions: usize,
    pub evaluable_questions: usize,
    pub answers: usize,
    pub answerers: usize,
    pub tags: usize,
    pub evaluable_tags: usize,
    pub first_question: Option<String>,
    pub last_question: Option<String>,
    pub parse: ParseStats,
    pub assembly: CorpusStats,
}

impl CorpusSummary {
    pub fn new(corpus: &PostCorpus, parse: ParseStats, assembly: CorpusStats) -> Self {
        let tags: BTreeSet<&str> = corpus
            .questions
            .values()
            .flat_map(|q| q.tags.iter().map(String::as_str))
            .collect();
        let evaluable: Vec<_> = corpus.evaluable_questions().collect();
        let evaluable_tags: BTreeSet<&str> = evaluable
            .iter()
            .flat_map(|q| q.tags.iter().map(String::as_str))
            .collect();
        let answerers: BTreeSet<u64> = corpus.answers.values().map(|a| a.owner_user_id).collect();
        let dates = || corpus.questions.values().map(|q| q.creation_date);
        Self {
            site: corpus.site_name.clone(),
            questions: corpus.questions.len(),
            tagged_questions: corpus.questions.values().filter(|q| q.has_tags()).count(),
            evaluable_questions: evaluable.len(),
            answers: corpus.answers.len(),
            answerers: answerers.len(),
            tags: tags.len(),
            evaluable_tags: evaluable_tags.len(),
            first_question: dates().min().map(format_timestamp),
            last_question: dates().max().map(format_timestamp),
            parse,
            assembly,
        }
    }

    pub fn to_text(&self) -> String {
        let range = match (&self.first_question, &self.last_question) {
            (Some(a), Some(b)) => format!("{} .. {}", &a[..7], &b[..7]),
            _ => "-".into(),
        };
        format!(
            "site                 {}\n\
             questions            {} ({} tagged)\n\
             evaluable questions  {} (tagged, accepted answer with known owner)\n\
             answers              {} by {} answerers\n\
             tags                 {} ({} on evaluable questions)\n\
             time range           {}\n\
             rows                 {} read, {} kept, {} other post types, {} rejected\n\
             dropped              {} orphan answers, {} ownerless answers, {} dangling accepted answers\n",
            self.site,
            self.questions,
            self.tagged_questions,
            self.evaluable_questions,
            self.answers,
            self.answerers,
            self.tags,
            self.evaluable_tags,
            range,
            self.parse.rows,
            self.parse.emitted,
            self.parse.skipped_post_type,
            self.parse.rejected(),
            self.assembly.dropped_orphan_answers,
            self.assembly.dropped_ownerless_answers,
            self.assembly.dangling_accepted_answers,
        )
    }
}

/// Streams a dump into a corpus, keeping posts created before `until`.
pub fn ingest_dump(path: &Path, site: &str, until: Option<Timestamp>) -> Result<(PostCorpus, CorpusSummary), CliError> {
    let mut reader = PostReader::new(open(path)?);
    let mut posts = Vec::new();
    for post in reader.by_ref() {
        let post = post.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        if until.is_none_or(|u| post.creation_date < u) {
            posts.push(post);
        }
    }
    let parse_stats = reader.stats().clone();
    let (corpus, stats) = build_corpus(site, posts);
    let summary = CorpusSummary::new(&corpus, parse_stats, stats);
    Ok((corpus, summary))
}

fn cmd_ingest(args: IngestArgs, config: &mut ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if args.dump.is_some() {
        config.dump = args.dump;
    }
    let dump = require(&config.dump, "dump")?.clone();
    let site = args
        .site
        .or(config.site.clone())
        .or_else(|| {
            dump.canonicalize().ok().and_then(|p| {
                p.parent()
                    .and_then(|d| d.file_name())
                    .map(|n| n.to_string_lossy().into_owned())
            })
        })
        .unwrap_or_else(|| "site".into());
    let until = args.until.as_deref().map(parse_time).transpose()?;
    let (corpus, summary) = ingest_dump(&dump, &site, until)?;
    let mut file = create(&args.out)?;
    corpus
        .write_jsonl(&mut file)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.out.display())))?;
    write_out(out, &summary.to_text())
}

fn read_corpus(path: &Path) -> Result<PostCorpus, CliError> {
    PostCorpus::read_jsonl(open(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn read_manifest(path: &Path) -> Result<SplitManifest, CliError> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn parse_ratios(s: &str) -> Result<SplitRatios, CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--ratios expects three numbers, got `{s}`")))?;
    match parts[..] {
        [a, b, c] => Ok(SplitRatios::new(a, b, c)?),
        _ => Err(CliError::Usage(format!("--ratios expects three numbers, got `{s}`"))),
    }
}

fn cmd_split(args: SplitArgs, config: &mut ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if args.corpus.is_some() {
        config.corpus = args.corpus;
    }
    if let Some(m) = args.min_answers {
        config.eval.min_answers = m;
    }
    let ratios = parse_ratios(&args.ratios)?;
    let corpus = read_corpus(require(&config.corpus, "corpus")?)?;
    let split = chronological_split(&corpus, ratios)?;
    let candidates = select_candidates(&split, &corpus, config.eval.min_answers)?;
    let manifest = SplitManifest::new(&corpus.site_name, split, config.eval.min_answers, &candidates);
    let mut file = create(&args.out)?;
    serde_json::to_writer_pretty(&mut file, &manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    file.write_all(b"\n").map_err(CliError::io(&args.out))?;
    let s = &manifest.split;
    write_out(
        out,
        &format!(
            "{}: {} train / {} validation / {} test questions, {} candidates (min answers {}), fingerprint {}\n",
            manifest.site_name,
            s.train.len(),
            s.validation.len(),
            s.test.len(),
            manifest.candidates.len(),
            manifest.min_answers,
            fingerprint(&[&manifest]),
        ),
    )
}

/// Corpus, manifest and training view for the commands that score.
struct Loaded {
    corpus: PostCorpus,
    manifest: SplitManifest,
    view: TrainingView,
}

fn apply_tuning(t: &TuningArgs, config: &mut ExperimentConfig) -> Result<(), CliError> {
    if let Some(days) = t.window_days {
        if days <= 0 {
            return Err(CliError::Usage("--window-days must be positive".into()));
        }
        config.eval.window_length = days * SECONDS_PER_DAY;
    }
    if let Some(m) = t.min_answers {
        config.eval.min_answers = m;
    }
    if let Some(d) = t.degree_mode {
        config.eval.degree_mode = d;
    }
    if let Some(s) = t.seed {
        config.eval.seed = s;
    }
    if config.eval.window_length <= 0 {
        return Err(CliError::Usage("window length must be positive".into()));
    }
    Ok(())
}

fn load(input: &InputArgs, config: &mut ExperimentConfig) -> Result<Loaded, CliError> {
    if input.corpus.is_some() {
        config.corpus = input.corpus.clone();
    }
    if input.manifest.is_some() {
        config.manifest = input.manifest.clone();
    }
    let corpus = read_corpus(require(&config.corpus, "corpus")?)?;
    let manifest = read_manifest(require(&config.manifest, "manifest")?)?;
    manifest.validate(&corpus)?;
    let candidates: BTreeSet<u64> = if manifest.min_answers == config.eval.min_answers {
        manifest.candidates.iter().copied().collect()
    } else {
        select_candidates(&manifest.split, &corpus, config.eval.min_answers)?
    };
    let view = TrainingView::new(&manifest.split, &corpus, &candidates, config.eval.min_answers);
    Ok(Loaded { corpus, manifest, view })
}

fn first_test_time(loaded: &Loaded) -> Result<Timestamp, CliError> {
    loaded
        .manifest
        .split
        .test
        .iter()
        .filter_map(|id| loaded.corpus.questions.get(id))
        .map(|q| q.creation_date)
        .min()
        .ok_or_else(|| CliError::Usage("manifest has no test questions".into()))
}

fn cmd_build(args: BuildArgs, config: &mut ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    apply_tuning(&args.tuning, config)?;
    let loaded = load(&args.input, config)?;
    let t_q = match &args.at {
        Some(s) => parse_time(s)?,
        None => first_test_time(&loaded)?,
    };
    let view = &loaded.view;
    let windowed = build_windowed_activity(
        view.records_before(t_q),
        (view.users.len(), view.tags.len()),
        config.eval.window_length,
        t_q,
    )
    .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut file = create(&args.out)?;
    write_snapshot(&windowed, &mut file).map_err(|e| CliError::Internal(format!("{}: {e}", args.out.display())))?;
    write_out(
        out,
        &format!(
            "snapshot at {}: {} users x {} tags, {} windows, {} records\n",
            format_timestamp(t_q),
            windowed.rows,
            windowed.cols,
            windowed.window_count(),
            view.records_before(t_q).len()
        ),
    )
}

fn cmd_recommend(args: RecommendArgs, config: &mut ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    apply_tuning(&args.tuning, config)?;
    let loaded = load(&args.input, config)?;
    let view = &loaded.view;

    let (tags, t_q, ground_truth) = match args.question {
        Some(id) => {
            let q = loaded
                .corpus
                .questions
                .get(&id)
                .ok_or_else(|| CliError::NotFound(format!("question {id} is not in the corpus")))?;
            (q.tags.clone(), q.creation_date, loaded.corpus.accepted_answerer(q))
        }
        None => {
            if args.tags.is_empty() {
                return Err(CliError::Usage("give --question or --tags with --at".into()));
            }
            let at = args
                .at
                .as_deref()
                .ok_or_else(|| CliError::Usage("--tags requires --at".into()))?;
            let tags: Vec<String> = args.tags.iter().map(|t| t.trim().to_lowercase()).collect();
            (tags, parse_time(at)?, None)
        }
    };

    let windowed = match &args.snapshot {
        Some(path) => {
            let w = read_snapshot(open(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            if w.dims() != (view.users.len(), view.tags.len()) {
                return Err(CliError::Usage(format!(
                    "snapshot is {}x{} but the manifest gives {}x{}",
                    w.rows,
                    w.cols,
                    view.users.len(),
                    view.tags.len()
                )));
            }
            w
        }
        None => build_windowed_activity(
            view.records_before(t_q),
            (view.users.len(), view.tags.len()),
            config.eval.window_length,
            t_q,
        )
        .map_err(|e| CliError::Internal(e.to_string()))?,
    };
    let query_time = windowed.query_time;
    let s = temporal_activity(&windowed, query_time).map_err(|e| CliError::Internal(e.to_string()))?;
    let graph = BipartiteGraph::from_temporal(&s, config.eval.degree_mode);
    let (ranking, known) = recommend_with_graph(view, &graph, &tags)?;

    let mut text = format!("tags {} at {}\n", tags.join(","), format_timestamp(query_time));
    if !known {
        eprintln!("warning: none of the tags occur in training data; ranking by user id only");
    }
    for (pos, entry) in ranking.top(args.top).iter().enumerate() {
        text.push_str(&format!(
            "{:>4}  user {:<10} {:.6}\n",
            pos + 1,
            entry.user_id,
            entry.score
        ));
    }
    if let Some(user) = ground_truth {
        match ranking.rank_of(user) {
            Some(r) => text.push_str(&format!("accepted answerer {user} ranked {r} of {}\n", ranking.len())),
            None => text.push_str(&format!("accepted answerer {user} is not a candidate\n")),
        }
    }
    write_out(out, &text)
}

fn cmd_evaluate(args: EvaluateArgs, config: &mut ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    apply_tuning(&args.tuning, config)?;
    if let Some(m) = args.method {
        config.method = m;
    }
    if args.cold_start {
        config.eval.min_answers = 1;
    }
    if let Some(c) = args.cold_threshold {
        config.eval.cold_threshold = c;
    }
    if let Some(t) = args.score_trials {
        config.eval.score_trials = t;
    }
    if let Some(e) = args.mf_epochs {
        config.eval.mf.epochs = e;
    }
    if args.out_dir.is_some() {
        config.out_dir = args.out_dir;
    }
    let methods = Method::parse_list(&config.method)?;
    let loaded = load(&args.input, config)?;
    let site = loaded.corpus.site_name.clone();

    for method in methods {
        let mut report = run_experiment(
            &loaded.corpus,
            &loaded.manifest.split,
            &loaded.view,
            method,
            &config.eval,
        )?;
        report.fingerprint = fingerprint(&[&ResultInputs {
            site: &site,
            method,
            eval: &config.eval,
            manifest: &loaded.manifest,
        }]);
        write_out(out, &report.to_text())?;
        write_out(out, "\n")?;
        if let Some(dir) = &config.out_dir {
            write_report_files(&report, dir, args.cold_start)?;
        }
    }
    Ok(())
}

/// Writes `<site>.<method>[.cold].{json,txt,csv}` under `dir`.
pub fn write_report_files(report: &EvalReport, dir: &Path, cold: bool) -> Result<(), CliError> {
    let stem = format!("{}.{}{}", report.site, report.method, if cold { ".cold" } else { "" });
    let json = dir.join(format!("{stem}.json"));
    let mut f = create(&json)?;
    f.write_all(report.to_json().as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .and_then(|_| f.flush())
        .map_err(CliError::io(&json))?;
    let txt = dir.join(format!("{stem}.txt"));
    let mut f = create(&txt)?;
    f.write_all(report.to_text().as_bytes())
        .and_then(|_| f.flush())
        .map_err(CliError::io(&txt))?;
    let csv = dir.join(format!("{stem}.csv"));
    let mut f = create(&csv)?;
    report
        .write_csv(&mut f)
        .and_then(|_| f.flush())
        .map_err(CliError::io(&csv))?;
    Ok(())
}
