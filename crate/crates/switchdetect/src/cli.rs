//! Batch subcommands behind the `switchdetect` binary. Everything here is a
//! thin file-in/file-out wrapper around the library; the binary itself only
//! maps errors to exit codes.
//!
//! Exit codes: 0 ok, 2 usage, 3 parse/format trouble in a data file, 4
//! configuration (including missing input paths), 5 numeric failure.

use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{PipelineConfig, PipelineConfigError, CONFIG_PATH_ENV, DEFAULT_CONFIG_PATH};
use crate::eval::{
    auc, dataset_stats, in_validation, rank_fuse, EvalError, RankedPrediction,
};
use crate::features::{
    build_corpus_stats, load_corpus_stats, save_corpus_stats, ConfigError, ExtractorConfig,
    FamilySelection, FamilyTag, StatsFormatError,
};
use crate::logs::{
    assemble_sessions, format_record, open_log, session_label, LabelMode, LogError, LogReader,
    Session, SwitchType,
};
use crate::model::{
    deserialize_model, serialize_model, ModelError, ModelFormatError, ModelState,
};
use crate::quadrature::QuadratureError;
use crate::synth::{generate, write_log, write_truth, SynthError};
use crate::task::{
    feature_ablation_report, predict_task, train, TaskKind, TaskSpec, TrainedTask,
};

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments (exit 2).
    Usage(String),
    /// A data file could not be parsed or written (exit 3).
    Data(String),
    /// Invalid configuration or missing input path (exit 4).
    Config(String),
    /// A numeric computation failed or is undefined (exit 5).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Config(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m)
            | CliError::Data(m)
            | CliError::Config(m)
            | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<LogError> for CliError {
    fn from(e: LogError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelFormatError> for CliError {
    fn from(e: ModelFormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StatsFormatError> for CliError {
    fn from(e: StatsFormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PipelineConfigError> for CliError {
    fn from(e: PipelineConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<QuadratureError> for CliError {
    fn from(e: QuadratureError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::DegenerateLabels => CliError::Numeric(e.to_string()),
            EvalError::BadModulus(_) | EvalError::BadResidue { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<crate::task::TaskError> for CliError {
    fn from(e: crate::task::TaskError) -> Self {
        match e {
            crate::task::TaskError::Eval(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>, CliError> {
    open_log(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Config(format!("input path does not exist: {}", path.display()))
        } else {
            CliError::Data(format!("cannot open {}: {e}", path.display()))
        }
    })
}

fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn write_failed(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("write to {} failed: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Command-line grammar
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "switchdetect",
    version,
    about = "Search-engine switching detection: log parsing, online probit training, ranking"
)]
pub struct Cli {
    /// Config file (TOML); defaults to ./switchdetect.toml when present.
    /// The SWITCHDETECT_CONFIG environment variable overrides the default.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TaskArg {
    Binary,
    #[value(name = "3cat")]
    ThreeCategory,
    #[value(name = "4cat")]
    FourCategory,
}

impl From<TaskArg> for TaskKind {
    fn from(value: TaskArg) -> Self {
        match value {
            TaskArg::Binary => TaskKind::Binary,
            TaskArg::ThreeCategory => TaskKind::ThreeCategory,
            TaskArg::FourCategory => TaskKind::FourCategory,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print session/user/query/URL counts for a log
    Stats(StatsArgs),
    /// Partition a log by session-id residue into training and validation
    Split(SplitArgs),
    /// Build corpus statistics (user switch history, id frequencies)
    BuildStats(BuildStatsArgs),
    /// Train the binary task or a one-vs-rest multi-category task
    Train(TrainArgs),
    /// Score sessions with previously trained models
    Predict(PredictArgs),
    /// Fuse three prediction files by harmonic-mean rank into a submission
    Ensemble(EnsembleArgs),
    /// Compute AUC of a prediction or submission file against labels
    Evaluate(EvaluateArgs),
    /// Measure whether a candidate feature family earns its keep
    Ablate(AblateArgs),
    /// Generate a synthetic log with known ground truth
    GenSynthetic(GenSyntheticArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Input log (.gz accepted)
    #[arg(long)]
    pub log: PathBuf,
    /// Skip malformed lines instead of failing
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub training_out: PathBuf,
    #[arg(long)]
    pub validation_out: PathBuf,
    /// Overrides [split].modulus
    #[arg(long)]
    pub modulus: Option<u64>,
    /// Overrides [split].residue
    #[arg(long)]
    pub residue: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BuildStatsArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long)]
    pub log: PathBuf,
    /// Corpus stats file from `build-stats`
    #[arg(long)]
    pub stats: PathBuf,
    /// Prefix for model files (<prefix>.binary.model or <prefix>.<T>.model)
    #[arg(long)]
    pub model_out: PathBuf,
    /// Overrides [model].beta
    #[arg(long)]
    pub beta: Option<f64>,
    /// Training passes over the stream
    #[arg(long)]
    pub epochs: Option<u32>,
    /// Let switch records contribute features during training
    #[arg(long)]
    pub include_switch_events: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub stats: PathBuf,
    /// Model file prefix used at training time
    #[arg(long)]
    pub models: PathBuf,
    /// Output predictions TSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Exactly three prediction files over the same session set
    #[arg(num_args = 3, required = true)]
    pub predictions: Vec<PathBuf>,
    /// Output submission TSV (session_id, fused score)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Prediction or submission file
    #[arg(long)]
    pub predictions: PathBuf,
    /// Labelled log the sessions came from
    #[arg(long)]
    pub log: PathBuf,
    /// Label scheme: binary or one-vs-rest target (B, P, H)
    #[arg(long, default_value = "binary")]
    pub label_mode: String,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub stats: PathBuf,
    /// Candidate feature family (canonical name, e.g. MRR)
    #[arg(long)]
    pub candidate: String,
    /// Comma-separated baseline families
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "UserID,QueryID,URLID,QueryID_Time"
    )]
    pub baseline: Vec<String>,
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenSyntheticArgs {
    /// Output log path
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar path (default <out>.truth.tsv)
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sessions: Option<u64>,
    #[arg(long)]
    pub users: Option<u64>,
    #[arg(long)]
    pub queries: Option<u64>,
    #[arg(long)]
    pub urls: Option<u64>,
    /// Target fraction of switching sessions
    #[arg(long)]
    pub rate: Option<f64>,
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses `args` and runs the selected subcommand. Used by `main` and the
/// integration tests alike.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        // help/version are not errors; print and succeed
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            print!("{e}");
            CliError::Usage(String::new())
        } else {
            CliError::Usage(e.to_string())
        }
    });
    let cli = match cli {
        Ok(cli) => cli,
        Err(CliError::Usage(msg)) if msg.is_empty() => return Ok(()),
        Err(e) => return Err(e),
    };

    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Stats(args) => cmd_stats(&args),
        Command::Split(args) => cmd_split(&config, &args),
        Command::BuildStats(args) => cmd_build_stats(&args),
        Command::Train(args) => cmd_train(&config, &args),
        Command::Predict(args) => cmd_predict(&config, &args),
        Command::Ensemble(args) => cmd_ensemble(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Ablate(args) => cmd_ablate(&config, &args),
        Command::GenSynthetic(args) => cmd_gen_synthetic(&config, &args),
    }
}

fn load_config(flag: Option<&Path>) -> Result<PipelineConfig, CliError> {
    if let Some(path) = flag {
        return Ok(PipelineConfig::load(path)?);
    }
    let env_path = std::env::var_os(CONFIG_PATH_ENV).map(PathBuf::from);
    let path = env_path.unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG_PATH));
    if path.exists() {
        Ok(PipelineConfig::load(&path)?)
    } else {
        Ok(PipelineConfig::default())
    }
}

fn read_all_sessions(path: &Path, permissive: bool) -> Result<Vec<Session>, CliError> {
    let reader = LogReader::new(open_input(path)?).permissive(permissive);
    let sessions: Result<Vec<Session>, LogError> = assemble_sessions(reader).collect();
    Ok(sessions?)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let sessions = read_all_sessions(&args.log, args.permissive)?;
    let stats = dataset_stats(&sessions);
    println!("sessions\t{}", stats.sessions);
    println!("users\t{}", stats.users);
    println!("queries\t{}", stats.queries);
    println!("urls\t{}", stats.urls);
    Ok(())
}

fn cmd_split(config: &PipelineConfig, args: &SplitArgs) -> Result<(), CliError> {
    let modulus = args.modulus.unwrap_or(config.split.modulus);
    let residue = args.residue.unwrap_or(config.split.residue);
    in_validation(0, modulus, residue)?; // validate parameters up front

    let reader = LogReader::new(open_input(&args.log)?);
    let mut training = create_output(&args.training_out)?;
    let mut validation = create_output(&args.validation_out)?;
    let (mut n_train, mut n_val) = (0u64, 0u64);
    for record in reader {
        let record = record?;
        let is_validation = record.session_id() % modulus == residue;
        let out: &mut BufWriter<File> = if is_validation {
            &mut validation
        } else {
            &mut training
        };
        writeln!(out, "{}", format_record(&record))
            .map_err(|e| write_failed(&args.training_out, e))?;
        if matches!(record, crate::logs::LogRecord::Metadata(_)) {
            if is_validation {
                n_val += 1;
            } else {
                n_train += 1;
            }
        }
    }
    training
        .flush()
        .map_err(|e| write_failed(&args.training_out, e))?;
    validation
        .flush()
        .map_err(|e| write_failed(&args.validation_out, e))?;
    println!("training_sessions\t{n_train}");
    println!("validation_sessions\t{n_val}");
    Ok(())
}

fn cmd_build_stats(args: &BuildStatsArgs) -> Result<(), CliError> {
    let sessions = read_all_sessions(&args.log, args.permissive)?;
    let stats = build_corpus_stats(&sessions);
    let mut out = create_output(&args.out)?;
    save_corpus_stats(&stats, &mut out)?;
    out.flush().map_err(|e| write_failed(&args.out, e))?;
    println!(
        "users\t{}\nqueries\t{}\nurls\t{}",
        stats.user_switch_counts.len(),
        stats.query_frequency.len(),
        stats.url_frequency.len()
    );
    Ok(())
}

fn model_path(prefix: &Path, mode: LabelMode) -> PathBuf {
    let suffix = match mode {
        LabelMode::Binary => "binary".to_string(),
        LabelMode::OneVsRest(st) => st.to_string(),
    };
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".{suffix}.model"));
    prefix.with_file_name(name)
}

fn task_spec(config: &PipelineConfig, kind: TaskKind) -> Result<TaskSpec, CliError> {
    Ok(TaskSpec {
        kind,
        model: config.model_config()?,
        extractor: ExtractorConfig {
            top_k_urls: config.features.top_k_urls,
            include_switch_events: config.features.include_switch_events,
            selection: FamilySelection::all(),
        },
        epochs: 1,
    })
}

fn cmd_train(config: &PipelineConfig, args: &TrainArgs) -> Result<(), CliError> {
    config.features.buckets.validate()?;
    let mut spec = task_spec(config, args.task.into())?;
    if let Some(beta) = args.beta {
        spec.model = crate::model::ModelConfig::new(
            beta,
            config.model.prior_mean,
            config.model.prior_variance,
        )?;
    }
    if let Some(epochs) = args.epochs {
        spec.epochs = epochs;
    }
    spec.extractor.include_switch_events |= args.include_switch_events;

    let sessions = read_all_sessions(&args.log, false)?;
    let stats = load_corpus_stats(open_input(&args.stats)?)?;
    let trained = train(&spec, &sessions, &stats, &config.features.buckets)?;
    for (mode, model) in &trained.models {
        let path = model_path(&args.model_out, *mode);
        let mut out = create_output(&path)?;
        serialize_model(model, &mut out)?;
        out.flush().map_err(|e| write_failed(&path, e))?;
        println!(
            "{}\tobservations={}\tfeatures={}\tvariance_clamps={}",
            path.display(),
            model.observations_seen(),
            model.tracked_features(),
            model.variance_clamps()
        );
    }
    Ok(())
}

fn load_trained(prefix: &Path, kind: TaskKind) -> Result<TrainedTask, CliError> {
    let mut models: Vec<(LabelMode, ModelState)> = Vec::new();
    for mode in kind.label_modes() {
        let path = model_path(prefix, mode);
        let reader = open_input(&path)?;
        models.push((mode, deserialize_model(reader)?));
    }
    Ok(TrainedTask { kind, models })
}

fn cmd_predict(config: &PipelineConfig, args: &PredictArgs) -> Result<(), CliError> {
    let kind: TaskKind = args.task.into();
    let spec = task_spec(config, kind)?;
    let sessions = read_all_sessions(&args.log, false)?;
    let stats = load_corpus_stats(open_input(&args.stats)?)?;
    let trained = load_trained(&args.models, kind)?;
    let predictions = predict_task(&spec, &trained, &sessions, &stats, &config.features.buckets);

    let mut out = create_output(&args.out)?;
    let types: Vec<SwitchType> = kind
        .label_modes()
        .into_iter()
        .filter_map(|m| match m {
            LabelMode::OneVsRest(st) => Some(st),
            LabelMode::Binary => None,
        })
        .collect();
    let mut header = String::from("session_id\tprobability");
    for st in &types {
        header.push('\t');
        header.push_str(st.as_str());
    }
    writeln!(out, "{header}").map_err(|e| write_failed(&args.out, e))?;
    for p in &predictions {
        let mut line = format!("{}\t{}", p.session_id, p.probability);
        if let Some(per_type) = &p.per_type {
            for st in &types {
                line.push('\t');
                line.push_str(&per_type[st].to_string());
            }
        }
        writeln!(out, "{line}").map_err(|e| write_failed(&args.out, e))?;
    }
    out.flush().map_err(|e| write_failed(&args.out, e))?;
    println!("predictions\t{}", predictions.len());
    Ok(())
}

/// Reads (session_id, score) pairs from a prediction or submission TSV,
/// skipping a `session_id`-prefixed header when present. Extra per-type
/// columns are ignored.
pub fn read_scores(path: &Path) -> Result<Vec<(u64, f64)>, CliError> {
    let reader = open_input(path)?;
    let mut scores = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if i == 0 && line.starts_with("session_id") {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (id, score) = match (fields.next(), fields.next()) {
            (Some(id), Some(score)) => (id, score),
            _ => {
                return Err(CliError::Data(format!(
                    "{} line {}: expected session_id<TAB>score",
                    path.display(),
                    i + 1
                )))
            }
        };
        let id: u64 = id.parse().map_err(|_| {
            CliError::Data(format!(
                "{} line {}: bad session id {id:?}",
                path.display(),
                i + 1
            ))
        })?;
        let score: f64 = score.parse().map_err(|_| {
            CliError::Data(format!(
                "{} line {}: bad score {score:?}",
                path.display(),
                i + 1
            ))
        })?;
        scores.push((id, score));
    }
    Ok(scores)
}

fn cmd_ensemble(args: &EnsembleArgs) -> Result<(), CliError> {
    let mut rankings = Vec::with_capacity(3);
    for path in &args.predictions {
        rankings.push(RankedPrediction::from_scores(read_scores(path)?)?);
    }
    let rankings: [RankedPrediction; 3] = rankings
        .try_into()
        .map_err(|_| CliError::Usage("ensemble needs exactly three prediction files".into()))?;
    let fused = rank_fuse(&rankings)?;
    let mut out = create_output(&args.out)?;
    for (session_id, score) in fused.by_rank() {
        writeln!(out, "{session_id}\t{score}").map_err(|e| write_failed(&args.out, e))?;
    }
    out.flush().map_err(|e| write_failed(&args.out, e))?;
    println!("fused_sessions\t{}", fused.len());
    Ok(())
}

fn parse_label_mode(s: &str) -> Result<LabelMode, CliError> {
    match s {
        "binary" => Ok(LabelMode::Binary),
        "B" => Ok(LabelMode::OneVsRest(SwitchType::B)),
        "P" => Ok(LabelMode::OneVsRest(SwitchType::P)),
        "H" => Ok(LabelMode::OneVsRest(SwitchType::H)),
        other => Err(CliError::Usage(format!(
            "unknown label mode {other:?}; expected binary, B, P or H"
        ))),
    }
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let mode = parse_label_mode(&args.label_mode)?;
    let scores = read_scores(&args.predictions)?;
    let sessions = read_all_sessions(&args.log, false)?;
    let labels: Vec<_> = sessions
        .iter()
        .map(|s| (s.session_id, session_label(s, mode)))
        .collect();
    let value = auc(&scores, &labels)?;
    println!("AUC\t{value}");
    Ok(())
}

fn cmd_ablate(config: &PipelineConfig, args: &AblateArgs) -> Result<(), CliError> {
    let candidate: FamilyTag = args
        .candidate
        .parse()
        .map_err(|e: String| CliError::Usage(e))?;
    let mut baseline = FamilySelection::none();
    for name in &args.baseline {
        let tag: FamilyTag = name.parse().map_err(|e: String| CliError::Usage(e))?;
        baseline = baseline.with(tag);
    }
    let mut model = config.model_config()?;
    if let Some(beta) = args.beta {
        model = crate::model::ModelConfig::new(beta, model.prior_mean, model.prior_variance)?;
    }
    let training = read_all_sessions(&args.log, false)?;
    let validation = read_all_sessions(&args.validation, false)?;
    let stats = load_corpus_stats(open_input(&args.stats)?)?;
    let report = feature_ablation_report(
        baseline,
        candidate,
        model,
        &training,
        &validation,
        &stats,
        &config.features.buckets,
    )?;
    println!("candidate\t{}", report.candidate);
    println!("auc_without\t{}", report.auc_without);
    println!("auc_with\t{}", report.auc_with);
    println!("delta\t{}", report.delta);
    println!("decision\t{}", if report.keep { "keep" } else { "discard" });
    Ok(())
}

fn cmd_gen_synthetic(config: &PipelineConfig, args: &GenSyntheticArgs) -> Result<(), CliError> {
    let mut params = config.generator_params();
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if let Some(sessions) = args.sessions {
        params.n_sessions = sessions;
    }
    if let Some(users) = args.users {
        params.n_users = users;
    }
    if let Some(queries) = args.queries {
        params.n_queries = queries;
    }
    if let Some(urls) = args.urls {
        params.n_urls = urls;
    }
    if let Some(rate) = args.rate {
        params.base_switch_rate = rate;
    }
    let log = generate(&params)?;
    let mut out = create_output(&args.out)?;
    write_log(&log.records, &mut out).map_err(|e| write_failed(&args.out, e))?;
    out.flush().map_err(|e| write_failed(&args.out, e))?;

    let truth_path = args.truth_out.clone().unwrap_or_else(|| {
        let mut name = args.out.file_name().unwrap_or_default().to_os_string();
        name.push(".truth.tsv");
        args.out.with_file_name(name)
    });
    let mut truth_out = create_output(&truth_path)?;
    write_truth(&log.truth, &mut truth_out).map_err(|e| write_failed(&truth_path, e))?;
    truth_out.flush().map_err(|e| write_failed(&truth_path, e))?;

    println!("sessions\t{}", log.truth.sessions.len());
    println!("positive_rate\t{}", log.truth.positive_rate());
    println!("log\t{}", args.out.display());
    println!("truth\t{}", truth_path.display());
    Ok(())
}
