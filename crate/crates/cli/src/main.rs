//! `lsketch`: check, run, render and evaluate logic sketches.
//!
//! Exit codes: 0 success, 1 diagnostics or validation failure, 2 I/O or
//! transport failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use logic_sketch::condition::JaccardScorer;
use logic_sketch::error::{DatasetError, InferenceError, PromptError, StatsError};
use logic_sketch::eval::{
    build_report, format_mcnemar, load_dataset, mcnemar, BootstrapConfig, DatasetItem,
    PredictionSet,
};
use logic_sketch::inference::{
    classify_corpus, sketch_oracle_backend, Backend, BackendScorer, Classifier, ClassifyOptions,
    DecodingConfig, HttpBackend, StubBackend,
};
use logic_sketch::prompt::{render, Strategy, TaskInstance};
use logic_sketch::sketch::{parse_sketch, run_corpus, CorpusOptions, SketchDocument, TaskKind};
use logic_sketch::SemanticScorer;

#[derive(Parser)]
#[command(
    name = "lsketch",
    version,
    about = "Author, run and evaluate logic sketches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and statically check a sketch; diagnostics go to stderr.
    Check {
        #[arg(long)]
        sketch: PathBuf,
    },
    /// Execute a sketch over a dataset and write predictions with traces.
    Run(RunArgs),
    /// Print the prompt a strategy produces.
    Render(RenderArgs),
    /// Send rendered prompts through a backend and write predictions.
    Classify(ClassifyArgs),
    /// Metrics with bootstrap intervals for one predictions file.
    Eval(EvalArgs),
    /// Paired McNemar test between two predictions files.
    Mcnemar(McnemarArgs),
    /// Metrics for several runs plus every pairwise McNemar test.
    Report(ReportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// JSONL dataset with gold labels.
    #[arg(long)]
    data: PathBuf,
    /// 1 = sentence task, 2 = drug/effect relation task.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    task: Option<u8>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    sketch: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Output predictions file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = ScorerKind::Jaccard)]
    scorer: ScorerKind,
    /// Omit execution traces from the output.
    #[arg(long)]
    no_trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerKind {
    /// Token-set overlap.
    Jaccard,
    /// Ask the HTTP backend for similarity scores.
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Lsp,
    ZeroShot,
    Brief,
    Cot,
    Meta,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Lsp => Strategy::Lsp,
            StrategyArg::ZeroShot => Strategy::ZeroShot,
            StrategyArg::Brief => Strategy::Brief,
            StrategyArg::Cot => Strategy::Cot,
            StrategyArg::Meta => Strategy::MetaCompiler,
        }
    }
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// Sketch to compile; required for `lsp`.
    #[arg(long)]
    sketch: Option<PathBuf>,
    /// Sentence to classify, or the prompt to convert for `meta`.
    #[arg(long, conflicts_with = "data")]
    text: Option<String>,
    #[arg(long, requires = "effect")]
    drug: Option<String>,
    #[arg(long, requires = "drug")]
    effect: Option<String>,
    /// Render every item of a dataset as JSONL instead.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    task: Option<u8>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    /// JSON over HTTP; configured through LSKETCH_ENDPOINT, LSKETCH_MODEL and LSKETCH_API_KEY.
    Http,
    /// Runs the sketch on the instance embedded in each prompt.
    Oracle,
    /// Returns `--stub-reply` for every prompt.
    Stub,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    sketch: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: BackendKind,
    #[arg(long, value_enum, default_value_t = StrategyArg::Lsp)]
    strategy: StrategyArg,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Requests in flight at once.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    /// Store each raw completion next to its prediction.
    #[arg(long)]
    keep_raw: bool,
    /// Refuse any decoding configuration other than greedy decoding.
    #[arg(long)]
    strict_determinism: bool,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 256)]
    max_tokens: u32,
    /// Sampling seed forwarded to the backend.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = r#"{"label": 0}"#)]
    stub_reply: String,
}

#[derive(Args)]
struct BootstrapArgs {
    /// Seed for bootstrap resampling (required).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

impl BootstrapArgs {
    fn config(&self) -> Result<BootstrapConfig, Failure> {
        let seed = self
            .seed
            .ok_or_else(|| Failure::invalid("--seed is required for bootstrap intervals"))?;
        Ok(BootstrapConfig {
            resamples: self.resamples,
            level: self.level,
            seed,
        })
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Predictions JSONL.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[command(flatten)]
    bootstrap: BootstrapArgs,
    /// Print JSON instead of the text table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct McnemarArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    data: DataArgs,
    /// `model/method=path`, or just a path (method taken from the file name).
    #[arg(long = "run", required = true)]
    runs: Vec<String>,
    #[command(flatten)]
    bootstrap: BootstrapArgs,
    /// Write the JSON report here; the table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(_) => Failure::io(e.to_string()),
            DatasetError::Schema { .. } => Failure::invalid(e.to_string()),
        }
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<PromptError> for Failure {
    fn from(e: PromptError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<InferenceError> for Failure {
    fn from(e: InferenceError) -> Self {
        if e.is_transport() {
            Failure::io(e.to_string())
        } else {
            Failure::invalid(e.to_string())
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn load_sketch(path: &Path) -> Result<SketchDocument, Failure> {
    let source = read_text(path)?;
    parse_sketch(&source).map_err(|diags| {
        let lines: Vec<String> = diags
            .0
            .iter()
            .map(|d| format!("{}:{d}", path.display()))
            .collect();
        Failure::invalid(lines.join("\n"))
    })
}

fn task_kind(flag: Option<u8>, sketch: Option<&SketchDocument>) -> Result<TaskKind, Failure> {
    let from_flag = flag.and_then(TaskKind::from_number);
    match (from_flag, sketch) {
        (Some(t), Some(doc)) if t != doc.task => Err(Failure::invalid(format!(
            "--task {} does not match sketch {}, which is a task {} sketch",
            t.number(),
            doc.name,
            doc.task.number()
        ))),
        (Some(t), _) => Ok(t),
        (None, Some(doc)) => Ok(doc.task),
        (None, None) => Err(Failure::invalid("--task is required")),
    }
}

fn load_gold(
    args: &DataArgs,
    sketch: Option<&SketchDocument>,
) -> Result<Vec<DatasetItem>, Failure> {
    let task = task_kind(args.task, sketch)?;
    load_dataset(&args.data, task).map_err(|e| match e {
        DatasetError::Io(io) => Failure::io(format!("{}: {io}", args.data.display())),
        schema => Failure::invalid(format!("{}: {schema}", args.data.display())),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::io(format!("stdout: {e}")))
        }
    }
}

fn read_predictions(
    path: &Path,
    method: Option<&str>,
    model: Option<&str>,
) -> Result<PredictionSet, Failure> {
    let stem = path
        .file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    let method = method.map_or(stem, str::to_string);
    let model = model.unwrap_or("-").to_string();
    PredictionSet::read_jsonl(path, method, model).map_err(|e| match e {
        DatasetError::Io(io) => Failure::io(format!("{}: {io}", path.display())),
        schema => Failure::invalid(format!("{}: {schema}", path.display())),
    })
}

fn http_backend() -> Result<HttpBackend, Failure> {
    HttpBackend::from_env().map_err(Failure::from)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let doc = load_sketch(&args.sketch)?;
    let items = load_gold(&args.data, Some(&doc))?;
    let options = CorpusOptions {
        jobs: args.jobs,
        keep_trace: !args.no_trace,
    };
    let set = match args.scorer {
        ScorerKind::Jaccard => run_corpus(&doc, &items, &JaccardScorer, options),
        ScorerKind::Http => {
            let scorer = BackendScorer::new(http_backend()?, DecodingConfig::default());
            run_corpus(&doc, &items, &scorer as &dyn SemanticScorer, options)
        }
    };
    let errors = set.error_count();
    if errors > 0 {
        eprintln!(
            "{errors} of {} items failed; see the \"error\" field",
            set.records.len()
        );
    }
    emit(args.out.as_deref(), &set.to_jsonl())
}

fn cmd_render(args: RenderArgs) -> Result<(), Failure> {
    let strategy = Strategy::from(args.strategy);
    let doc = args.sketch.as_deref().map(load_sketch).transpose()?;
    if let Some(data) = &args.data {
        let gold = load_gold(
            &DataArgs {
                data: data.clone(),
                task: args.task,
            },
            doc.as_ref(),
        )?;
        let mut out = String::new();
        for item in &gold {
            let prompt = render(strategy, doc.as_ref(), &TaskInstance::from(item))?;
            let line = serde_json::json!({"id": item.id, "strategy": strategy.name(), "text": prompt.text});
            out.push_str(&line.to_string());
            out.push('\n');
        }
        return emit(args.out.as_deref(), &out);
    }
    let text = args
        .text
        .ok_or_else(|| Failure::invalid("either --text or --data is required"))?;
    let prompt = if strategy == Strategy::MetaCompiler {
        logic_sketch::prompt::render_compiler_metaprompt(&text)?
    } else {
        let instance = TaskInstance {
            text,
            drug: args.drug,
            effect: args.effect,
            ..Default::default()
        };
        render(strategy, doc.as_ref(), &instance)?
    };
    emit(args.out.as_deref(), &format!("{}\n", prompt.text))
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), Failure> {
    let strategy = Strategy::from(args.strategy);
    if strategy == Strategy::MetaCompiler {
        return Err(Failure::invalid(
            "the meta strategy produces prompts, not labels; use `render`",
        ));
    }
    let doc = args.sketch.as_deref().map(load_sketch).transpose()?;
    let items = load_gold(&args.data, doc.as_ref())?;
    let backend: Box<dyn Backend> = match args.backend {
        BackendKind::Stub => Box::new(StubBackend::new(args.stub_reply.clone())),
        BackendKind::Http => Box::new(http_backend()?),
        BackendKind::Oracle => {
            let doc = doc
                .clone()
                .ok_or_else(|| Failure::invalid("--backend oracle needs --sketch"))?;
            Box::new(sketch_oracle_backend(doc, JaccardScorer))
        }
    };
    let config = DecodingConfig {
        temperature: args.temperature,
        max_output_tokens: args.max_tokens,
        seed: args.seed,
        ..Default::default()
    };
    let classifier = Classifier::new(backend.as_ref(), config, args.strict_determinism)?;
    let options = ClassifyOptions {
        strategy,
        jobs: args.jobs,
        keep_raw: args.keep_raw,
    };
    let outcome = classify_corpus(&classifier, doc.as_ref(), &items, options)?;
    emit(args.out.as_deref(), &outcome.predictions.to_jsonl())?;
    let errors = outcome.predictions.error_count();
    if errors > 0 {
        eprintln!(
            "{errors} of {} items failed; see the \"error\" field",
            items.len()
        );
    }
    if outcome.transport_failures > 0 {
        return Err(Failure::io(format!(
            "{} requests failed after retries",
            outcome.transport_failures
        )));
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    let config = args.bootstrap.config()?;
    let gold = load_gold(&args.data, None)?;
    let set = read_predictions(&args.pred, args.method.as_deref(), args.model.as_deref())?;
    let report = build_report(&[set], &gold, config)?;
    let text = if args.json {
        report.to_json()
    } else {
        report.to_table()
    };
    emit(None, &text)
}

fn cmd_mcnemar(args: McnemarArgs) -> Result<(), Failure> {
    let gold = load_gold(&args.data, None)?;
    let a = read_predictions(&args.a, None, None)?;
    let b = read_predictions(&args.b, None, None)?;
    let result = mcnemar(&gold, &a, &b)?;
    emit(None, &format!("{}\n", format_mcnemar(&result)))
}

fn parse_run_spec(spec: &str) -> Result<PredictionSet, Failure> {
    match spec.split_once('=') {
        Some((name, path)) => {
            let (model, method) = name.split_once('/').ok_or_else(|| {
                Failure::invalid(format!("run name `{name}` must be model/method"))
            })?;
            read_predictions(Path::new(path), Some(method), Some(model))
        }
        None => read_predictions(Path::new(spec), None, None),
    }
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let config = args.bootstrap.config()?;
    let gold = load_gold(&args.data, None)?;
    let runs = args
        .runs
        .iter()
        .map(|s| parse_run_spec(s))
        .collect::<Result<Vec<_>, _>>()?;
    let report = build_report(&runs, &gold, config)?;
    if let Some(out) = &args.out {
        emit(Some(out), &report.to_json())?;
    }
    emit(None, &report.to_table())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check { sketch } => load_sketch(&sketch).map(|_| ()),
        Command::Run(a) => cmd_run(a),
        Command::Render(a) => cmd_render(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Mcnemar(a) => cmd_mcnemar(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
