//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 when the work itself failed (bad input
//! records, client failures, ERROR runs), 2 for usage or configuration
//! errors.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use counterframe_core::corpus::{group_sentiment_matrix, GroupAxis};
use counterframe_core::evaluation::{
    ablation_rates, cumulative_success_by_step, cumulative_table, failure_table, success_breakdown,
    ReportTable,
};
use counterframe_core::registry::Category;
use counterframe_core::{SelectionStrategy, SentimentClass, WeightScheme};

use crate::batch::{plan_batch, run_batch, BatchMode, BatchOptions};
use crate::config::{Config, ConfigError, OracleKind, RewriterKind};
use crate::dump::parse_dump;
use crate::ingest::{build_event_dataset, read_pairs, write_pairs, write_skipped, IngestOptions};
use crate::report::{export_report, ReportFormat};
use crate::runlog::{ablation_results, read_log, runs, LogEntry, RunLog};
use crate::service::{serve, AppState};
use crate::store::RunStore;

#[derive(Parser, Debug)]
#[command(name = "counterframe", version, about = "Counterfactual sentiment analysis of diplomatic event narratives")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Use the lexicon oracle and mock rewriter regardless of configuration.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Neutral dead-zone half-width.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub weights: Option<WeightArg>,
    /// Worker threads for scoring and batch runs.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub selection: Option<SelectionArg>,
    /// Comma-separated category order, e.g. participants,context,communication.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_category)]
    pub category_order: Option<Vec<Category>>,
    #[arg(long, global = true, value_name = "URL")]
    pub oracle_endpoint: Option<String>,
    #[arg(long, global = true, value_name = "URL")]
    pub rewriter_endpoint: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightArg {
    Log,
    Linear,
    Uniform,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SelectionArg {
    First,
    Random,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClassArg {
    Negative,
    Neutral,
    Positive,
}

impl From<ClassArg> for SentimentClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Negative => SentimentClass::Negative,
            ClassArg::Neutral => SentimentClass::Neutral,
            ClassArg::Positive => SentimentClass::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    Actor,
    Theme,
}

fn parse_category(s: &str) -> Result<Category, String> {
    Category::parse(s).ok_or_else(|| format!("unknown category `{s}`"))
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a forum dump and write it back linked: each post followed by
    /// its thread order.
    Ingest {
        dump: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score comment threads into an event dataset (one JSON pair per line).
    Score {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write posts that produced no pair.
        #[arg(long)]
        skipped: Option<PathBuf>,
    },
    /// Run sequential counterfactual generation over a dataset.
    Run {
        dataset: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Print what would run without calling any client.
        #[arg(long)]
        dry_run: bool,
        #[arg(long, value_enum)]
        target: Option<ClassArg>,
        /// Require exactly the target class instead of the target or better.
        #[arg(long)]
        exact: bool,
    },
    /// Apply every modification independently to each selected event.
    Ablate {
        dataset: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Render report tables from run logs and datasets.
    Report {
        /// Sequential run log: breakdown, cumulative and unchanged tables.
        #[arg(long)]
        runs: Option<PathBuf>,
        /// Ablation log: category and per-modification tables.
        #[arg(long)]
        ablation: Option<PathBuf>,
        /// Event dataset: group × diplomacy-type matrix.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "actor")]
        axis: AxisArg,
        #[arg(long, value_enum, default_value = "plain")]
        format: ReportFormat,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        /// Directory holding runs.jsonl.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Write the built-in fixture logs and the synthetic desk corpus.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn open_in(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| failed(format!("{}: {e}", path.display())))
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
fn write_atomic(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let err = |e: std::io::Error| failed(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(err)?;
    }
    let tmp = path.with_extension("tmp~");
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(err)?);
        f(&mut w).map_err(err)?;
        w.flush().map_err(err)?;
    }
    std::fs::rename(&tmp, path).map_err(err)
}

impl GlobalArgs {
    pub fn load_config(&self) -> Result<Config, CliError> {
        let mut cfg = Config::load(self.config.as_deref())?;
        if let Some(t) = self.tau {
            cfg.thresholds.tau = t;
        }
        if let Some(w) = self.weights {
            cfg.weights.scheme = match w {
                WeightArg::Log => WeightScheme::Log,
                WeightArg::Linear => WeightScheme::Linear,
                WeightArg::Uniform => WeightScheme::Uniform,
            };
        }
        if let Some(p) = self.parallelism {
            cfg.batch.parallelism = p;
        }
        if let Some(s) = self.seed {
            cfg.engine.seed = s;
            cfg.rewriter.mock_seed = s;
        }
        if let Some(s) = self.selection {
            cfg.engine.selection = match s {
                SelectionArg::First => SelectionStrategy::First,
                SelectionArg::Random => SelectionStrategy::Random,
                SelectionArg::Exhaustive => SelectionStrategy::Exhaustive,
            };
        }
        if let Some(order) = &self.category_order {
            cfg.engine.category_order = order.clone();
        }
        if let Some(e) = &self.oracle_endpoint {
            cfg.oracle.remote.endpoint = e.clone();
            cfg.oracle.kind = OracleKind::Remote;
        }
        if let Some(e) = &self.rewriter_endpoint {
            cfg.rewriter.remote.endpoint = e.clone();
            cfg.rewriter.kind = RewriterKind::Remote;
        }
        if self.mock {
            cfg.oracle.kind = OracleKind::Lexicon;
            cfg.rewriter.kind = RewriterKind::Mock;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = cli.global.load_config()?;
    match cli.command {
        Command::Ingest { dump, out: path } => {
            let d = parse_dump(open_in(&dump)?).map_err(|e| failed(format!("{}: {e}", dump.display())))?;
            let linked = d.linked();
            write_atomic(&path, |w| linked.write_to(w))?;
            writeln!(err, "ingested {} posts, {} comments", linked.posts.len(), linked.comments.len()).ok();
            Ok(0)
        }
        Command::Score { corpus, out: path, skipped } => {
            let d = parse_dump(open_in(&corpus)?).map_err(|e| failed(format!("{}: {e}", corpus.display())))?;
            let oracle = cfg.build_oracle()?;
            let opts = IngestOptions {
                thresholds: cfg.thresholds(),
                weights: cfg.weights.scheme,
                parallelism: cfg.batch.parallelism,
            };
            let ds = build_event_dataset(&d, &*oracle, &opts).map_err(failed)?;
            write_atomic(&path, |w| write_pairs(&ds.pairs, w))?;
            if let Some(p) = skipped {
                write_atomic(&p, |w| write_skipped(&ds.skipped, w))?;
            }
            writeln!(err, "scored {} events, skipped {}", ds.pairs.len(), ds.skipped.len()).ok();
            Ok(0)
        }
        Command::Run { dataset, log, dry_run, target, exact } => {
            let mut engine = cfg.engine_config();
            if let Some(t) = target {
                engine.target.class = t.into();
            }
            if exact {
                engine.target.or_better = false;
            }
            let opts = BatchOptions {
                mode: BatchMode::Sequential,
                engine,
                ..batch_options(&cfg)
            };
            batch(&cfg, &dataset, &log, &opts, dry_run, out)
        }
        Command::Ablate { dataset, log, dry_run } => {
            let opts = BatchOptions {
                mode: BatchMode::Ablation,
                ..batch_options(&cfg)
            };
            batch(&cfg, &dataset, &log, &opts, dry_run, out)
        }
        Command::Report { runs: run_log, ablation, matrix, axis, format, out: path } => {
            if run_log.is_none() && ablation.is_none() && matrix.is_none() {
                return Err(CliError::Usage("report needs at least one of --runs, --ablation, --matrix".into()));
            }
            let mut tables: Vec<ReportTable> = Vec::new();
            if let Some(p) = run_log {
                let rs = runs(&read_log(&p).map_err(failed)?);
                tables.push(ReportTable::from(&success_breakdown(&rs).map_err(failed)?));
                tables.push(cumulative_table(&cumulative_success_by_step(&rs).map_err(failed)?));
                tables.push(failure_table(&rs).map_err(failed)?);
            }
            if let Some(p) = ablation {
                let rows = ablation_results(&read_log(&p).map_err(failed)?);
                let t = ablation_rates(&rows).map_err(failed)?;
                tables.push(t.category_table());
                tables.push(t.detail_table());
            }
            if let Some(p) = matrix {
                let pairs = read_pairs(open_in(&p)?).map_err(failed)?;
                let axis = match axis {
                    AxisArg::Actor => GroupAxis::Actor,
                    AxisArg::Theme => GroupAxis::Theme,
                };
                tables.push(ReportTable::from(&group_sentiment_matrix(&pairs, axis).map_err(failed)?));
            }
            match path {
                Some(p) => write_atomic(&p, |w| {
                    export_report(&tables, format, w).map_err(|e| std::io::Error::other(e.to_string()))
                })?,
                None => export_report(&tables, format, out).map_err(failed)?,
            }
            Ok(0)
        }
        Command::Serve { bind, store } => {
            let bind = bind.unwrap_or_else(|| cfg.service.bind.clone());
            let store = Arc::new(RunStore::open(store.unwrap_or_else(|| cfg.service.store.clone())).map_err(failed)?);
            let mut state = AppState::new(
                cfg.build_oracle()?,
                cfg.build_rewriter()?,
                cfg.engine_config(),
                store,
                cfg.service.workers,
            );
            state.record_timestamps = !cfg.is_offline();
            let rt = tokio::runtime::Runtime::new().map_err(failed)?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&bind)
                    .await
                    .map_err(|e| CliError::Usage(format!("cannot bind {bind}: {e}")))?;
                writeln!(err, "listening on {}", listener.local_addr().map_err(failed)?).ok();
                serve(listener, state).await.map_err(failed)
            })?;
            Ok(0)
        }
        Command::Fixtures { out: dir } => {
            std::fs::create_dir_all(&dir).map_err(failed)?;
            let lines = |entries: Vec<LogEntry>| -> String { entries.iter().map(LogEntry::to_line).collect() };
            let breakdown = lines(crate::fixtures::breakdown_log());
            let ablation = lines(crate::fixtures::ablation_log());
            write_atomic(&dir.join("breakdown_runs.jsonl"), |w| w.write_all(breakdown.as_bytes()))?;
            write_atomic(&dir.join("ablation_runs.jsonl"), |w| w.write_all(ablation.as_bytes()))?;
            write_atomic(&dir.join("desk_dump.jsonl"), |w| crate::fixtures::desk_dump().write_to(w))?;
            Ok(0)
        }
    }
}

fn batch_options(cfg: &Config) -> BatchOptions {
    BatchOptions {
        engine: cfg.engine_config(),
        ablation_targets: cfg.engine.ablation_targets.clone(),
        label_filter: cfg.batch.label_filter,
        parallelism: cfg.batch.parallelism,
        record_timestamps: !cfg.is_offline(),
        ..BatchOptions::default()
    }
}

fn batch(
    cfg: &Config,
    dataset: &Path,
    log_path: &Path,
    opts: &BatchOptions,
    dry_run: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let pairs = read_pairs(open_in(dataset)?).map_err(|e| failed(format!("{}: {e}", dataset.display())))?;
    let mut log = RunLog::open(log_path).map_err(failed)?;
    if dry_run {
        let plan = plan_batch(&pairs, &log, opts).map_err(failed)?;
        writeln!(
            out,
            "{} events, {} filtered out, {} already logged, {} to run",
            plan.total,
            plan.filtered_out,
            plan.already_logged,
            plan.pending.len()
        )
        .map_err(failed)?;
        for id in &plan.pending {
            writeln!(out, "{id}").map_err(failed)?;
        }
        return Ok(0);
    }
    let oracle = cfg.build_oracle()?;
    let rewriter = cfg.build_rewriter()?;
    let s = run_batch(&pairs, &mut log, &*rewriter, &*oracle, opts).map_err(failed)?;
    writeln!(
        out,
        "processed {} events ({} already logged): {} SUCCESS, {} FAILURE, {} ERROR",
        s.plan.pending.len(),
        s.plan.already_logged,
        s.success,
        s.failure,
        s.error
    )
    .map_err(failed)?;
    Ok(if s.error > 0 { 1 } else { 0 })
}
