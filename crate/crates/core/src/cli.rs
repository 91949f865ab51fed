//! Command-line front end: train, ed, evaluate, sweep and plot.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! abort, 3 resource guard.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::CellVariant;
use crate::checkpoint::{self, CheckpointError, CheckpointMeta};
use crate::config::{ConfigError, ExperimentConfig, SWEEPABLE};
use crate::hamiltonian::HeisenbergSpec;
use crate::metrics::{Evaluation, JsonlWriter, ResultFile, TimingRecord};
use crate::oracle::{self, Method, OracleError};
use crate::plot::{self, PlotStyle};
use crate::reference;
use crate::vmc::{self, Event, VmcError};

pub const CONFIG_FILE: &str = "config.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const TIMING_FILE: &str = "timing.jsonl";
pub const RESULT_FILE: &str = "result.json";
pub const RUN_FILE: &str = "run.json";
pub const BEST_DIR: &str = "checkpoint_best";
pub const LAST_DIR: &str = "checkpoint_last";

/// Chains up to this length get an exact reference energy on evaluation.
pub const EXACT_REFERENCE_SITES: usize = 16;

/// Mixed into the training seed for the final inference, so the
/// evaluation samples are not the training stream.
const EVAL_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<VmcError> for CliError {
    fn from(e: VmcError) -> Self {
        match e {
            VmcError::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } => CliError::Resource(e.to_string()),
            OracleError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
            OracleError::Hamiltonian(_) => CliError::Usage(e.to_string()),
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "hypvmc",
    version,
    about = "Variational Monte Carlo with Euclidean and hyperbolic recurrent wavefunctions",
    after_help = "Run directories default to $HYPVMC_OUTPUT_ROOT/<name> (or ./runs)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a wavefunction and evaluate its best checkpoint.
    Train(TrainArgs),
    /// Exact ground energy of a short chain.
    Ed(EdArgs),
    /// Estimate the energy of a saved checkpoint.
    Evaluate(EvaluateArgs),
    /// Train once per value of a clamp or learning-rate parameter.
    Sweep(SweepArgs),
    /// Render finished runs to SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Experiment configuration (JSON).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in settings: j1j2, j1j2j3 or smoke.
    #[arg(long)]
    pub preset: Option<String>,
    /// Cell variant for --preset.
    #[arg(long, default_value = "euclidean_gru")]
    pub variant: CellVariant,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub j2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub j3: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Run directory (overrides the configuration).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, short)]
    pub quiet: bool,
    /// Print the resolved configuration and exit without training.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct EdArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub j1: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub j2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub j3: f64,
    /// auto, dense or lanczos.
    #[arg(long, default_value = "auto", value_parser = parse_method)]
    pub method: Method,
    /// Write the ground-state vector as JSON to this file.
    #[arg(long)]
    pub dump_vector: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "auto" => Ok(Method::Auto),
        "dense" => Ok(Method::Dense),
        "lanczos" => Ok(Method::Lanczos),
        _ => Err(format!("unknown method `{s}` (expected auto, dense or lanczos)")),
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Checkpoint directory, or a run directory (its best checkpoint).
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// r_max, l_max or lr_hyperbolic.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub values: Vec<f64>,
    /// Parent directory of the child runs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Run directories; a directory of runs (such as a sweep) expands to
    /// its children.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "dots")]
    pub style: PlotStyle,
}

/// Contents of `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub version: String,
    pub status: RunStatus,
    pub worker_count: usize,
    pub seed: u64,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub lr_decays: usize,
    pub best_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    NumericalAbort,
    Failed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub dir: PathBuf,
    pub info: RunInfo,
    pub evaluation: Evaluation,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(io(path))
}

fn reference_energy(spec: &HeisenbergSpec) -> Option<(f64, &'static str)> {
    if spec.n <= EXACT_REFERENCE_SITES {
        return oracle::ed_ground(spec)
            .ok()
            .map(|r| (r.energy, "exact_diagonalization"));
    }
    if spec.n == reference::REFERENCE_SITES && spec.j1 == 1.0 {
        return reference::dmrg_energy(spec.j2, spec.j3).map(|e| (e, "dmrg"));
    }
    None
}

/// Resolves `path` to a checkpoint directory.
pub fn resolve_checkpoint(path: &Path) -> PathBuf {
    if path.join(checkpoint::MANIFEST_FILE).exists() {
        return path.to_path_buf();
    }
    let best = path.join(BEST_DIR);
    if best.join(checkpoint::MANIFEST_FILE).exists() {
        best
    } else {
        path.join(LAST_DIR)
    }
}

/// Estimates the energy of a checkpoint and appends the result to the
/// `result.json` of its run directory.
pub fn evaluate_checkpoint(path: &Path, samples: usize, seed: u64) -> Result<Evaluation, CliError> {
    let dir = resolve_checkpoint(path);
    let ckpt = checkpoint::load(&dir)?;
    let est = vmc::infer(&ckpt.spec, &ckpt.model, samples, seed)?;
    let reference = reference_energy(&ckpt.spec);
    let eval = Evaluation {
        mean: est.mean,
        std_error: est.std_error,
        sample_count: est.count,
        seed,
        checkpoint: dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        reference_energy: reference.map(|r| r.0),
        reference_method: reference.map(|r| r.1.to_string()),
        relative_error: reference.map(|(e, _)| ((est.mean - e) / e).abs()),
    };
    let run_dir = dir.parent().unwrap_or(Path::new("."));
    ResultFile::append(&run_dir.join(RESULT_FILE), eval.clone()).map_err(io(run_dir))?;
    Ok(eval)
}

/// Full training run into `cfg.run_dir()` followed by inference on the
/// best checkpoint. On a numerical abort the partial run stays on disk.
pub fn train_run(cfg: &ExperimentConfig, quiet: bool) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let dir = cfg.run_dir();
    if dir.join(METRICS_FILE).exists() {
        return Err(CliError::Usage(format!(
            "{} already holds a run; choose another --out",
            dir.display()
        )));
    }
    fs::create_dir_all(&dir).map_err(io(&dir))?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_json() + "\n").map_err(io(&dir))?;

    let spec = cfg.spec();
    let mut model = cfg.build_model()?;
    let template = model.clone();
    let seed = cfg.train.seed;
    let metrics_path = dir.join(METRICS_FILE);
    let mut metrics = JsonlWriter::create(&metrics_path).map_err(io(&metrics_path))?;
    let timing_path = dir.join(TIMING_FILE);
    let mut timing = JsonlWriter::create(&timing_path).map_err(io(&timing_path))?;
    let best_dir = dir.join(BEST_DIR);
    let mut clock = Instant::now();
    let mut last_record = None;

    let outcome = vmc::train(&spec, &mut model, &cfg.train, |event| match event {
        Event::NewBest(b) => {
            let mut m = template.clone();
            m.params = b.params.clone();
            let meta = CheckpointMeta {
                seed,
                epoch: b.epoch,
                energy: b.energy,
                variance: b.variance,
            };
            checkpoint::save(&best_dir, &m, &spec, meta).map_err(|e| e.to_string())
        }
        Event::Epoch(r) => {
            metrics.write(r).map_err(|e| e.to_string())?;
            let now = Instant::now();
            let t = TimingRecord {
                epoch: r.epoch,
                wall_seconds: now.duration_since(clock).as_secs_f64(),
            };
            clock = now;
            timing.write(&t).map_err(|e| e.to_string())?;
            if !quiet && (r.epoch == 1 || r.epoch % 50 == 0) {
                eprintln!(
                    "epoch {:>5}  E {:>12.6}  var {:>10.4}  best {:>12.6}  lr {:.2e}",
                    r.epoch, r.energy, r.variance, r.best_energy, r.lr_euclidean
                );
            }
            last_record = Some((r.epoch, r.energy, r.variance));
            Ok(())
        }
    });

    let (epoch, energy, variance) = last_record.unwrap_or((0, f64::NAN, f64::NAN));
    let meta = CheckpointMeta {
        seed,
        epoch,
        energy,
        variance,
    };
    checkpoint::save(&dir.join(LAST_DIR), &model, &spec, meta)?;

    let mut info = RunInfo {
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: RunStatus::Completed,
        worker_count: 1,
        seed,
        epochs_run: epoch,
        stopped_early: false,
        lr_decays: 0,
        best_epoch: None,
        error: None,
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            info.status = match e {
                VmcError::Numerical(_) => RunStatus::NumericalAbort,
                _ => RunStatus::Failed,
            };
            info.error = Some(e.to_string());
            write_json(&dir.join(RUN_FILE), &info)?;
            return Err(e.into());
        }
    };
    info.epochs_run = outcome.epochs_run;
    info.stopped_early = outcome.stopped_early;
    info.lr_decays = outcome.lr_decays;
    info.best_epoch = outcome.best.as_ref().map(|b| b.epoch);
    write_json(&dir.join(RUN_FILE), &info)?;

    if outcome.best.is_none() && !quiet {
        eprintln!("warning: no epoch met the variance tolerance; evaluating the last parameters");
    }
    let evaluation = evaluate_checkpoint(&dir, cfg.train.eval_samples, seed ^ EVAL_SEED_SALT)?;
    if !quiet {
        eprintln!(
            "{}: E = {:.6} ± {:.6} ({} samples)",
            dir.display(),
            evaluation.mean,
            evaluation.std_error,
            evaluation.sample_count
        );
    }
    Ok(RunReport {
        dir,
        info,
        evaluation,
    })
}

fn train_config(args: &TrainArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name, args.variant, args.j2, args.j3)?,
        (None, None) => {
            return Err(CliError::Usage(
                "train needs --config <file> or --preset <name>".into(),
            ))
        }
    };
    if let Some(s) = args.seed {
        cfg.train.seed = s;
    }
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub value: f64,
    pub dir: PathBuf,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub param: String,
    /// Successful runs from lowest to highest energy, then failures in
    /// sweep order.
    pub ranking: Vec<SweepEntry>,
}

/// One child run per value, run one after another; a failing child is
/// recorded and the sweep moves on.
pub fn sweep(
    base: &ExperimentConfig,
    param: &str,
    values: &[f64],
    out: &Path,
    quiet: bool,
) -> Result<SweepSummary, CliError> {
    if !SWEEPABLE.contains(&param) {
        return Err(CliError::Usage(format!(
            "`{param}` is not sweepable (expected one of {})",
            SWEEPABLE.join(", ")
        )));
    }
    fs::create_dir_all(out).map_err(io(out))?;
    let mut entries = Vec::new();
    for &value in values {
        let dir = out.join(format!("{param}_{value}"));
        let mut cfg = base.clone();
        cfg.output.dir = Some(dir.clone());
        let result = cfg
            .set_param(param, value)
            .map_err(CliError::from)
            .and_then(|_| train_run(&cfg, quiet));
        let entry = match result {
            Ok(r) => SweepEntry {
                value,
                dir,
                status: RunStatus::Completed,
                mean: Some(r.evaluation.mean),
                std_error: Some(r.evaluation.std_error),
                relative_error: r.evaluation.relative_error,
                error: None,
            },
            Err(e) => {
                if !quiet {
                    eprintln!("{param} = {value}: {e}");
                }
                SweepEntry {
                    value,
                    dir,
                    status: if matches!(e, CliError::Numerical(_)) {
                        RunStatus::NumericalAbort
                    } else {
                        RunStatus::Failed
                    },
                    mean: None,
                    std_error: None,
                    relative_error: None,
                    error: Some(e.to_string()),
                }
            }
        };
        entries.push(entry);
    }
    let (mut ok, failed): (Vec<_>, Vec<_>) = entries.into_iter().partition(|e| e.mean.is_some());
    ok.sort_by(|a, b| a.mean.unwrap().total_cmp(&b.mean.unwrap()));
    ok.extend(failed);
    let summary = SweepSummary {
        param: param.to_string(),
        ranking: ok,
    };
    write_json(&out.join("summary.json"), &summary)?;
    let md = out.join("summary.md");
    fs::write(&md, summary_markdown(&summary)).map_err(io(&md))?;
    Ok(summary)
}

fn summary_markdown(s: &SweepSummary) -> String {
    let mut t = format!(
        "| rank | {} | energy | std. error | rel. error | status |\n|---|---|---|---|---|---|\n",
        s.param
    );
    for (k, e) in s.ranking.iter().enumerate() {
        let num = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
        let rank = if e.mean.is_some() { (k + 1).to_string() } else { "-".into() };
        let status = e
            .error
            .clone()
            .unwrap_or_else(|| "completed".into())
            .replace('|', "/");
        let _ = writeln!(
            t,
            "| {rank} | {} | {} | {} | {} | {status} |",
            e.value,
            num(e.mean, 6),
            num(e.std_error, 6),
            e.relative_error.map_or("-".to_string(), |r| format!("{:.3}%", 100.0 * r)),
        );
    }
    t
}

fn is_run_dir(p: &Path) -> bool {
    p.join(METRICS_FILE).exists() || p.join(RESULT_FILE).exists()
}

/// Run directories named by `paths`, expanding directories of runs.
pub fn expand_runs(paths: &[PathBuf]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for p in paths {
        if is_run_dir(p) || !p.is_dir() {
            out.push(p.clone());
            continue;
        }
        let mut children: Vec<PathBuf> = fs::read_dir(p)
            .into_iter()
            .flatten()
            .flatten()
            .map(|e| e.path())
            .filter(|c| is_run_dir(c))
            .collect();
        children.sort();
        if children.is_empty() {
            out.push(p.clone());
        }
        out.extend(children);
    }
    out
}

pub fn plot_runs(paths: &[PathBuf], out: &Path, style: PlotStyle) -> Result<Vec<String>, CliError> {
    let mut warnings = Vec::new();
    let runs: Vec<_> = expand_runs(paths)
        .iter()
        .map(|d| plot::load_run(d, &mut warnings))
        .collect();
    let svg = plot::render(style, &runs);
    fs::write(out, svg).map_err(io(out))?;
    Ok(warnings)
}

fn ed(args: &EdArgs) -> Result<(), CliError> {
    let spec = HeisenbergSpec::new(args.n, args.j1, args.j2, args.j3)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let r = oracle::ed_ground_with(&spec, args.method)?;
    println!("{:.10}", r.energy);
    eprintln!(
        "n = {}, E/N = {:.10}, method = {:?}, residual = {:.2e}",
        spec.n,
        r.energy / spec.n as f64,
        r.method,
        r.residual
    );
    if let Some(path) = &args.dump_vector {
        write_json(path, &r)?;
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => {
            let cfg = train_config(&args)?;
            if args.print_config {
                println!("{}", cfg.to_json());
                return Ok(());
            }
            train_run(&cfg, args.quiet).map(|_| ())
        }
        Command::Ed(args) => ed(&args),
        Command::Evaluate(args) => {
            let e = evaluate_checkpoint(&args.checkpoint, args.samples, args.seed)?;
            println!("{:.8} {:.8}", e.mean, e.std_error);
            Ok(())
        }
        Command::Sweep(args) => {
            let base = ExperimentConfig::load(&args.config)?;
            let out = args
                .out
                .clone()
                .unwrap_or_else(|| base.run_dir().with_extension(format!("sweep-{}", args.param)));
            let s = sweep(&base, &args.param, &args.values, &out, args.quiet)?;
            print!("{}", summary_markdown(&s));
            Ok(())
        }
        Command::Plot(args) => {
            for w in plot_runs(&args.runs, &args.out, args.style)? {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
