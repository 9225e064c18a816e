//! The `crosswalk-ir` command line: calibrate, simulate, batch, evaluate
//! and serve.

use crate::calibration::{calibrate, load_dataset_dir, save_model, CalibrationError, ExtractParams, SvmConfig};
use crate::config::{parse_trigger, ConfigError, ToolkitConfig};
use crate::evaluation::{aggregate_report, compute_trial_metrics, metrics_csv, TrialMetrics};
use crate::pil::{serve, ServiceState};
use crate::sim::{run_batch, run_trial, PedestrianKind, ScenarioId, SimLog, TrialConfig};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "crosswalk-ir", version, about = "Intent-recognition eHMI toolkit for AV-pedestrian crossings")]
pub struct Cli {
    /// Toolkit configuration (TOML); defaults to $CROSSWALK_IR_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract interactions from trajectory recordings and train both boundaries.
    Calibrate(CalibrateArgs),
    /// Run one trial and write its log.
    Simulate(SimulateArgs),
    /// Run the configured grid of conditions x seeds and write logs and a report.
    Batch(BatchArgs),
    /// Compute metrics and statistics for existing logs.
    Evaluate(EvaluateArgs),
    /// Start the pedestrian-in-the-loop service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Directory of `*tracks.csv` + `*recordingMeta.csv` files.
    pub data_dir: PathBuf,
    /// Output directory for `ped_vs_av.json` and `av_vs_ped.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Use every n-th frame of each interaction.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3.0)]
    pub tdtc_max: f64,
    #[arg(long, default_value_t = 5.0)]
    pub dist_max: f64,
    /// Record the training time in the model files.
    #[arg(long)]
    pub stamp: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "S1")]
    pub scenario: String,
    /// none, fixed or ir.
    #[arg(long, default_value = "ir")]
    pub policy: String,
    /// decisive_go, decisive_yield, hesitant or ehmi_responsive.
    #[arg(long, default_value = "hesitant")]
    pub ped: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Log path; defaults to `<scenario>_<policy>_<ped>_<seed>.ndjson`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Plan file (toolkit configuration with a [batch] table); overrides --config.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long, default_value = "batch_out")]
    pub out: PathBuf,
    /// Worker threads; 0 means one per CPU.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Log files, or directories searched for `*.ndjson`.
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    /// Also write report.csv, pairwise.csv and metrics.csv here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Defaults to the configured service port.
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Calibration(CalibrationError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Calibration(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

fn other(e: impl std::fmt::Display) -> CliError {
    CliError::Other(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| other(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| other(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(a, out),
        Command::Simulate(a) => cmd_simulate(&ToolkitConfig::resolve(cli.config.as_deref())?, a, out),
        Command::Batch(a) => {
            let cfg = ToolkitConfig::resolve(a.plan.as_deref().or(cli.config.as_deref()))?;
            cmd_batch(&cfg, a, out)
        }
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Serve(a) => cmd_serve(&ToolkitConfig::resolve(cli.config.as_deref())?, a, out),
    }
}

fn cmd_calibrate(a: &CalibrateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.stride == 0 {
        return Err(CliError::Usage("--stride must be at least 1".into()));
    }
    if !(a.c > 0.0) {
        return Err(CliError::Usage("--c must be positive".into()));
    }
    let data = load_dataset_dir(&a.data_dir).map_err(other)?;
    let params = ExtractParams { tdtc_max: a.tdtc_max, dist_max: a.dist_max, ..ExtractParams::default() };
    let svm = SvmConfig { c: a.c, seed: a.seed, ..SvmConfig::default() };
    let run = calibrate(&data, &params, a.stride, &svm);
    let ex = &run.extraction;
    writeln!(out, "recordings {}  segments {}  skipped {}", data.len(), ex.segments.len(), ex.skipped.len()).map_err(other)?;
    writeln!(out, "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8}", "model", "w1", "w2", "b", "accuracy", "precision", "recall", "f1", "samples")
        .map_err(other)?;
    for (m, n) in run.models.iter().zip(run.samples) {
        match m {
            Ok(m) => {
                let (p, k) = (m.params, m.metrics);
                writeln!(
                    out,
                    "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8.2}% {:>8.2}% {:>8.2}% {:>8.2}% {:>8}",
                    p.perspective.as_str(),
                    p.w1,
                    p.w2,
                    p.b,
                    100.0 * k.accuracy,
                    100.0 * k.precision,
                    100.0 * k.recall,
                    100.0 * k.f1,
                    n
                )
                .map_err(other)?;
            }
            Err(e) => writeln!(out, "{n:>8} samples: {e}").map_err(other)?,
        }
    }
    let [ped, av] = run.models;
    let (ped, av) = match (ped, av) {
        (Ok(p), Ok(v)) => (p, v),
        (Err(e), _) | (_, Err(e)) => {
            return Err(match e {
                CalibrationError::SingleClass(_)
                | CalibrationError::TooFewSamples { .. }
                | CalibrationError::Rejected { .. } => CliError::Calibration(e),
                other_err => other(other_err),
            })
        }
    };
    let stamp = a.stamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    fs::create_dir_all(&a.out).map_err(|e| other(format!("{}: {e}", a.out.display())))?;
    for m in [&ped, &av] {
        let path = a.out.join(format!("{}.json", m.params.perspective.as_str()));
        save_model(&path, m, stamp).map_err(other)?;
        writeln!(out, "wrote {}", path.display()).map_err(other)?;
    }
    Ok(())
}

fn parse_trial(cfg: &ToolkitConfig, a: &SimulateArgs) -> Result<TrialConfig, CliError> {
    let scenario: ScenarioId = a.scenario.parse().map_err(|e| CliError::Usage(format!("--scenario: {e}")))?;
    let trigger = parse_trigger(&a.policy).map_err(|e| CliError::Usage(format!("--policy: {e}")))?;
    let ped: PedestrianKind = a.ped.parse().map_err(|e| CliError::Usage(format!("--ped: {e}")))?;
    if ped == PedestrianKind::Manual {
        return Err(CliError::Usage("--ped manual needs a live controller; use `serve`".into()));
    }
    let mut t = cfg.trial(scenario, trigger, ped, a.seed);
    t.monitor = cfg.monitor_params()?;
    Ok(t)
}

fn cmd_simulate(cfg: &ToolkitConfig, a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let trial = parse_trial(cfg, a)?;
    let log = run_trial(&trial).map_err(other)?;
    let path = a.out.clone().unwrap_or_else(|| {
        PathBuf::from(format!(
            "{}_{}_{}_{}.ndjson",
            trial.scenario.id,
            trial.trigger.kind.short_name(),
            trial.pedestrian.kind,
            trial.seed
        ))
    });
    write_file(&path, &log.to_ndjson())?;
    let m = compute_trial_metrics(&log).map_err(other)?;
    writeln!(out, "wrote {} ({} frames, {:?})", path.display(), log.frames.len(), log.termination).map_err(other)?;
    writeln!(out, "{}", serde_json::to_string(&m).map_err(other)?).map_err(other)?;
    Ok(())
}

fn log_label(log: &SimLog) -> String {
    let h = &log.header;
    format!("{}/{}/{}", h.scenario.id, h.trigger.kind.short_name(), h.pedestrian.kind)
}

fn write_reports(dir: &Path, runs: &[(String, TrialMetrics)], out: &mut dyn Write) -> Result<(), CliError> {
    let report = aggregate_report(runs).map_err(other)?;
    write_file(&dir.join("report.csv"), &report.to_csv())?;
    write_file(&dir.join("pairwise.csv"), &report.pairwise_csv())?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(runs))?;
    write!(out, "{}", report.to_text()).map_err(other)
}

fn cmd_batch(cfg: &ToolkitConfig, a: &BatchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let monitor = cfg.monitor_params()?;
    let conditions = cfg.conditions()?;
    let mut trials: Vec<TrialConfig> = conditions.iter().flat_map(|c| c.trials.iter().copied()).collect();
    for t in &mut trials {
        t.monitor = monitor;
    }
    let workers = if a.workers == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { a.workers };
    let logs = run_batch(&trials, workers).map_err(other)?;
    let mut runs = Vec::with_capacity(logs.len());
    for log in &logs {
        let h = &log.header;
        let name = format!(
            "{}_{}_{}_{}.ndjson",
            h.scenario.id,
            h.trigger.kind.short_name(),
            h.pedestrian.kind,
            h.seed
        );
        write_file(&a.out.join("logs").join(name), &log.to_ndjson())?;
        runs.push((log_label(log), compute_trial_metrics(log).map_err(other)?));
    }
    writeln!(out, "{} trials in {} conditions -> {}", logs.len(), conditions.len(), a.out.display()).map_err(other)?;
    write_reports(&a.out, &runs, out)
}

fn collect_logs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| other(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "ndjson"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut runs = Vec::new();
    for path in collect_logs(&a.logs)? {
        let text = fs::read_to_string(&path).map_err(|e| other(format!("{}: {e}", path.display())))?;
        let log = SimLog::from_ndjson(&text).map_err(|e| other(format!("{}: {e}", path.display())))?;
        match compute_trial_metrics(&log) {
            Ok(m) => runs.push((log_label(&log), m)),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    if runs.is_empty() {
        return Err(other("no evaluable logs"));
    }
    match &a.out {
        Some(dir) => write_reports(dir, &runs, out),
        None => write!(out, "{}", aggregate_report(&runs).map_err(other)?.to_text()).map_err(other),
    }
}

fn cmd_serve(cfg: &ToolkitConfig, a: &ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let state = ServiceState::new(cfg.clone(), cfg.monitor_params()?);
    let port = a.port.unwrap_or(cfg.service.port);
    let rt = tokio::runtime::Runtime::new().map_err(other)?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), port))
            .await
            .map_err(|e| other(format!("bind {}:{port}: {e}", a.host)))?;
        let addr = listener.local_addr().map_err(other)?;
        writeln!(out, "serving on http://{addr}").map_err(other)?;
        out.flush().map_err(other)?;
        serve(listener, state).await.map_err(other)
    })
}
