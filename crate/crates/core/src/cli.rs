//! Command-line entry point.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::dataset::{load_dataset, Dataset};
use crate::evaluate::{run_benchmark, ReportSummary};
use crate::featurize::assemble_table;
use crate::models::train;
use crate::synth::generate;

pub const CONFIG_SIDECAR: &str = "effective.cfg";
pub const FEATURES_FILE: &str = "features.csv";
pub const BUILD_LOG_FILE: &str = "build_log.json";
pub const MODEL_FILE: &str = "model.json";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Single-line error with the pipeline stage that raised it.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    fn new(stage: &'static str, message: impl fmt::Display) -> Self {
        let message = message.to_string().replace(['\n', '\r'], " ");
        Self { stage, message }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "agbench", version, about = "Featurize, train and benchmark agricultural downstream tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic bundle with a truth.csv sidecar into --out.
    Synth(RunArgs),
    /// Write the assembled feature table.
    Featurize(RunArgs),
    /// Train on every labeled row; writes the model and its importances.
    Train(RunArgs),
    /// Run the repeated evaluation scheme; writes report.csv and summary.json.
    Benchmark(RunArgs),
    /// Print the summary table of a benchmark output.
    Report {
        /// summary.json, or a directory containing it.
        path: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// key=value config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sets base_seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn effective(&self) -> Result<RunConfig, CliError> {
        let err = |e| CliError::new("config", e);
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
                RunConfig::parse(&text, &path.display().to_string()).map_err(err)?
            }
            None => RunConfig::default(),
        };
        for pair in &self.overrides {
            cfg.set_pair(pair).map_err(err)?;
        }
        let path_str = |p: &Path| p.to_string_lossy().into_owned();
        let flags = [
            ("task.name", self.task.clone()),
            ("bundle", self.bundle.as_deref().map(path_str)),
            ("out", self.out.as_deref().map(path_str)),
            ("base_seed", self.seed.map(|s| s.to_string())),
            ("threads", self.threads.map(|t| t.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v).map_err(err)?;
            }
        }
        Ok(cfg)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            CliError::new("none", "")
        }
        _ => CliError::new("usage", e.to_string().lines().next().unwrap_or("invalid arguments")),
    });
    let cli = match cli {
        Ok(c) => c,
        Err(e) if e.stage == "none" => return Ok(()),
        Err(e) => return Err(e),
    };
    match cli.command {
        Command::Report { path } => report(&path),
        Command::Synth(a) => execute(Step::Synth, &a.effective()?),
        Command::Featurize(a) => execute(Step::Featurize, &a.effective()?),
        Command::Train(a) => execute(Step::Train, &a.effective()?),
        Command::Benchmark(a) => execute(Step::Benchmark, &a.effective()?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Synth,
    Featurize,
    Train,
    Benchmark,
}

/// Runs `step` under `cfg` on a pool sized by its `threads` key.
pub fn execute(step: Step, cfg: &RunConfig) -> Result<(), CliError> {
    let threads = match cfg.threads() {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::new("threads", e))?;
    pool.install(|| match step {
        Step::Synth => synth(cfg),
        Step::Featurize => featurize(cfg),
        Step::Train => train_model(cfg),
        Step::Benchmark => benchmark(cfg),
    })
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let out = cfg.out();
    fs::create_dir_all(&out).map_err(|e| CliError::new("io", format!("{}: {e}", out.display())))?;
    let sidecar = format!("# config_hash={}\n{}", cfg.hash(), cfg.echo());
    write_file(&out.join(CONFIG_SIDECAR), sidecar.as_bytes())?;
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}

fn load(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let bundle = cfg.bundle().ok_or_else(|| CliError::new("config", "key 'bundle': required"))?;
    if !bundle.is_dir() {
        return Err(CliError::new("config", format!("key 'bundle': {} is not a directory", bundle.display())));
    }
    load_dataset(&bundle).map_err(|e| CliError::new("load", e))
}

fn synth(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.synth_spec().map_err(|e| CliError::new("config", e))?;
    let out = out_dir(cfg)?;
    let summary = generate(&spec, cfg.base_seed(), &out).map_err(|e| CliError::new("synth", e))?;
    println!(
        "synth: {} units, {} labels, {} observations -> {}",
        summary.rows.units,
        summary.rows.labels,
        summary.rows.observations,
        out.display()
    );
    Ok(())
}

fn featurize(cfg: &RunConfig) -> Result<(), CliError> {
    let task = cfg.task_config().map_err(|e| CliError::new("config", e))?;
    let ds = load(cfg)?;
    let assembled = assemble_table(&ds, &task).map_err(|e| CliError::new("featurize", e))?;
    let out = out_dir(cfg)?;
    let mut w = create(&out.join(FEATURES_FILE))?;
    assembled
        .table
        .write_csv(&mut w, &assembled.labels)
        .map_err(|e| CliError::new("featurize", e))?;
    w.flush().map_err(|e| CliError::new("io", e))?;
    let log = serde_json::to_string_pretty(&assembled.log).map_err(|e| CliError::new("featurize", e))?;
    write_file(&out.join(BUILD_LOG_FILE), log.as_bytes())?;
    println!(
        "featurize: {} rows x {} features ({} of {} labeled kept) -> {}",
        assembled.table.n_rows(),
        assembled.table.n_cols(),
        assembled.log.kept,
        assembled.log.labeled,
        out.join(FEATURES_FILE).display()
    );
    Ok(())
}

fn train_model(cfg: &RunConfig) -> Result<(), CliError> {
    let task = cfg.task_config().map_err(|e| CliError::new("config", e))?;
    let spec = cfg.model_spec(task.task).map_err(|e| CliError::new("config", e))?;
    let ds = load(cfg)?;
    let assembled = assemble_table(&ds, &task).map_err(|e| CliError::new("featurize", e))?;
    let model = train(&spec, &assembled.table, &assembled.labels).map_err(|e| CliError::new("train", e))?;
    let out = out_dir(cfg)?;
    model.save(&out.join(MODEL_FILE)).map_err(|e| CliError::new("train", e))?;
    let mut w = csv::Writer::from_writer(create(&out.join(IMPORTANCE_FILE))?);
    let csv_err = |e: csv::Error| CliError::new("io", e);
    w.write_record(["feature", "importance"]).map_err(csv_err)?;
    let ranked = model.top_features(model.feature_names().len());
    for (name, value) in &ranked {
        w.write_record([name.as_str(), &value.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::new("io", e))?;
    let top = ranked.first().map_or("-", |(n, _)| n.as_str());
    println!(
        "train: {} {} trees on {} rows, top feature {top} -> {}",
        spec.kind,
        model.trees().len(),
        assembled.table.n_rows(),
        out.display()
    );
    Ok(())
}

fn benchmark(cfg: &RunConfig) -> Result<(), CliError> {
    let bench = cfg.benchmark_config().map_err(|e| CliError::new("config", e))?;
    let ds = load(cfg)?;
    let mut report = run_benchmark(&ds, &bench).map_err(|e| CliError::new("benchmark", e))?;
    report.context.config_hash = cfg.hash();
    let out = out_dir(cfg)?;
    let mut w = create(&out.join(REPORT_FILE))?;
    report.write_csv(&mut w).map_err(|e| CliError::new("report", e))?;
    w.flush().map_err(|e| CliError::new("io", e))?;
    let summary = report.summary();
    let json = summary.to_json().map_err(|e| CliError::new("report", e))?;
    write_file(&out.join(SUMMARY_FILE), json.as_bytes())?;
    print!("{}", summary.render());
    Ok(())
}

fn report(path: &Path) -> Result<(), CliError> {
    let file = if path.is_dir() { path.join(SUMMARY_FILE) } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|e| CliError::new("report", format!("{}: {e}", file.display())))?;
    let summary = ReportSummary::from_json(&text).map_err(|e| CliError::new("report", e))?;
    print!("{}", summary.render());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_is_one_line() {
        let e = CliError::new("load", "a\nb");
        assert_eq!(e.to_string(), "error[load]: a b");
    }

    #[test]
    fn flags_override_file_and_set() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "base_seed=1\ntask.name=yield\n").unwrap();
        let args = RunArgs {
            config: Some(path),
            overrides: vec!["base_seed=2".into(), "model.kind=GBT".into()],
            task: Some("tillage".into()),
            bundle: None,
            out: None,
            seed: Some(3),
            threads: Some(2),
        };
        let cfg = args.effective().unwrap();
        assert_eq!(cfg.base_seed(), 3);
        assert_eq!(cfg.get("model.kind"), "GBT");
        assert_eq!(cfg.get("task.name"), "tillage");
        assert_eq!(cfg.threads(), 2);
    }

    #[test]
    fn unknown_override_names_key() {
        let err = run(["agbench", "featurize", "--set", "model.colour=red"]).unwrap_err();
        assert_eq!(err.stage, "config");
        assert!(err.message.contains("model.colour"));
        let err = run(["agbench", "featurize"]).unwrap_err();
        assert!(err.message.contains("bundle"));
    }
}
