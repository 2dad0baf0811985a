//! Command-line front end. Every artifact goes under `--out-dir`; logs go to
//! stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{precision_of_selected, sort_reports, ModelReport, PredictionSet};
use crate::dataset::Dataset;
use crate::error::{invalid_input, Error, Result};
use crate::exec::{init_thread_pool, Exec};
use crate::experiment::{
    default_split, prepare, run_experiment, write_plot_csv, write_report_csv, ExperimentReport, RunConfig,
    REPORT_SCHEMA,
};
use crate::generators::{CsfRule, CsfRuleSpec, Layout, NcsfRule, CSF_RULE_SCHEMA, GENERATOR_VERSION, NCSF_RULE_SCHEMA};
use crate::io::{
    ingest_csv, read_dataset, read_json, read_predictions, real_to_dataset, write_dataset, write_json,
    write_predictions, write_text, CsvSpec, SplitFile,
};
use crate::learners::{train_model, LearnedModel, ModelKind};
use crate::oracles::{gt_csf_predict_all, gt_ncsf_predict_all};
use crate::series::{autocorrelation, simple_returns, Family};

pub const THREADS_ENV: &str = "CSFBENCH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "csfbench", version, about = "Curve-shape pattern benchmark: generate, train, evaluate")]
pub struct Cli {
    /// Run seed; overrides the config file's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run configuration (JSON, schema csfbench-run-v1).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for every file the command writes.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Only warnings and errors on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic family: dataset.jsonl, split.json and rule.json.
    Generate(GenerateArgs),
    /// Turn a close-price CSV into a labelled dataset.
    Ingest(IngestArgs),
    /// Train one model on the train split of a dataset.
    Train(TrainArgs),
    /// Score a model or a prediction file on the test split.
    Evaluate(EvaluateArgs),
    /// Full experiment over the configured families and models.
    Run,
    /// Autocorrelation of returns.
    Acf(AcfArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    /// Number of windows.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, value_parser = parse_layout)]
    pub layout: Option<Layout>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, default_value = "Date")]
    pub date_column: String,
    /// Defaults to "Adj Close" when present, else "Close".
    #[arg(long)]
    pub close_column: Option<String>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,
    /// Split file; without one the run seed decides the split.
    #[arg(long)]
    pub split: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Trained model files.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// pred-v1 files produced elsewhere.
    #[arg(long = "predictions")]
    pub predictions: Vec<PathBuf>,
    /// Generating rule, for the oracle row.
    #[arg(long)]
    pub rule: Option<PathBuf>,
    /// Use the `selected` flags in prediction files instead of reselecting
    /// the top fraction of their scores.
    #[arg(long)]
    pub native_selection: bool,
}

#[derive(Debug, Args)]
pub struct AcfArgs {
    /// Price CSV; the ACF of its daily returns.
    #[arg(long, conflicts_with = "dataset")]
    pub csv: Option<PathBuf>,
    /// Dataset; the ACF of its next-step returns in file order.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub max_lag: usize,
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_layout(s: &str) -> std::result::Result<Layout, String> {
    match s {
        "independent" => Ok(Layout::Independent),
        "long-path" => Ok(Layout::LongPath),
        _ => Err(format!("unknown layout {s:?} (independent, long-path)")),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
    let level = if cli.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok());
    init_thread_pool(threads);
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let shown = e.to_string();
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                let msg = s.to_string();
                if !shown.contains(&msg) {
                    eprintln!("  caused by: {msg}");
                }
                src = s.source();
            }
            2
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => read_json::<RunConfig>(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = cli.out_dir.as_path();
    let exec = Exec::default();
    match &cli.command {
        Command::Generate(a) => generate(cfg, a, out, exec),
        Command::Ingest(a) => ingest(&cfg, a, out),
        Command::Train(a) => train(&cfg, a, out, exec),
        Command::Evaluate(a) => evaluate(&cfg, a, out, exec),
        Command::Run => run(&cfg, out, exec),
        Command::Acf(a) => acf(a, out),
    }
}

fn generate(mut cfg: RunConfig, a: &GenerateArgs, out: &Path, exec: Exec) -> Result<()> {
    if a.family == Family::Real {
        return Err(invalid_input("the real family comes from `ingest`"));
    }
    if let Some(n) = a.n {
        cfg.n_windows = n;
    }
    if let Some(w) = a.window {
        cfg.window = w;
    }
    if let Some(l) = a.layout {
        cfg.layout = l;
    }
    let prep = prepare(&cfg, a.family, exec)?;
    write_dataset(&out.join("dataset.jsonl"), &prep.dataset)?;
    write_json(&out.join("split.json"), &default_split(&cfg, &prep.dataset)?)?;
    if let Some(rule) = &prep.csf_rule {
        write_json(&out.join("rule.json"), &rule.to_spec())?;
    }
    if let Some(rule) = &prep.ncsf_rule {
        write_json(&out.join("rule.json"), rule)?;
    }
    log::info!(
        "{} windows of family {} (base rate {:.4}) written to {}",
        prep.dataset.len(),
        a.family,
        prep.dataset.base_rate(),
        out.display()
    );
    Ok(())
}

fn ingest(cfg: &RunConfig, a: &IngestArgs, out: &Path) -> Result<()> {
    let spec = CsvSpec {
        path: a.csv.to_string_lossy().into_owned(),
        date_column: a.date_column.clone(),
        close_column: a.close_column.clone(),
        delimiter: a.delimiter,
    };
    let ing = ingest_csv(&spec)?;
    let ds = real_to_dataset(&ing.series, a.window.unwrap_or(cfg.window))?;
    write_dataset(&out.join("dataset.jsonl"), &ds)?;
    write_json(&out.join("split.json"), &default_split(cfg, &ds)?)?;
    log::info!(
        "{} prices from column {:?} ({} rows skipped{}) -> {} windows",
        ing.series.len(),
        ing.price_column,
        ing.rejected.len(),
        if ing.reversed { ", file was newest-first" } else { "" },
        ds.len()
    );
    Ok(())
}

fn load_split(cfg: &RunConfig, path: Option<&Path>, ds: &Dataset) -> Result<SplitFile> {
    match path {
        Some(p) => {
            let split = SplitFile::read(p)?;
            if split.dataset_fingerprint != ds.fingerprint() {
                log::warn!("split file was made for a different dataset fingerprint");
            }
            Ok(split)
        }
        None => default_split(cfg, ds),
    }
}

fn train(cfg: &RunConfig, a: &TrainArgs, out: &Path, exec: Exec) -> Result<()> {
    let ds = read_dataset(&a.dataset)?;
    let split = load_split(cfg, a.split.as_deref(), &ds)?;
    let (train_idx, _) = split.indices(&ds)?;
    let model = train_model(a.model, &ds.subset(&train_idx), &cfg.learners, exec)?;
    let path = out.join(format!("model-{}.json", a.model));
    write_text(&path, &(model.to_json()? + "\n"))?;
    for f in model.flags() {
        log::warn!("model flag: {f}");
    }
    log::info!("{} trained on {} windows -> {}", a.model, train_idx.len(), path.display());
    Ok(())
}

fn read_rule(path: &Path) -> Result<(Option<CsfRule>, Option<NcsfRule>)> {
    let v: serde_json::Value = read_json(path)?;
    match v.get("schema").and_then(|s| s.as_str()) {
        Some(CSF_RULE_SCHEMA) => Ok((Some(CsfRule::from_spec(&serde_json::from_value::<CsfRuleSpec>(v)?)?), None)),
        Some(NCSF_RULE_SCHEMA) => {
            let rule: NcsfRule = serde_json::from_value(v)?;
            rule.validate()?;
            Ok((None, Some(rule)))
        }
        other => Err(Error::UnsupportedSchema {
            found: other.unwrap_or("").into(),
            expected: format!("{CSF_RULE_SCHEMA} | {NCSF_RULE_SCHEMA}"),
        }),
    }
}

fn evaluate(cfg: &RunConfig, a: &EvaluateArgs, out: &Path, exec: Exec) -> Result<()> {
    if a.models.is_empty() && a.predictions.is_empty() && a.rule.is_none() {
        return Err(invalid_input("nothing to evaluate: pass --model, --predictions or --rule"));
    }
    let ds = read_dataset(&a.dataset)?;
    let split = load_split(cfg, a.split.as_deref(), &ds)?;
    let (_, test_idx) = split.indices(&ds)?;
    let test = ds.subset(&test_idx);
    let mut rows: Vec<ModelReport> = Vec::new();

    for path in &a.models {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model = LearnedModel::from_json(&text).map_err(|e| e.context(path.display().to_string()))?;
        let preds = model.predict_top(&test, cfg.selection_rate, exec)?;
        write_predictions(&out.join(format!("pred-{}.jsonl", preds.model)), &preds)?;
        let mut row = precision_of_selected(&preds, &test)?;
        row.flags.extend(model.flags());
        rows.push(row);
    }
    for path in &a.predictions {
        let (mut preds, flags) = read_predictions(path)?;
        let expected: std::collections::HashSet<&str> = split.test.iter().map(String::as_str).collect();
        let got: std::collections::HashSet<&str> = preds.predictions.iter().map(|p| p.id.as_str()).collect();
        if expected != got {
            return Err(invalid_input(format!(
                "{}: prediction ids do not match the test split",
                path.display()
            )));
        }
        if !a.native_selection {
            let ids: Vec<String> = preds.predictions.iter().map(|p| p.id.clone()).collect();
            let scores: Vec<f64> = preds.predictions.iter().map(|p| p.score).collect();
            preds = PredictionSet::from_scores(preds.model, &ids, &scores, cfg.selection_rate);
        }
        let mut row = precision_of_selected(&preds, &test)?;
        row.flags.extend(flags);
        rows.push(row);
    }
    if let Some(path) = &a.rule {
        let oracle = match read_rule(path)? {
            (Some(rule), _) => gt_csf_predict_all(&test, &rule, exec)?,
            (_, Some(rule)) => gt_ncsf_predict_all(&test, &rule, exec)?,
            _ => unreachable!(),
        };
        let row = precision_of_selected(&oracle, &test)?;
        let bound = row.precision_pos;
        rows.push(row);
        rows.iter_mut().for_each(|r| r.oracle_precision = bound);
    }
    sort_reports(&mut rows);
    let report = ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        config_hash: cfg.hash()?,
        seed: cfg.seed,
        generator: GENERATOR_VERSION.into(),
        selection_rate: cfg.selection_rate,
        families: Vec::new(),
        rows,
    };
    write_reports(&report, out)
}

fn write_reports(report: &ExperimentReport, out: &Path) -> Result<()> {
    write_json(&out.join("report.json"), report)?;
    let mut csv_buf = Vec::new();
    write_report_csv(&mut csv_buf, report)?;
    write_text(&out.join("report.csv"), &String::from_utf8_lossy(&csv_buf))?;
    let mut plot = Vec::new();
    write_plot_csv(&mut plot, report)?;
    write_text(&out.join("plot.csv"), &String::from_utf8_lossy(&plot))?;
    for r in &report.rows {
        log::info!(
            "{:<7} {:<16} precision {} (base {:.4}, n_selected {})",
            r.family,
            r.model,
            r.precision_pos.map_or_else(|| "-".into(), |p| format!("{p:.4}")),
            r.base_rate,
            r.n_selected
        );
    }
    Ok(())
}

fn run(cfg: &RunConfig, out: &Path, exec: Exec) -> Result<()> {
    let result = run_experiment(cfg, exec)?;
    write_json(&out.join("config.json"), cfg)?;
    for fam in &result.families {
        let dir = out.join(fam.family.as_str());
        write_dataset(&dir.join("dataset.jsonl"), &fam.dataset)?;
        write_json(&dir.join("split.json"), &fam.split)?;
        if let Some(rule) = &fam.csf_rule {
            write_json(&dir.join("rule.json"), &rule.to_spec())?;
        }
        if let Some(rule) = &fam.ncsf_rule {
            write_json(&dir.join("rule.json"), rule)?;
        }
        for m in &fam.models {
            write_text(&dir.join(format!("model-{}.json", m.kind())), &(m.to_json()? + "\n"))?;
        }
        for p in &fam.predictions {
            write_predictions(&dir.join(format!("pred-{}.jsonl", p.model)), p)?;
        }
    }
    write_reports(&result.report, out)
}

fn acf(a: &AcfArgs, out: &Path) -> Result<()> {
    let returns = match (&a.csv, &a.dataset) {
        (Some(csv), _) => simple_returns(&ingest_csv(&CsvSpec::new(csv.to_string_lossy()))?.series.prices)?,
        (_, Some(ds)) => read_dataset(ds)?.windows.iter().map(|w| w.ret).collect(),
        _ => return Err(invalid_input("pass --csv or --dataset")),
    };
    let acf = autocorrelation(&returns, a.max_lag)?;
    let band = 1.96 / (returns.len() as f64).sqrt();
    let mut text = String::from("lag,acf,band\n");
    for (k, v) in acf.values.iter().enumerate() {
        text.push_str(&format!("{k},{v},{band}\n"));
    }
    write_text(&out.join("acf.csv"), &text)?;
    log::info!("ACF of {} returns to lag {} (95% white-noise band ±{band:.4})", returns.len(), a.max_lag);
    Ok(())
}
