//! File formats: datasets and predictions as JSONL, split files, JSON
//! documents, and close-price CSV ingestion for real series.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::{Prediction, PredictionSet};
use crate::dataset::{Dataset, Label, LabeledWindow, Provenance};
use crate::error::{invalid_input, Error, Result};
use crate::series::{Family, PriceSeries};

pub const DATASET_SCHEMA: &str = "csfbench-v1";
pub const PREDICTION_SCHEMA: &str = "pred-v1";
pub const SPLIT_SCHEMA: &str = "split-v1";
pub const REAL_GENERATOR: &str = "csv-ingest/1";
pub const MIN_CSV_ROWS: usize = 21;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty JSON plus a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

/// Non-empty lines with their 1-based line numbers.
fn jsonl_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn parse_line<T: DeserializeOwned>(path: &Path, line: usize, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line,
        msg: e.to_string(),
    })
}

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::UnsupportedSchema {
            found: found.into(),
            expected: expected.into(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetHeader {
    schema: String,
    family: Family,
    config_hash: String,
    seed: u64,
    generator: String,
    window: usize,
    overlapping: bool,
    n_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowRecord {
    id: String,
    family: Family,
    prices: Vec<f64>,
    label: u8,
    ret: f64,
}

pub fn write_dataset_to<W: Write>(mut w: W, dataset: &Dataset) -> Result<()> {
    let p = &dataset.provenance;
    let header = DatasetHeader {
        schema: DATASET_SCHEMA.into(),
        family: dataset.family,
        config_hash: p.config_hash.clone(),
        seed: p.seed,
        generator: p.generator.clone(),
        window: p.window,
        overlapping: p.overlapping,
        n_windows: dataset.len(),
    };
    let io = |e| Error::io("<dataset>", e);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n").map_err(io)?;
    for win in &dataset.windows {
        let rec = WindowRecord {
            id: win.id.clone(),
            family: dataset.family,
            prices: win.prices.clone(),
            label: win.label.as_u8(),
            ret: win.ret,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = create(path)?;
    write_dataset_to(&mut w, dataset).map_err(|e| e.context(path.display().to_string()))?;
    finish(w, path)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let lines = jsonl_lines(path)?;
    let parse_err = |line, msg: String| Error::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let (hline, htext) = lines.first().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let schema: serde_json::Value = parse_line(path, *hline, htext)?;
    check_schema(schema.get("schema").and_then(|s| s.as_str()).unwrap_or(""), DATASET_SCHEMA)?;
    let header: DatasetHeader = parse_line(path, *hline, htext)?;
    let mut windows = Vec::with_capacity(header.n_windows);
    for (line, text) in &lines[1..] {
        let rec: WindowRecord = parse_line(path, *line, text)?;
        if rec.family != header.family {
            return Err(parse_err(*line, format!("family {} differs from header {}", rec.family, header.family)));
        }
        let label = match rec.label {
            1 => Label::Positive,
            0 => Label::Negative,
            other => return Err(parse_err(*line, format!("label {other} is not 0 or 1"))),
        };
        if label != Label::from_return(rec.ret) {
            return Err(parse_err(*line, format!("label {} disagrees with return {}", rec.label, rec.ret)));
        }
        windows.push(LabeledWindow {
            id: rec.id,
            prices: rec.prices,
            label,
            ret: rec.ret,
        });
    }
    if windows.len() != header.n_windows {
        return Err(parse_err(
            lines.last().map_or(1, |l| l.0),
            format!("{} windows, header declares {} (truncated file?)", windows.len(), header.n_windows),
        ));
    }
    let dataset = Dataset {
        family: header.family,
        provenance: Provenance {
            config_hash: header.config_hash,
            seed: header.seed,
            generator: header.generator,
            window: header.window,
            overlapping: header.overlapping,
        },
        windows,
    };
    dataset.validate().map_err(|e| e.context(path.display().to_string()))?;
    Ok(dataset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionHeader {
    schema: String,
    model: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionRecord {
    id: String,
    score: f64,
    selected: u8,
}

pub fn write_predictions(path: &Path, preds: &PredictionSet) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    serde_json::to_writer(
        &mut w,
        &PredictionHeader {
            schema: PREDICTION_SCHEMA.into(),
            model: preds.model.clone(),
            flags: Vec::new(),
        },
    )?;
    w.write_all(b"\n").map_err(io)?;
    for p in &preds.predictions {
        let rec = PredictionRecord {
            id: p.id.clone(),
            score: p.score,
            selected: u8::from(p.selected),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(io)?;
    }
    finish(w, path)
}

/// Reads a prediction file; header flags (e.g. a diverged external run) are
/// returned alongside.
pub fn read_predictions(path: &Path) -> Result<(PredictionSet, Vec<String>)> {
    let lines = jsonl_lines(path)?;
    let (hline, htext) = lines.first().ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let schema: serde_json::Value = parse_line(path, *hline, htext)?;
    check_schema(schema.get("schema").and_then(|s| s.as_str()).unwrap_or(""), PREDICTION_SCHEMA)?;
    let header: PredictionHeader = parse_line(path, *hline, htext)?;
    let mut predictions = Vec::with_capacity(lines.len() - 1);
    for (line, text) in &lines[1..] {
        let rec: PredictionRecord = parse_line(path, *line, text)?;
        if rec.selected > 1 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: *line,
                msg: format!("selected must be 0 or 1, got {}", rec.selected),
            });
        }
        predictions.push(Prediction {
            id: rec.id,
            score: rec.score,
            selected: rec.selected == 1,
        });
    }
    Ok((
        PredictionSet {
            model: header.model,
            predictions,
        },
        header.flags,
    ))
}

/// Train/test window ids shared with external model runners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFile {
    pub schema: String,
    pub dataset_fingerprint: String,
    pub seed: u64,
    pub test_fraction: f64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl SplitFile {
    pub fn new(dataset: &Dataset, train: &[usize], test: &[usize], seed: u64, test_fraction: f64) -> Result<Self> {
        let ids = |idx: &[usize]| idx.iter().map(|&i| dataset.windows[i].id.clone()).collect::<Vec<_>>();
        let split = Self {
            schema: SPLIT_SCHEMA.into(),
            dataset_fingerprint: dataset.fingerprint(),
            seed,
            test_fraction,
            train: ids(train),
            test: ids(test),
        };
        split.check_disjoint()?;
        Ok(split)
    }

    pub fn check_disjoint(&self) -> Result<()> {
        let train: HashSet<&str> = self.train.iter().map(String::as_str).collect();
        if let Some(id) = self.test.iter().find(|id| train.contains(id.as_str())) {
            return Err(invalid_input(format!("window {id} is in both train and test")));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let v: serde_json::Value = read_json(path)?;
        check_schema(v.get("schema").and_then(|s| s.as_str()).unwrap_or(""), SPLIT_SCHEMA)?;
        let split: Self = serde_json::from_value(v)?;
        split.check_disjoint()?;
        Ok(split)
    }

    /// Positions of the train and test ids in `dataset`.
    pub fn indices(&self, dataset: &Dataset) -> Result<(Vec<usize>, Vec<usize>)> {
        let pos: std::collections::HashMap<&str, usize> = dataset
            .windows
            .iter()
            .enumerate()
            .map(|(i, w)| (w.id.as_str(), i))
            .collect();
        let lookup = |ids: &[String]| {
            ids.iter()
                .map(|id| {
                    pos.get(id.as_str())
                        .copied()
                        .ok_or_else(|| invalid_input(format!("split names unknown window {id}")))
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok((lookup(&self.train)?, lookup(&self.test)?))
    }
}

/// Where to find the dates and prices in a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSpec {
    pub path: String,
    #[serde(default = "default_date_column")]
    pub date_column: String,
    /// `None` picks "Adj Close" when present, else "Close".
    #[serde(default)]
    pub close_column: Option<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_date_column() -> String {
    "Date".into()
}
fn default_delimiter() -> char {
    ','
}

impl CsvSpec {
    pub fn new(path: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            date_column: default_date_column(),
            close_column: None,
            delimiter: default_delimiter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub series: PriceSeries,
    /// 1-based file line numbers (header is line 1) and reasons.
    pub rejected: Vec<(usize, String)>,
    pub price_column: String,
    pub reversed: bool,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    ["%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y", "%d.%m.%Y", "%Y%m%d"]
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s.trim(), f).ok())
}

pub fn ingest_csv(spec: &CsvSpec) -> Result<Ingested> {
    let path = Path::new(&spec.path);
    if !spec.delimiter.is_ascii() {
        return Err(invalid_input(format!("delimiter {:?} is not ASCII", spec.delimiter)));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter as u8)
        .flexible(true)
        .from_reader(open(path)?);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let date_idx = col(&spec.date_column)
        .ok_or_else(|| invalid_input(format!("{}: no column {:?}", spec.path, spec.date_column)))?;
    let price_column = match &spec.close_column {
        Some(c) => c.clone(),
        None if col("Adj Close").is_some() => "Adj Close".into(),
        None => "Close".into(),
    };
    let price_idx =
        col(&price_column).ok_or_else(|| invalid_input(format!("{}: no column {price_column:?}", spec.path)))?;

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    let mut rejected = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                rejected.push((line, e.to_string()));
                continue;
            }
        };
        let date = rec.get(date_idx).and_then(parse_date);
        let price = rec.get(price_idx).and_then(|s| s.trim().parse::<f64>().ok());
        match (date, price) {
            (None, _) => rejected.push((line, format!("bad date {:?}", rec.get(date_idx).unwrap_or("")))),
            (_, Some(p)) if p.is_finite() && p > 0.0 => rows.push((date.expect("checked"), p)),
            _ => rejected.push((line, format!("bad price {:?}", rec.get(price_idx).unwrap_or("")))),
        }
    }
    for (line, why) in &rejected {
        log::warn!("{}:{line}: row skipped: {why}", spec.path);
    }
    if rows.len() < MIN_CSV_ROWS {
        return Err(invalid_input(format!(
            "{}: {} valid rows, at least {MIN_CSV_ROWS} needed",
            spec.path,
            rows.len()
        )));
    }
    let reversed = rows.first().map(|r| r.0) > rows.last().map(|r| r.0);
    if reversed {
        rows.reverse();
    }
    if rows.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(invalid_input(format!("{}: dates are not in a consistent order", spec.path)));
    }
    let id = path
        .file_stem()
        .map_or_else(|| "series".to_string(), |s| s.to_string_lossy().into_owned());
    let mut series = PriceSeries::new(id, rows.iter().map(|r| r.1).collect(), Family::Real)?;
    series.meta.insert("price_column".into(), price_column.clone());
    series.meta.insert("first_date".into(), rows[0].0.to_string());
    series.meta.insert("last_date".into(), rows[rows.len() - 1].0.to_string());
    Ok(Ingested {
        series,
        rejected,
        price_column,
        reversed,
    })
}

/// Stride-1 windows of `window` prices, each labelled by the return of the
/// following day. Neighbouring windows share prices.
pub fn real_to_dataset(series: &PriceSeries, window: usize) -> Result<Dataset> {
    if window < 2 {
        return Err(invalid_input(format!("window {window} < 2")));
    }
    let p = &series.prices;
    if p.len() < window + 1 {
        return Err(invalid_input(format!(
            "series {} has {} prices; a window of {window} needs at least {}",
            series.id,
            p.len(),
            window + 1
        )));
    }
    let windows = (0..p.len() - window)
        .map(|i| {
            LabeledWindow::new(
                format!("{}-{i:06}", series.id),
                p[i..i + window].to_vec(),
                p[i + window] / p[i + window - 1] - 1.0,
            )
        })
        .collect();
    let mut h = Sha256::new();
    h.update(series.id.as_bytes());
    for x in p {
        h.update(x.to_bits().to_le_bytes());
    }
    h.update((window as u64).to_le_bytes());
    Ok(Dataset {
        family: Family::Real,
        provenance: Provenance {
            config_hash: hex::encode(h.finalize()),
            seed: 0,
            generator: REAL_GENERATOR.into(),
            window,
            overlapping: true,
        },
        windows,
    })
}
