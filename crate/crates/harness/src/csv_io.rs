//! CSV emission and parsing.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a file
//! back yields bit-identical values. Missing regret is an empty field.

use std::io::Write;
use std::path::Path;

use crate::aggregate::AggregateRow;
use crate::error::{HarnessError, Result};
use crate::runner::RunRecord;

pub const RAW_HEADER: [&str; 8] = [
    "env",
    "algo",
    "seed",
    "episode",
    "train_return",
    "eval_return",
    "cum_regret",
    "wall_ms",
];

pub const AGGREGATE_HEADER: [&str; 6] = ["env", "algo", "episode", "mean_eval", "ci_low", "ci_high"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_raw_to<W: Write>(out: W, records: &[RunRecord]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RAW_HEADER)?;
    for r in records {
        w.write_record([
            r.env.clone(),
            r.algo.clone(),
            r.seed.to_string(),
            r.episode.to_string(),
            r.train_return.to_string(),
            r.eval_return.to_string(),
            opt(r.cum_regret),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_raw(path: &Path, records: &[RunRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_raw_to(file, records).map_err(csv_err(path))
}

pub fn write_aggregate_to<W: Write>(out: W, rows: &[AggregateRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.env.clone(),
            r.algo.clone(),
            r.episode.to_string(),
            r.mean_eval.to_string(),
            opt(r.ci.map(|c| c.0)),
            opt(r.ci.map(|c| c.1)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_aggregate_to(file, rows).map_err(csv_err(path))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| HarnessError::Format(format!("line {line}: bad `{}` field", RAW_HEADER[i])))
}

pub fn read_raw_from<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::ReaderBuilder::new().from_reader(input);
    let header = rd
        .headers()
        .map_err(|e| HarnessError::Format(e.to_string()))?
        .clone();
    if header.iter().ne(RAW_HEADER) {
        return Err(HarnessError::Format("unexpected raw CSV header".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Format(e.to_string()))?;
        let line = i as u64 + 2;
        let regret = rec.get(6).unwrap_or("");
        out.push(RunRecord {
            env: rec.get(0).unwrap_or("").to_string(),
            algo: rec.get(1).unwrap_or("").to_string(),
            seed: field(&rec, 2, line)?,
            episode: field(&rec, 3, line)?,
            train_return: field(&rec, 4, line)?,
            eval_return: field(&rec, 5, line)?,
            cum_regret: if regret.is_empty() {
                None
            } else {
                Some(field(&rec, 6, line)?)
            },
            wall_ms: field(&rec, 7, line)?,
        });
    }
    Ok(out)
}

pub fn read_raw(path: &Path) -> Result<Vec<RunRecord>> {
    let file = std::fs::File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_raw_from(file)
}
