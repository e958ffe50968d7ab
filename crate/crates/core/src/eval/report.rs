//! CSV outputs: per-window results, drift events and seed-averaged summaries.
//!
//! Every file may start with `#` comment lines echoing the resolved
//! configuration; readers skip them.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::bench::SummaryRow;
use super::harness::{Method, RunResult};

pub const RESULTS_COLUMNS: [&str; 13] = [
    "run_id",
    "method",
    "dataset",
    "alpha",
    "window_end_index",
    "accuracy",
    "epsilon",
    "state",
    "drift_flag",
    "rl_size",
    "query_count",
    "mean_density",
    "note",
];

const SUMMARY_COLUMNS: [&str; 12] = [
    "method",
    "alpha",
    "dataset",
    "runs",
    "failures",
    "accuracy_mean",
    "accuracy_std",
    "drifts_mean",
    "detected_mean",
    "delay_mean",
    "false_alarms_mean",
    "queries_mean",
];

fn create(path: &Path, header: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for line in header {
        writeln!(out, "# {line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(csv::Writer::from_writer(out))
}

fn finish(w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results_csv(path: &Path, header: &[String], runs: &[RunResult]) -> Result<()> {
    let mut w = create(path, header)?;
    w.write_record(RESULTS_COLUMNS)?;
    for r in runs {
        for rec in &r.windows {
            w.write_record([
                r.run_id.clone(),
                r.method.to_string(),
                r.dataset.clone(),
                r.alpha.to_string(),
                rec.window_end_index.to_string(),
                rec.accuracy.to_string(),
                opt(rec.epsilon),
                rec.state.to_string(),
                u8::from(rec.drift_flag).to_string(),
                rec.rl_size.to_string(),
                rec.query_count.to_string(),
                opt(rec.mean_density),
                rec.note.clone(),
            ])?;
        }
    }
    finish(w, path)
}

pub fn write_events_csv(path: &Path, header: &[String], runs: &[RunResult]) -> Result<()> {
    let mut w = create(path, header)?;
    w.write_record(["run_id", "instance_index"])?;
    for r in runs {
        for e in &r.drift_events {
            w.write_record([r.run_id.clone(), e.to_string()])?;
        }
    }
    finish(w, path)
}

pub fn write_summary_csv(path: &Path, header: &[String], rows: &[SummaryRow]) -> Result<()> {
    let mut w = create(path, header)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.alpha.to_string(),
            r.dataset.clone(),
            r.runs.to_string(),
            r.failures.to_string(),
            r.accuracy_mean.to_string(),
            r.accuracy_std.to_string(),
            r.drifts_mean.to_string(),
            r.detected_mean.to_string(),
            opt(r.delay_mean),
            r.false_alarms_mean.to_string(),
            r.queries_mean.to_string(),
        ])?;
    }
    finish(w, path)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file))
}

fn field<'r>(
    path: &Path,
    headers: &csv::StringRecord,
    row: &'r csv::StringRecord,
    name: &str,
) -> Result<&'r str> {
    let line = row.position().map_or(0, |p| p.line());
    headers
        .iter()
        .position(|h| h == name)
        .and_then(|i| row.get(i))
        .ok_or_else(|| Error::Ingest {
            path: path.to_path_buf(),
            row: line,
            message: format!("missing column `{name}`"),
        })
}

fn parse<T: std::str::FromStr>(path: &Path, row: &csv::StringRecord, name: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Ingest {
        path: path.to_path_buf(),
        row: row.position().map_or(0, |p| p.line()),
        message: format!("bad value `{v}` in column `{name}`"),
    })
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |name: &str| field(path, &headers, &rec, name);
        let num = |name: &str| -> Result<f64> { parse(path, &rec, name, get(name)?) };
        let delay = get("delay_mean")?;
        rows.push(SummaryRow {
            method: get("method")?.parse::<Method>()?,
            alpha: num("alpha")?,
            dataset: get("dataset")?.to_string(),
            runs: parse(path, &rec, "runs", get("runs")?)?,
            failures: parse(path, &rec, "failures", get("failures")?)?,
            accuracy_mean: num("accuracy_mean")?,
            accuracy_std: num("accuracy_std")?,
            drifts_mean: num("drifts_mean")?,
            detected_mean: num("detected_mean")?,
            delay_mean: if delay.is_empty() {
                None
            } else {
                Some(parse(path, &rec, "delay_mean", delay)?)
            },
            false_alarms_mean: num("false_alarms_mean")?,
            queries_mean: num("queries_mean")?,
        });
    }
    Ok(rows)
}

/// Drift event indices per run, in file order of first appearance.
pub fn read_events_csv(path: &Path) -> Result<Vec<(String, Vec<u64>)>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let mut order: Vec<String> = Vec::new();
    let mut events: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let run = field(path, &headers, &rec, "run_id")?.to_string();
        let idx: u64 = parse(path, &rec, "instance_index", field(path, &headers, &rec, "instance_index")?)?;
        if !events.contains_key(&run) {
            order.push(run.clone());
        }
        events.entry(run).or_default().push(idx);
    }
    Ok(order
        .into_iter()
        .map(|r| {
            let e = events.remove(&r).unwrap_or_default();
            (r, e)
        })
        .collect())
}

/// One text line per run marking drift events on a `width`-column axis
/// spanning `[0, length)`.
pub fn render_strips(runs: &[(String, Vec<u64>)], length: u64, width: usize) -> String {
    let label_w = runs.iter().map(|(r, _)| r.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (run, events) in runs {
        let mut cells = vec!['.'; width];
        for &e in events {
            let col = ((e as u128 * width as u128) / length.max(1) as u128) as usize;
            cells[col.min(width - 1)] = '|';
        }
        let strip: String = cells.into_iter().collect();
        out.push_str(&format!("{run:<label_w$}  {strip}  {}\n", events.len()));
    }
    out
}
