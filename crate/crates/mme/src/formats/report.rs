//! Metrics CSV, score CSV and JSON reports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use mme_core::eval::{LabelEvent, MetricsRow, StabilityReport};
use serde::Serialize;

use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[derive(Serialize)]
struct MetricsLine<'a> {
    period: &'a str,
    tp: usize,
    fp: usize,
    tn: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    fpr: f64,
    fnr: f64,
    f1: f64,
}

pub fn write_metrics_csv(w: impl Write, rows: &[MetricsRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(MetricsLine {
            period: &r.period,
            tp: r.tp,
            fp: r.fp,
            tn: r.tn,
            fn_: r.fn_,
            fpr: r.fpr,
            fnr: r.fnr,
            f1: r.f1,
        })
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreLine {
    pub id: String,
    pub y_true: u8,
    pub f_x: f64,
    pub y_hat: u8,
}

pub fn write_scores_csv(w: impl Write, scores: &[ScoreLine]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in scores {
        out.serialize(s).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StabilityJson {
    mean: f64,
    families: BTreeMap<String, Vec<f64>>,
}

pub fn stability_json(r: &StabilityReport) -> Result<String> {
    let j = StabilityJson {
        mean: r.mean(),
        families: r.families.iter().map(|(f, s)| (f.to_string(), s.clone())).collect(),
    };
    serde_json::to_string_pretty(&j).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Serialize)]
struct LabelJson<'a> {
    sample: &'a str,
    sample_period: String,
    used_at: String,
}

/// Label log with corpus indices replaced by trace ids.
pub fn label_log_json(log: &[LabelEvent], ids: &[String]) -> Result<String> {
    let lines: Vec<LabelJson> = log
        .iter()
        .map(|e| LabelJson {
            sample: &ids[e.sample],
            sample_period: e.sample_period.to_string(),
            used_at: e.used_at.to_string(),
        })
        .collect();
    serde_json::to_string_pretty(&lines).map_err(|e| Error::Format(e.to_string()))
}

/// Two-column whitespace data (`index value`) for gnuplot.
pub fn write_plot_data(mut w: impl Write, label: &str, values: &[f64]) -> Result<()> {
    writeln!(w, "# {label}")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{} {v}", i + 1)?;
    }
    Ok(())
}

pub fn save_text(path: &Path, text: &str) -> Result<()> {
    let mut w = super::create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn save_with(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = super::create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}
