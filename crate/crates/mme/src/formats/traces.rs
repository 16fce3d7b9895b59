//! Trace file: one JSON object per line,
//! `{id, y, family, timestamp: "YYYY-MM", calls: [{api, args: [{t, v}]}]}`
//! where `t` is `int` or `str`.

use std::io::{BufRead, Write};
use std::path::Path;

use mme_core::seqembed::{ApiCallEvent, ApiTrace, ArgValue, YearMonth};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "t", content = "v", rename_all = "lowercase")]
enum ArgLine {
    Int(i64),
    Str(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct CallLine {
    api: String,
    #[serde(default)]
    args: Vec<ArgLine>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceLine {
    id: String,
    y: u8,
    family: u32,
    timestamp: String,
    calls: Vec<CallLine>,
}

fn to_trace(l: TraceLine) -> mme_core::Result<ApiTrace> {
    let t = ApiTrace {
        id: l.id,
        y: l.y,
        family: l.family,
        timestamp: YearMonth::parse(&l.timestamp)?,
        calls: l
            .calls
            .into_iter()
            .map(|c| {
                let args = c
                    .args
                    .into_iter()
                    .map(|a| match a {
                        ArgLine::Int(i) => ArgValue::Int(i),
                        ArgLine::Str(s) => ArgValue::Str(s),
                    })
                    .collect();
                ApiCallEvent::new(c.api, args)
            })
            .collect(),
    };
    t.validate()?;
    Ok(t)
}

fn to_line(t: &ApiTrace) -> TraceLine {
    TraceLine {
        id: t.id.clone(),
        y: t.y,
        family: t.family,
        timestamp: t.timestamp.to_string(),
        calls: t
            .calls
            .iter()
            .map(|c| CallLine {
                api: c.api_name.clone(),
                args: c
                    .arguments
                    .iter()
                    .map(|a| match a {
                        ArgValue::Int(i) => ArgLine::Int(*i),
                        ArgValue::Str(s) => ArgLine::Str(s.clone()),
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn read_traces(reader: impl BufRead) -> Result<Vec<ApiTrace>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord(i + 1, e.to_string()))?;
        out.push(to_trace(parsed).map_err(|e| Error::MalformedRecord(i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_traces(mut w: impl Write, traces: &[ApiTrace]) -> Result<()> {
    for t in traces {
        serde_json::to_writer(&mut w, &to_line(t)).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_traces(path: &Path) -> Result<Vec<ApiTrace>> {
    read_traces(super::open(path)?)
}

pub fn save_traces(path: &Path, traces: &[ApiTrace]) -> Result<()> {
    let mut w = super::create(path)?;
    write_traces(&mut w, traces)?;
    w.flush().map_err(|e| Error::io(path, e))
}
