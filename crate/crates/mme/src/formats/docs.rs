//! Documentation corpus: one JSON object per line with fields `api`,
//! `header`, `class`, `description`, `params` (`[{name, dir}]`) and `other`.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use mme_core::docmodel::{ApiDocRecord, Direction, SyntaxParam};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ParamLine {
    name: String,
    dir: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct DocLine {
    api: String,
    #[serde(default)]
    header: String,
    #[serde(default)]
    class: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    params: Vec<ParamLine>,
    #[serde(default)]
    other: String,
}

fn to_record(line: DocLine, no: usize) -> Result<ApiDocRecord> {
    let mut params = Vec::with_capacity(line.params.len());
    for p in line.params {
        let dir = Direction::parse(p.dir.trim())
            .ok_or_else(|| Error::MalformedRecord(no, format!("parameter direction `{}`", p.dir)))?;
        params.push(SyntaxParam::new(p.name, dir));
    }
    ApiDocRecord {
        api_name: line.api,
        header: line.header,
        class_name: line.class,
        description: line.description,
        syntax_params: params,
        other_text: line.other,
    }
    .normalized()
    .map_err(|e| Error::MalformedRecord(no, e.to_string()))
}

pub fn read_docs(reader: impl BufRead) -> Result<Vec<ApiDocRecord>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: DocLine = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord(no, e.to_string()))?;
        let rec = to_record(parsed, no)?;
        if !seen.insert(rec.api_name.clone()) {
            return Err(Error::DuplicateApi(rec.api_name));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn parse_doc_corpus(path: &Path) -> Result<Vec<ApiDocRecord>> {
    read_docs(super::open(path)?).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_docs(mut w: impl Write, records: &[ApiDocRecord]) -> Result<()> {
    for r in records {
        let line = DocLine {
            api: r.api_name.clone(),
            header: r.header.clone(),
            class: r.class_name.clone(),
            description: r.description.clone(),
            params: r
                .syntax_params
                .iter()
                .map(|p| ParamLine {
                    name: p.name.clone(),
                    dir: p.direction.as_str().into(),
                })
                .collect(),
            other: r.other_text.clone(),
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
