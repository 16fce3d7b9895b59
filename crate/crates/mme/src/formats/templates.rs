//! Relation templates: one JSON object per line, `{relation, pattern, head_slot}`.

use std::io::{BufRead, Write};
use std::path::Path;

use mme_core::kgraph::{Relation, RelationTemplate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct TemplateLine {
    relation: String,
    pattern: String,
    head_slot: u8,
}

pub fn read_templates(reader: impl BufRead) -> Result<Vec<RelationTemplate>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: TemplateLine = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord(i + 1, e.to_string()))?;
        let rel = Relation::parse(&t.relation)
            .ok_or_else(|| Error::MalformedRecord(i + 1, format!("unknown relation `{}`", t.relation)))?;
        out.push(RelationTemplate::new(rel, &t.pattern, t.head_slot).map_err(|e| Error::MalformedRecord(i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn load_templates(path: &Path) -> Result<Vec<RelationTemplate>> {
    read_templates(super::open(path)?)
}

pub fn write_templates(mut w: impl Write, templates: &[RelationTemplate]) -> Result<()> {
    for t in templates {
        let line = TemplateLine {
            relation: t.relation.as_str().into(),
            pattern: t.pattern.clone(),
            head_slot: t.head_slot,
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
