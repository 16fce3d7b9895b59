//! Embedding text file. First line `mme-embedding 1 dim=<d> seed=<s>`, then
//! one line per entity (`kind<TAB>name<TAB>values`) and per relation
//! (`relation<TAB>name<TAB>values`). Values are space separated in shortest
//! round-trip form, so reading a written table gives back identical bits.

use std::io::{BufRead, Write};
use std::path::Path;

use mme_core::kgraph::{EntityKind, Relation};
use mme_core::transe::EmbeddingTable;

use crate::error::{Error, Result};

pub const EMBEDDING_FORMAT: &str = "mme-embedding 1";

fn write_values(w: &mut impl Write, v: &[f64]) -> std::io::Result<()> {
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            w.write_all(b" ")?;
        }
        write!(w, "{x:?}")?;
    }
    writeln!(w)
}

pub fn write_embedding(mut w: impl Write, t: &EmbeddingTable) -> Result<()> {
    writeln!(w, "{EMBEDDING_FORMAT} dim={} seed={}", t.dim, t.seed)?;
    for i in 0..t.entity_count() {
        write!(w, "{}\t{}\t", t.entity_kind(i).as_str(), t.entity_name(i))?;
        write_values(&mut w, t.entity_vec(i))?;
    }
    for r in Relation::ALL {
        write!(w, "relation\t{}\t", r.as_str())?;
        write_values(&mut w, t.relation_vec(r))?;
    }
    Ok(())
}

fn header_field(header: &str, key: &str) -> Result<u64> {
    header
        .split_whitespace()
        .find_map(|f| f.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format(format!("embedding header lacks `{key}`")))
}

pub fn read_embedding(reader: impl BufRead) -> Result<EmbeddingTable> {
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if !header.starts_with(EMBEDDING_FORMAT) {
        return Err(Error::Format(format!("expected `{EMBEDDING_FORMAT}` header")));
    }
    let dim = header_field(&header, "dim")? as usize;
    let seed = header_field(&header, "seed")?;
    let mut entities = Vec::new();
    let mut relations = Vec::new();
    for (i, line) in lines.enumerate() {
        let no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(3, '\t').collect();
        if f.len() != 3 {
            return Err(Error::MalformedRecord(no, "expected kind, name and values".into()));
        }
        let values: Vec<f64> = f[2]
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::MalformedRecord(no, format!("{e}")))?;
        if values.len() != dim {
            return Err(Error::MalformedRecord(no, format!("{} values, dim is {dim}", values.len())));
        }
        if f[0] == "relation" {
            let r = Relation::parse(f[1]).ok_or_else(|| Error::MalformedRecord(no, format!("unknown relation `{}`", f[1])))?;
            relations.push((r, values));
        } else {
            let k = EntityKind::parse(f[0]).ok_or_else(|| Error::MalformedRecord(no, format!("unknown kind `{}`", f[0])))?;
            entities.push((k, f[1].to_string(), values));
        }
    }
    Ok(EmbeddingTable::from_parts(dim, seed, entities, relations)?)
}

pub fn load_embedding(path: &Path) -> Result<EmbeddingTable> {
    read_embedding(super::open(path)?)
}

pub fn save_embedding(path: &Path, t: &EmbeddingTable) -> Result<()> {
    let mut w = super::create(path)?;
    write_embedding(&mut w, t)?;
    w.flush().map_err(|e| Error::io(path, e))
}
