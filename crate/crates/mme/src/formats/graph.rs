//! Graph TSV. Comment lines carry the format tag and the entity and relation
//! census; then every entity as `kind<TAB>name` in id order, then every
//! triple as `head_kind<TAB>head_name<TAB>relation<TAB>tail_kind<TAB>tail_name`.

use std::io::{BufRead, Write};
use std::path::Path;

use mme_core::kgraph::{graph_stats, EntityKind, KnowledgeGraph, Relation};

use crate::error::{Error, Result};

pub const GRAPH_FORMAT: &str = "mme-graph 1";

pub fn write_graph(mut w: impl Write, g: &KnowledgeGraph) -> Result<()> {
    let stats = graph_stats(g);
    writeln!(w, "# {GRAPH_FORMAT}")?;
    write!(w, "# entities total={}", stats.entity_total())?;
    for k in EntityKind::ALL {
        write!(w, " {}={}", k.as_str(), stats.entities.get(&k).copied().unwrap_or(0))?;
    }
    writeln!(w)?;
    write!(w, "# relations total={}", stats.relation_total())?;
    for r in Relation::ALL {
        write!(w, " {}={}", r.as_str(), stats.relations.get(&r).copied().unwrap_or(0))?;
    }
    writeln!(w)?;
    for e in g.entities() {
        writeln!(w, "{}\t{}", e.kind.as_str(), e.name)?;
    }
    for t in g.triples() {
        let (h, tl) = (g.entity(t.head), g.entity(t.tail));
        writeln!(w, "{}\t{}\t{}\t{}\t{}", h.kind.as_str(), h.name, t.relation.as_str(), tl.kind.as_str(), tl.name)?;
    }
    Ok(())
}

fn kind(s: &str, no: usize) -> Result<EntityKind> {
    EntityKind::parse(s).ok_or_else(|| Error::MalformedRecord(no, format!("unknown entity kind `{s}`")))
}

fn census_total(line: &str, section: &str) -> Option<usize> {
    line.strip_prefix("# ")?
        .strip_prefix(section)?
        .split_whitespace()
        .find_map(|f| f.strip_prefix("total="))?
        .parse()
        .ok()
}

pub fn read_graph(reader: impl BufRead) -> Result<KnowledgeGraph> {
    let mut g = KnowledgeGraph::new();
    let mut tagged = false;
    let (mut want_entities, mut want_triples) = (None, None);
    for (i, line) in reader.lines().enumerate() {
        let no = i + 1;
        let line = line?;
        if !tagged {
            if line.trim() != format!("# {GRAPH_FORMAT}") {
                return Err(Error::Format(format!("expected `# {GRAPH_FORMAT}` on line 1")));
            }
            tagged = true;
            continue;
        }
        if line.starts_with('#') {
            want_entities = want_entities.or(census_total(&line, "entities"));
            want_triples = want_triples.or(census_total(&line, "relations"));
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        match f.len() {
            2 => {
                g.add_entity(kind(f[0], no)?, f[1]);
            }
            5 => {
                let h = g.add_entity(kind(f[0], no)?, f[1]);
                let rel = Relation::parse(f[2]).ok_or_else(|| Error::MalformedRecord(no, format!("unknown relation `{}`", f[2])))?;
                let t = g.add_entity(kind(f[3], no)?, f[4]);
                g.add_triple(h, rel, t).map_err(|e| Error::MalformedRecord(no, e.to_string()))?;
            }
            n => return Err(Error::MalformedRecord(no, format!("{n} fields"))),
        }
    }
    if !tagged {
        return Err(Error::Format("empty graph file".into()));
    }
    let st = graph_stats(&g);
    if want_entities.is_some_and(|n| n != st.entity_total()) || want_triples.is_some_and(|n| n != st.relation_total()) {
        return Err(Error::Format("graph body does not match its census header".into()));
    }
    Ok(g)
}

pub fn load_graph(path: &Path) -> Result<KnowledgeGraph> {
    read_graph(super::open(path)?)
}

pub fn save_graph(path: &Path, g: &KnowledgeGraph) -> Result<()> {
    let mut w = super::create(path)?;
    write_graph(&mut w, g)?;
    w.flush().map_err(|e| Error::io(path, e))
}
