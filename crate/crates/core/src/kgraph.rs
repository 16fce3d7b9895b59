//! Heterogeneous API knowledge graph: six entity kinds, eight relation types.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use regex_automata::meta::Regex;

use crate::docmodel::{normalize_sentences, split_sentences, tokens, ApiDocRecord, Direction, Sentence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Api,
    Header,
    Class,
    Parameter,
    Action,
    Prototype,
}

impl EntityKind {
    pub const ALL: [EntityKind; 6] = [
        EntityKind::Api,
        EntityKind::Header,
        EntityKind::Class,
        EntityKind::Parameter,
        EntityKind::Action,
        EntityKind::Prototype,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Api => "API",
            EntityKind::Header => "header",
            EntityKind::Class => "class",
            EntityKind::Parameter => "parameter",
            EntityKind::Action => "action",
            EntityKind::Prototype => "prototype",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    FunctionOf,
    Inheritance,
    Input,
    Output,
    UseAction,
    ExtendFrom,
    BundledWith,
    ReplacedBy,
}

impl Relation {
    pub const ALL: [Relation; 8] = [
        Relation::FunctionOf,
        Relation::Inheritance,
        Relation::Input,
        Relation::Output,
        Relation::UseAction,
        Relation::ExtendFrom,
        Relation::BundledWith,
        Relation::ReplacedBy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::FunctionOf => "function_of",
            Relation::Inheritance => "inheritance",
            Relation::Input => "input",
            Relation::Output => "output",
            Relation::UseAction => "use_action",
            Relation::ExtendFrom => "extend_from",
            Relation::BundledWith => "bundled_with",
            Relation::ReplacedBy => "replaced_by",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether `head -[relation]-> tail` is a legal edge of the graph schema.
pub fn schema_allows(head: EntityKind, relation: Relation, tail: EntityKind) -> bool {
    use EntityKind::*;
    match relation {
        Relation::FunctionOf => head == Api && matches!(tail, Header | Class),
        Relation::Inheritance => head == Class && tail == Class,
        Relation::Input | Relation::Output => head == Api && tail == Parameter,
        Relation::UseAction => head == Api && tail == Action,
        Relation::ExtendFrom => head == Api && tail == Prototype,
        Relation::BundledWith | Relation::ReplacedBy => head == Api && tail == Api,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: Relation,
    pub tail: EntityId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    entities: Vec<Entity>,
    index: BTreeMap<(EntityKind, String), EntityId>,
    triples: BTreeSet<Triple>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `(kind, name)`, inserting the entity if needed.
    pub fn add_entity(&mut self, kind: EntityKind, name: &str) -> EntityId {
        if let Some(id) = self.index.get(&(kind, name.to_string())) {
            return *id;
        }
        let id = EntityId(self.entities.len() as u32);
        self.entities.push(Entity {
            id,
            kind,
            name: name.to_string(),
        });
        self.index.insert((kind, name.to_string()), id);
        id
    }

    /// Inserts a triple after checking its endpoint kinds against the schema.
    /// Returns `false` when the triple was already present.
    pub fn add_triple(&mut self, head: EntityId, relation: Relation, tail: EntityId) -> Result<bool> {
        let (hk, tk) = match (self.entities.get(head.index()), self.entities.get(tail.index())) {
            (Some(h), Some(t)) => (h.kind, t.kind),
            (None, _) => return Err(Error::UnknownEntity(alloc::format!("#{}", head.0))),
            (_, None) => return Err(Error::UnknownEntity(alloc::format!("#{}", tail.0))),
        };
        if !schema_allows(hk, relation, tk) {
            return Err(Error::SchemaViolation {
                head_kind: hk.as_str(),
                relation: relation.as_str(),
                tail_kind: tk.as_str(),
            });
        }
        Ok(self.triples.insert(Triple { head, relation, tail }))
    }

    pub fn find(&self, kind: EntityKind, name: &str) -> Option<EntityId> {
        self.index.get(&(kind, name.to_string())).copied()
    }

    pub fn entity(&self, id: EntityId) -> &Entity {
        &self.entities[id.index()]
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities_of(&self, kind: EntityKind) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(move |e| e.kind == kind)
    }

    /// APIs reachable through a `replaced_by` edge (either direction) or
    /// sharing an `extend_from` prototype with `api`.
    pub fn equivalent_apis(&self, api: EntityId) -> BTreeSet<EntityId> {
        let mut out = BTreeSet::new();
        let mut protos = BTreeSet::new();
        for t in &self.triples {
            match t.relation {
                Relation::ReplacedBy if t.head == api => {
                    out.insert(t.tail);
                }
                Relation::ReplacedBy if t.tail == api => {
                    out.insert(t.head);
                }
                Relation::ExtendFrom if t.head == api => {
                    protos.insert(t.tail);
                }
                _ => {}
            }
        }
        if !protos.is_empty() {
            for t in &self.triples {
                if t.relation == Relation::ExtendFrom && protos.contains(&t.tail) {
                    out.insert(t.head);
                }
            }
        }
        out.remove(&api);
        out
    }

    /// Entities adjacent to `id` through any relation, ignoring direction.
    pub fn neighbors(&self, id: EntityId) -> BTreeSet<EntityId> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            if t.head == id {
                out.insert(t.tail);
            } else if t.tail == id {
                out.insert(t.head);
            }
        }
        out
    }
}

const SUFFIXES: [&str; 4] = ["Transacted", "Advanced", "Ex", "A"];

/// Strips adaptation suffixes (`Transacted`, `Advanced`, `Ex`, `A`, `W`,
/// decimal digits) from the end of an API name until none applies. A suffix
/// is only removed when something remains.
pub fn derive_prototype(api_name: &str) -> String {
    let mut s = api_name;
    loop {
        let mut stripped = false;
        for suffix in SUFFIXES.iter().copied().chain(core::iter::once("W")) {
            if s.len() > suffix.len() && s.ends_with(suffix) {
                s = &s[..s.len() - suffix.len()];
                stripped = true;
                break;
            }
        }
        if !stripped && s.len() > 1 && s.as_bytes()[s.len() - 1].is_ascii_digit() {
            s = &s[..s.len() - 1];
            stripped = true;
        }
        if !stripped {
            return s.to_string();
        }
    }
}

pub const DEFAULT_VERBS: &[&str] = &[
    "Allocate", "Close", "Commit", "Connect", "Copy", "Create", "Delete", "Destroy", "Display",
    "Enumerate", "Establish", "Free", "Initialize", "Install", "Load", "Map", "Move", "Open",
    "Query", "Read", "Receive", "Register", "Reserve", "Retrieve", "Search", "Send", "Set",
    "Start", "Suspend", "Terminate", "Write",
];

pub fn default_lexicon() -> BTreeSet<String> {
    DEFAULT_VERBS.iter().map(|s| s.to_string()).collect()
}

fn stem_candidates(token: &str) -> Vec<String> {
    let lower = token.to_ascii_lowercase();
    let mut out = alloc::vec![lower.clone()];
    if let Some(stem) = lower.strip_suffix("ies") {
        let mut s = stem.to_string();
        s.push('y');
        out.push(s);
    }
    for suffix in ["ing", "ed", "es", "s"] {
        if let Some(stem) = lower.strip_suffix(suffix) {
            if !stem.is_empty() {
                out.push(stem.to_string());
            }
        }
    }
    out
}

/// Verbs of the description's summary sentence that appear in `lexicon`,
/// returned in lexicon spelling, first occurrence order, without repeats.
pub fn extract_action(record: &ApiDocRecord, lexicon: &BTreeSet<String>) -> Vec<String> {
    let lowered: BTreeMap<String, &String> = lexicon.iter().map(|l| (l.to_ascii_lowercase(), l)).collect();
    let Some(first) = split_sentences(&record.description).into_iter().next() else {
        return Vec::new();
    };
    let mut out: Vec<String> = Vec::new();
    for tok in tokens(first) {
        let hit = stem_candidates(tok).into_iter().find_map(|c| lowered.get(&c).copied());
        if let Some(canonical) = hit {
            if !out.iter().any(|o| o == canonical) {
                out.push(canonical.clone());
            }
        }
    }
    out
}

pub const API_PLACEHOLDER: &str = "{API}";
const API_CAPTURE: &str = r"\b([A-Za-z_][A-Za-z0-9_]*)\b";

/// A regular expression with two `{API}` placeholders describing a
/// `bundled_with` or `replaced_by` relation between the bound APIs.
#[derive(Debug, Clone)]
pub struct RelationTemplate {
    pub relation: Relation,
    pub pattern: String,
    /// Which placeholder (1 or 2) binds the head API.
    pub head_slot: u8,
    regex: Regex,
}

impl RelationTemplate {
    pub fn new(relation: Relation, pattern: &str, head_slot: u8) -> Result<Self> {
        let invalid = || Error::InvalidTemplate(pattern.to_string());
        if !matches!(relation, Relation::BundledWith | Relation::ReplacedBy) {
            return Err(invalid());
        }
        if pattern.matches(API_PLACEHOLDER).count() != 2 || !matches!(head_slot, 1 | 2) {
            return Err(invalid());
        }
        let compiled = pattern.replace(API_PLACEHOLDER, API_CAPTURE);
        let regex = Regex::new(&compiled).map_err(|_| invalid())?;
        if regex.captures_len() != 3 {
            // Extra capturing groups in the pattern would shift the slots.
            return Err(invalid());
        }
        Ok(Self {
            relation,
            pattern: pattern.to_string(),
            head_slot,
            regex,
        })
    }

    fn matches<'s>(&self, text: &'s str) -> Vec<(&'s str, &'s str)> {
        let mut out = Vec::new();
        for caps in self.regex.captures_iter(text) {
            if let (Some(a), Some(b)) = (caps.get_group(1), caps.get_group(2)) {
                out.push((&text[a.start..a.end], &text[b.start..b.end]));
            }
        }
        out
    }
}

/// An API-to-API relation recovered from free text, by API name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationMention {
    pub head: String,
    pub relation: Relation,
    pub tail: String,
}

/// Runs every template over the sentences that mention at least two APIs.
/// Placeholders only bind to names in the sentence's mention list. All
/// matches of all templates are kept; the result is sorted and unique.
pub fn extract_template_relations(sentences: &[Sentence], templates: &[RelationTemplate]) -> Vec<RelationMention> {
    let mut out = BTreeSet::new();
    for s in sentences.iter().filter(|s| s.api_mentions.len() >= 2) {
        for t in templates {
            for (first, second) in t.matches(&s.text) {
                let known = |n: &str| s.api_mentions.iter().any(|m| m == n);
                if !known(first) || !known(second) || first == second {
                    continue;
                }
                let (head, tail) = if t.head_slot == 1 { (first, second) } else { (second, first) };
                out.insert(RelationMention {
                    head: head.to_string(),
                    relation: t.relation,
                    tail: tail.to_string(),
                });
            }
        }
    }
    out.into_iter().collect()
}

/// `(class, parent)` pairs from sentences of the form
/// "<class> [interface|class] inherits from [the] <parent>".
pub fn extract_inheritance(text: &str) -> Vec<(String, String)> {
    // Compiled per call; graph construction runs once per corpus.
    let re = Regex::new(
        r"\b([A-Z][A-Za-z0-9_]*)\s+(?:interface\s+|class\s+)?inherits\s+from\s+(?:the\s+)?([A-Z][A-Za-z0-9_]*)",
    )
    .expect("static pattern");
    let mut out = Vec::new();
    for caps in re.captures_iter(text) {
        if let (Some(a), Some(b)) = (caps.get_group(1), caps.get_group(2)) {
            out.push((text[a.start..a.end].to_string(), text[b.start..b.end].to_string()));
        }
    }
    out
}

/// Builds the knowledge graph from documentation records.
pub fn build_graph(
    records: &[ApiDocRecord],
    templates: &[RelationTemplate],
    lexicon: &BTreeSet<String>,
) -> Result<KnowledgeGraph> {
    crate::docmodel::validate_corpus(records)?;
    let names = crate::docmodel::corpus_names(records);
    let mut g = KnowledgeGraph::new();
    let mut sentences = Vec::new();

    for r in records {
        let api = g.add_entity(EntityKind::Api, &r.api_name);
        if !r.header.is_empty() {
            let h = g.add_entity(EntityKind::Header, &r.header);
            g.add_triple(api, Relation::FunctionOf, h)?;
        }
        if !r.class_name.is_empty() {
            let c = g.add_entity(EntityKind::Class, &r.class_name);
            g.add_triple(api, Relation::FunctionOf, c)?;
        }
        for p in &r.syntax_params {
            let pid = g.add_entity(EntityKind::Parameter, &p.name);
            let rel = match p.direction {
                Direction::In => Relation::Input,
                Direction::Out => Relation::Output,
            };
            g.add_triple(api, rel, pid)?;
        }
        for action in extract_action(r, lexicon) {
            let a = g.add_entity(EntityKind::Action, &action);
            g.add_triple(api, Relation::UseAction, a)?;
        }
        let proto = derive_prototype(&r.api_name);
        if proto != r.api_name {
            let p = g.add_entity(EntityKind::Prototype, &proto);
            g.add_triple(api, Relation::ExtendFrom, p)?;
        }
        sentences.extend(normalize_sentences(r, &names));
    }

    for r in records {
        for text in [&r.other_text] {
            for (child, parent) in extract_inheritance(text) {
                let c = g.add_entity(EntityKind::Class, &child);
                let p = g.add_entity(EntityKind::Class, &parent);
                if c != p {
                    g.add_triple(c, Relation::Inheritance, p)?;
                }
            }
        }
    }

    for m in extract_template_relations(&sentences, templates) {
        let (Some(h), Some(t)) = (g.find(EntityKind::Api, &m.head), g.find(EntityKind::Api, &m.tail)) else {
            continue;
        };
        g.add_triple(h, m.relation, t)?;
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    pub entities: BTreeMap<EntityKind, usize>,
    pub relations: BTreeMap<Relation, usize>,
}

impl GraphStats {
    pub fn entity_total(&self) -> usize {
        self.entities.values().sum()
    }

    pub fn relation_total(&self) -> usize {
        self.relations.values().sum()
    }
}

pub fn graph_stats(g: &KnowledgeGraph) -> GraphStats {
    let mut entities: BTreeMap<EntityKind, usize> = EntityKind::ALL.into_iter().map(|k| (k, 0)).collect();
    let mut relations: BTreeMap<Relation, usize> = Relation::ALL.into_iter().map(|r| (r, 0)).collect();
    for e in g.entities() {
        *entities.get_mut(&e.kind).unwrap() += 1;
    }
    for t in g.triples() {
        *relations.get_mut(&t.relation).unwrap() += 1;
    }
    GraphStats { entities, relations }
}
