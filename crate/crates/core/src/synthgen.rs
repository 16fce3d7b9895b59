//! Synthetic evolving corpus. Malware families start from seed templates and
//! drift month by month through equivalent-API substitution, resource leaf
//! renaming and reuse of fragments from earlier samples; benign programs
//! drift more slowly through the same operators.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::kgraph::{EntityKind, KnowledgeGraph, Relation};
use crate::resource::{classify_str, replace_leaf, ResourceKind};
use crate::seed::{self, Rng};
use crate::seqembed::{ApiCallEvent, ApiTrace, ArgValue, YearMonth};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub families: usize,
    pub months: usize,
    pub traces_per_family_month: usize,
    pub benign_per_month: usize,
    /// Per call and month, probability of moving to an equivalent API.
    pub p_replace: f64,
    /// Per resource argument and month, probability of renaming its leaf.
    pub p_resource_mutate: f64,
    /// Fraction of each trace copied from an earlier trace of the same program.
    pub p_fragment_reuse: f64,
    pub noise_calls: usize,
    /// Per call, probability of being left out of an individual trace.
    pub p_drop: f64,
    /// Benign drift probabilities are the malicious ones times this factor.
    pub benign_drift_scale: f64,
    /// Substitute arbitrary unrelated APIs instead of graph equivalents.
    pub hostile: bool,
    pub start: YearMonth,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            families: 10,
            months: 24,
            traces_per_family_month: 4,
            benign_per_month: 40,
            p_replace: 0.04,
            p_resource_mutate: 0.1,
            p_fragment_reuse: 0.1,
            noise_calls: 4,
            p_drop: 0.05,
            benign_drift_scale: 0.5,
            hostile: false,
            start: YearMonth { year: 2017, month: 1 },
            seed: 7,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            self.p_replace,
            self.p_resource_mutate,
            self.p_fragment_reuse,
            self.p_drop,
            self.benign_drift_scale,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig("synthgen probabilities must be in [0, 1]".into()));
        }
        if self.families == 0 || self.months == 0 || self.traces_per_family_month == 0 {
            return Err(Error::InvalidConfig("synthgen counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// One API substitution applied to a template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    /// Family id, or 0 for a benign template.
    pub family: u32,
    pub template: usize,
    pub month: usize,
    pub position: usize,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub traces: Vec<ApiTrace>,
    pub substitutions: Vec<Substitution>,
    /// API names used as interleaved noise.
    pub noise_apis: Vec<String>,
}

/// Resource kind suggested by a parameter name, if any.
pub fn param_resource_kind(param: &str) -> Option<ResourceKind> {
    if param.contains("Url") || param.contains("URL") {
        Some(ResourceKind::Url)
    } else if param.contains("LibFileName") || param.contains("ModuleName") {
        Some(ResourceKind::Dll)
    } else if param.contains("SubKey") {
        Some(ResourceKind::RegistryKey)
    } else if param.contains("FileName")
        || param.contains("PathName")
        || param.contains("ApplicationName")
        || param.contains("CommandLine")
        || param.contains("CmdLine")
        || param == "lpFile"
    {
        Some(ResourceKind::FilePath)
    } else if param == "name" || param.contains("ServerName") || param.contains("NodeName") {
        Some(ResourceKind::IpAddress)
    } else {
        None
    }
}

const MAL_USERS: [&str; 3] = ["Administrator", "user", "Public"];
const BENIGN_VENDORS: [&str; 6] = ["Contoso", "Fabrikam", "Northwind", "Litware", "Adatum", "Proseware"];
const MAL_TLDS: [&str; 4] = ["ru", "top", "xyz", "cc"];

fn word(rng: &mut Rng, len: usize) -> String {
    (0..len).map(|_| char::from(b'a' + rng.gen_range(0..26u8))).collect()
}

/// Where a program's resources live. Malicious programs favour user-writable
/// and autostart locations; benign ones install under vendor paths.
#[derive(Debug, Clone)]
struct Roots {
    dir: String,
    temp: String,
    reg: String,
    domain: String,
    ip_prefix: String,
}

fn malicious_roots(rng: &mut Rng) -> Roots {
    let user = MAL_USERS[rng.gen_range(0..MAL_USERS.len())];
    Roots {
        dir: alloc::format!("C:\\Users\\{user}\\AppData\\Roaming\\{}", word(rng, 6)),
        temp: alloc::format!("C:\\Users\\{user}\\AppData\\Local\\Temp"),
        reg: "HKEY_CURRENT_USER\\Software\\Microsoft\\Windows\\CurrentVersion\\Run".into(),
        domain: alloc::format!("{}.{}", word(rng, 7), MAL_TLDS[rng.gen_range(0..MAL_TLDS.len())]),
        ip_prefix: alloc::format!("185.{}.{}", rng.gen_range(1..250), rng.gen_range(1..250)),
    }
}

fn benign_roots(rng: &mut Rng) -> Roots {
    let vendor = BENIGN_VENDORS[rng.gen_range(0..BENIGN_VENDORS.len())];
    Roots {
        dir: alloc::format!("C:\\Program Files\\{vendor}\\{}", word(rng, 5)),
        temp: "C:\\Windows\\System32".into(),
        reg: alloc::format!("HKEY_LOCAL_MACHINE\\SOFTWARE\\{vendor}"),
        domain: alloc::format!("update.{}.com", vendor.to_ascii_lowercase()),
        ip_prefix: alloc::format!("10.{}.{}", rng.gen_range(0..250), rng.gen_range(0..250)),
    }
}

fn resource_value(kind: ResourceKind, roots: &Roots, rng: &mut Rng) -> String {
    let leaf = word(rng, 5);
    match kind {
        ResourceKind::FilePath => alloc::format!("{}\\{leaf}.exe", roots.dir),
        ResourceKind::Dll => alloc::format!("{}\\{leaf}.dll", roots.temp),
        ResourceKind::RegistryKey => alloc::format!("{}\\{leaf}", roots.reg),
        ResourceKind::Url => alloc::format!("http://{leaf}.{}/{}", roots.domain, word(rng, 4)),
        ResourceKind::IpAddress => alloc::format!("{}.{}", roots.ip_prefix, rng.gen_range(1..255)),
    }
}

struct Graphview {
    names: Vec<String>,
    params: BTreeMap<String, Vec<String>>,
    equivalents: BTreeMap<String, Vec<String>>,
}

impl Graphview {
    fn new(g: &KnowledgeGraph) -> Self {
        let mut names = Vec::new();
        let mut params: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut equivalents = BTreeMap::new();
        for e in g.entities_of(EntityKind::Api) {
            names.push(e.name.clone());
            let eq: Vec<String> = g.equivalent_apis(e.id).into_iter().map(|i| g.entity(i).name.clone()).collect();
            equivalents.insert(e.name.clone(), eq);
        }
        for t in g.triples() {
            if t.relation == Relation::Input {
                params
                    .entry(g.entity(t.head).name.clone())
                    .or_default()
                    .push(g.entity(t.tail).name.clone());
            }
        }
        Self {
            names,
            params,
            equivalents,
        }
    }

    /// Connected groups of mutually reachable equivalent APIs.
    fn classes(&self) -> Vec<Vec<String>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for n in &self.names {
            if seen.contains(n) || self.equivalents[n].is_empty() {
                continue;
            }
            let mut class = Vec::new();
            let mut stack = alloc::vec![n.clone()];
            while let Some(x) = stack.pop() {
                if !seen.insert(x.clone()) {
                    continue;
                }
                stack.extend(self.equivalents[&x].iter().cloned());
                class.push(x);
            }
            class.sort();
            out.push(class);
        }
        out
    }
}

fn make_call(api: &str, view: &Graphview, roots: &Roots, rng: &mut Rng) -> ApiCallEvent {
    let mut args = Vec::new();
    for p in view.params.get(api).map(Vec::as_slice).unwrap_or(&[]).iter().take(4) {
        match param_resource_kind(p) {
            Some(kind) => args.push(ArgValue::Str(resource_value(kind, roots, rng))),
            None => args.push(ArgValue::Int(rng.gen_range(0..4096))),
        }
    }
    ApiCallEvent::new(api, args)
}

struct Program {
    family: u32,
    index: usize,
    roots: Roots,
    alt_roots: Roots,
    calls: Vec<ApiCallEvent>,
    history: Vec<Vec<ApiCallEvent>>,
}

fn seed_program(
    family: u32,
    index: usize,
    own: &[Vec<String>],
    other: &[Vec<String>],
    view: &Graphview,
    rng: &mut Rng,
) -> Program {
    let (roots, alt_roots) = if family == 0 {
        (benign_roots(rng), malicious_roots(rng))
    } else {
        (malicious_roots(rng), benign_roots(rng))
    };
    let len = rng.gen_range(10..=14);
    let mut calls = Vec::with_capacity(len);
    for _ in 0..len {
        let side = if rng.gen_bool(0.8) || other.is_empty() { own } else { other };
        let class = &side[rng.gen_range(0..side.len())];
        let api = &class[rng.gen_range(0..class.len())];
        let r = if rng.gen_bool(0.75) { &roots } else { &alt_roots };
        calls.push(make_call(api, view, r, rng));
    }
    Program {
        family,
        index,
        roots,
        alt_roots,
        calls,
        history: Vec::new(),
    }
}

fn evolve(
    p: &mut Program,
    month: usize,
    cfg: &EvolutionConfig,
    scale: f64,
    view: &Graphview,
    log: &mut Vec<Substitution>,
    rng: &mut Rng,
) {
    let _ = (&p.roots, &p.alt_roots);
    for (pos, call) in p.calls.iter_mut().enumerate() {
        if rng.gen_bool(cfg.p_replace * scale) {
            let candidates: Vec<&String> = if cfg.hostile {
                view.names.iter().filter(|n| **n != call.api_name).collect()
            } else {
                view.equivalents[&call.api_name].iter().collect()
            };
            if let Some(to) = candidates.choose(rng) {
                log.push(Substitution {
                    family: p.family,
                    template: p.index,
                    month,
                    position: pos,
                    from: call.api_name.clone(),
                    to: to.to_string(),
                });
                call.api_name = to.to_string();
            }
        }
        for a in &mut call.arguments {
            if let ArgValue::Str(v) = a {
                if rng.gen_bool(cfg.p_resource_mutate * scale) {
                    if let Some(kind) = classify_str(v) {
                        *v = replace_leaf(v, kind, &word(rng, 5));
                    }
                }
            }
        }
    }
}

fn instantiate(p: &Program, cfg: &EvolutionConfig, noise: &[String], rng: &mut Rng) -> Vec<ApiCallEvent> {
    let mut calls = p.calls.clone();
    if cfg.p_fragment_reuse > 0.0 && !p.history.is_empty() {
        let earlier = &p.history[rng.gen_range(0..p.history.len())];
        let want = libm::round(cfg.p_fragment_reuse * calls.len() as f64) as usize;
        let len = want.max(1).min(calls.len()).min(earlier.len());
        let s = rng.gen_range(0..=calls.len() - len);
        let s2 = rng.gen_range(0..=earlier.len() - len);
        calls.splice(s..s + len, earlier[s2..s2 + len].iter().cloned());
    }
    if cfg.p_drop > 0.0 {
        let kept: Vec<ApiCallEvent> = calls.iter().filter(|_| !rng.gen_bool(cfg.p_drop)).cloned().collect();
        if !kept.is_empty() {
            calls = kept;
        }
    }
    if !noise.is_empty() {
        for _ in 0..cfg.noise_calls {
            let api = &noise[rng.gen_range(0..noise.len())];
            let at = rng.gen_range(0..=calls.len());
            calls.insert(at, ApiCallEvent::new(api.as_str(), alloc::vec![ArgValue::Int(rng.gen_range(0..64))]));
        }
    }
    calls
}

/// Generates `months` of traces for `families` malware families plus benign
/// traffic. Deterministic under `cfg.seed`.
pub fn generate_corpus(g: &KnowledgeGraph, cfg: &EvolutionConfig) -> Result<Corpus> {
    cfg.validate()?;
    let view = Graphview::new(g);
    let mut classes = view.classes();
    if classes.is_empty() {
        return Err(Error::MissingEdges);
    }
    let noise: Vec<String> = view
        .names
        .iter()
        .filter(|n| view.equivalents[*n].is_empty())
        .cloned()
        .collect();
    let mut rng = seed::rng(seed::sub_seed(cfg.seed, "synthgen"));
    classes.shuffle(&mut rng);
    let (mal_side, benign_side): (Vec<_>, Vec<_>) = classes.iter().cloned().enumerate().partition(|(i, _)| i % 2 == 0);
    let mal_side: Vec<Vec<String>> = mal_side.into_iter().map(|x| x.1).collect();
    let mut benign_side: Vec<Vec<String>> = benign_side.into_iter().map(|x| x.1).collect();
    if benign_side.is_empty() {
        benign_side = mal_side.clone();
    }

    let mut families: Vec<Program> = (1..=cfg.families as u32)
        .map(|f| seed_program(f, 0, &mal_side, &benign_side, &view, &mut rng))
        .collect();
    let mut benign: Vec<Program> = (0..2 * cfg.families)
        .map(|i| seed_program(0, i, &benign_side, &mal_side, &view, &mut rng))
        .collect();

    let mut traces = Vec::new();
    let mut log = Vec::new();
    for month in 0..cfg.months {
        let ts = cfg.start.plus_months(month as u32);
        if month > 0 {
            for p in &mut families {
                evolve(p, month, cfg, 1.0, &view, &mut log, &mut rng);
            }
            for p in &mut benign {
                evolve(p, month, cfg, cfg.benign_drift_scale, &view, &mut log, &mut rng);
            }
        }
        let mut fresh: Vec<(usize, Vec<ApiCallEvent>)> = Vec::new();
        for (fi, p) in families.iter().enumerate() {
            for k in 0..cfg.traces_per_family_month {
                let calls = instantiate(p, cfg, &noise, &mut rng);
                fresh.push((fi, calls.clone()));
                traces.push(ApiTrace {
                    id: alloc::format!("f{}-m{:02}-{k}", p.family, month + 1),
                    calls,
                    y: 1,
                    family: p.family,
                    timestamp: ts,
                });
            }
        }
        let mut fresh_benign: Vec<(usize, Vec<ApiCallEvent>)> = Vec::new();
        for k in 0..cfg.benign_per_month {
            let bi = rng.gen_range(0..benign.len());
            let calls = instantiate(&benign[bi], cfg, &noise, &mut rng);
            fresh_benign.push((bi, calls.clone()));
            traces.push(ApiTrace {
                id: alloc::format!("b-m{:02}-{k}", month + 1),
                calls,
                y: 0,
                family: 0,
                timestamp: ts,
            });
        }
        for (fi, c) in fresh {
            families[fi].history.push(c);
        }
        for (bi, c) in fresh_benign {
            benign[bi].history.push(c);
        }
    }
    Ok(Corpus {
        traces,
        substitutions: log,
        noise_apis: noise,
    })
}
