//! TransE embedding of the knowledge graph (head + relation ≈ tail, L2).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::kgraph::{EntityKind, KnowledgeGraph, Relation, Triple};
use crate::math;
use crate::seed::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TranseConfig {
    pub dim: usize,
    pub margin_gamma: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TranseConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            margin_gamma: 1.0,
            learning_rate: 0.01,
            epochs: 200,
            seed: 7,
        }
    }
}

impl TranseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("transe: dim and epochs must be >= 1".into()));
        }
        if !(self.margin_gamma >= 0.0) || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("transe: need margin >= 0 and lr > 0".into()));
        }
        Ok(())
    }
}

/// Entity and relation vectors. Entity `i` corresponds to the graph entity
/// with id `i`; vectors are stored row-major in flat buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub seed: u64,
    kinds: Vec<EntityKind>,
    names: Vec<String>,
    entity_vecs: Vec<f64>,
    relation_vecs: Vec<f64>,
    api_index: BTreeMap<String, usize>,
    pub loss_history: Vec<f64>,
}

impl EmbeddingTable {
    /// Assembles a table from stored rows, e.g. when reading a file.
    pub fn from_parts(
        dim: usize,
        seed: u64,
        entities: Vec<(EntityKind, String, Vec<f64>)>,
        relations: Vec<(Relation, Vec<f64>)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("embedding dim must be >= 1".into()));
        }
        let mut relation_vecs = vec![0.0; Relation::ALL.len() * dim];
        let mut seen = [false; 8];
        for (r, v) in relations {
            check_row(&v, dim)?;
            relation_vecs[r.index() * dim..(r.index() + 1) * dim].copy_from_slice(&v);
            seen[r.index()] = true;
        }
        if let Some(missing) = Relation::ALL.iter().find(|r| !seen[r.index()]) {
            return Err(Error::InvalidRecord(alloc::format!("missing relation vector {}", missing)));
        }
        let mut t = Self {
            dim,
            seed,
            kinds: Vec::with_capacity(entities.len()),
            names: Vec::with_capacity(entities.len()),
            entity_vecs: Vec::with_capacity(entities.len() * dim),
            relation_vecs,
            api_index: BTreeMap::new(),
            loss_history: Vec::new(),
        };
        for (kind, name, v) in entities {
            check_row(&v, dim)?;
            if kind == EntityKind::Api {
                t.api_index.insert(name.clone(), t.kinds.len());
            }
            t.kinds.push(kind);
            t.names.push(name);
            t.entity_vecs.extend_from_slice(&v);
        }
        Ok(t)
    }

    pub fn entity_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn entity_kind(&self, i: usize) -> EntityKind {
        self.kinds[i]
    }

    pub fn entity_name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn entity_vec(&self, i: usize) -> &[f64] {
        &self.entity_vecs[i * self.dim..(i + 1) * self.dim]
    }

    fn entity_vec_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entity_vecs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn relation_vec(&self, r: Relation) -> &[f64] {
        &self.relation_vecs[r.index() * self.dim..(r.index() + 1) * self.dim]
    }

    fn relation_vec_mut(&mut self, r: Relation) -> &mut [f64] {
        let d = self.dim;
        &mut self.relation_vecs[r.index() * d..(r.index() + 1) * d]
    }

    pub fn api_names(&self) -> impl Iterator<Item = &str> {
        self.api_index.keys().map(String::as_str)
    }

    pub fn api_id(&self, name: &str) -> Option<usize> {
        self.api_index.get(name).copied()
    }
}

fn check_row(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::ShapeMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidRecord("non-finite embedding component".into()));
    }
    Ok(())
}

fn init_with(g: &KnowledgeGraph, cfg: &TranseConfig, rng: &mut Rng) -> Result<EmbeddingTable> {
    cfg.validate()?;
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let bound = 6.0 / math::sqrt(cfg.dim as f64);
    let mut sample = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-bound..=bound)).collect() };
    let relations = Relation::ALL.iter().map(|r| (*r, sample(cfg.dim))).collect::<Vec<_>>();
    let entities = g
        .entities()
        .iter()
        .map(|e| {
            let mut v = sample(cfg.dim);
            math::normalize_in_place(&mut v);
            (e.kind, e.name.clone(), v)
        })
        .collect();
    EmbeddingTable::from_parts(cfg.dim, cfg.seed, entities, relations)
}

pub fn init_embeddings(g: &KnowledgeGraph, cfg: &TranseConfig) -> Result<EmbeddingTable> {
    let mut rng = seed::rng(seed::sub_seed(cfg.seed, "transe"));
    init_with(g, cfg, &mut rng)
}

/// `max(0, γ + d(h+r, t) − d(h'+r, t'))` for explicit vectors.
pub fn hinge_loss(h: &[f64], r: &[f64], t: &[f64], h2: &[f64], t2: &[f64], gamma: f64) -> f64 {
    let pos = translation_distance(h, r, t);
    let neg = translation_distance(h2, r, t2);
    (gamma + pos - neg).max(0.0)
}

fn translation_distance(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..h.len() {
        let d = h[i] + r[i] - t[i];
        s += d * d;
    }
    math::sqrt(s)
}

/// Subgradient of the hinge for one (positive, corrupted) pair, as
/// `(entity id, gradient)` contributions plus the relation gradient. Empty
/// when the hinge is inactive. A zero distance contributes a zero gradient.
pub fn hinge_gradient(
    table: &EmbeddingTable,
    pos: &Triple,
    neg: &Triple,
    gamma: f64,
) -> Option<(Vec<(usize, Vec<f64>)>, Vec<f64>)> {
    let dim = table.dim;
    let r = table.relation_vec(pos.relation);
    let diff = |h: usize, t: usize| -> Vec<f64> {
        let (hv, tv) = (table.entity_vec(h), table.entity_vec(t));
        (0..dim).map(|i| hv[i] + r[i] - tv[i]).collect()
    };
    let dp = diff(pos.head.index(), pos.tail.index());
    let dn = diff(neg.head.index(), neg.tail.index());
    let (np, nn) = (math::norm(&dp), math::norm(&dn));
    if gamma + np - nn <= 0.0 {
        return None;
    }
    let unit = |v: &[f64], n: f64, sign: f64| -> Vec<f64> {
        if n == 0.0 {
            vec![0.0; dim]
        } else {
            v.iter().map(|x| sign * x / n).collect()
        }
    };
    let gp = unit(&dp, np, 1.0);
    let gn = unit(&dn, nn, -1.0);
    let neg_gp: Vec<f64> = gp.iter().map(|x| -x).collect();
    let neg_gn: Vec<f64> = gn.iter().map(|x| -x).collect();
    let rel: Vec<f64> = (0..dim).map(|i| gp[i] + gn[i]).collect();
    let ents = vec![
        (pos.head.index(), gp),
        (pos.tail.index(), neg_gp),
        (neg.head.index(), gn),
        (neg.tail.index(), neg_gn),
    ];
    Some((ents, rel))
}

/// Same-kind entity pools used for corruption.
fn kind_pools(table: &EmbeddingTable) -> BTreeMap<EntityKind, Vec<usize>> {
    let mut pools: BTreeMap<EntityKind, Vec<usize>> = BTreeMap::new();
    for i in 0..table.entity_count() {
        pools.entry(table.entity_kind(i)).or_default().push(i);
    }
    pools
}

fn pick_other(pool: &[usize], exclude: usize, rng: &mut Rng) -> Option<usize> {
    if pool.len() < 2 {
        return None;
    }
    loop {
        let c = pool[rng.gen_range(0..pool.len())];
        if c != exclude {
            return Some(c);
        }
    }
}

/// Replaces the head or the tail (fair coin) with a different entity of the
/// same kind. Falls back to the other side when a kind has a single member;
/// `None` when neither side can be corrupted.
pub fn corrupt(
    table: &EmbeddingTable,
    t: &Triple,
    pools: &BTreeMap<EntityKind, Vec<usize>>,
    rng: &mut Rng,
) -> Option<Triple> {
    let head_first = rng.gen_bool(0.5);
    let pool_of = |i: usize| pools.get(&table.entity_kind(i)).map(Vec::as_slice).unwrap_or(&[]);
    let try_side = |head: bool, rng: &mut Rng| -> Option<Triple> {
        if head {
            pick_other(pool_of(t.head.index()), t.head.index(), rng).map(|h| Triple {
                head: crate::kgraph::EntityId(h as u32),
                ..*t
            })
        } else {
            pick_other(pool_of(t.tail.index()), t.tail.index(), rng).map(|x| Triple {
                tail: crate::kgraph::EntityId(x as u32),
                ..*t
            })
        }
    };
    try_side(head_first, rng).or_else(|| try_side(!head_first, rng))
}

/// One pass of per-triple SGD in shuffled order. Returns the summed hinge loss.
pub fn transe_epoch(table: &mut EmbeddingTable, triples: &[Triple], cfg: &TranseConfig, rng: &mut Rng) -> Result<f64> {
    let n = table.entity_count();
    for t in triples {
        for id in [t.head, t.tail] {
            if id.index() >= n {
                return Err(Error::UnknownEntity(alloc::format!("#{}", id.0)));
            }
        }
    }
    let pools = kind_pools(table);
    let mut order: Vec<usize> = (0..triples.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for i in order {
        let pos = &triples[i];
        let Some(neg) = corrupt(table, pos, &pools, rng) else {
            continue;
        };
        let r = table.relation_vec(pos.relation);
        let loss = hinge_loss(
            table.entity_vec(pos.head.index()),
            r,
            table.entity_vec(pos.tail.index()),
            table.entity_vec(neg.head.index()),
            table.entity_vec(neg.tail.index()),
            cfg.margin_gamma,
        );
        total += loss;
        let Some((ents, rel)) = hinge_gradient(table, pos, &neg, cfg.margin_gamma) else {
            continue;
        };
        let lr = cfg.learning_rate;
        for (x, g) in table.relation_vec_mut(pos.relation).iter_mut().zip(&rel) {
            *x -= lr * g;
        }
        for (id, g) in &ents {
            for (x, gi) in table.entity_vec_mut(*id).iter_mut().zip(g) {
                *x -= lr * gi;
            }
        }
        for (id, _) in &ents {
            math::normalize_in_place(table.entity_vec_mut(*id));
        }
    }
    Ok(total)
}

pub fn train(g: &KnowledgeGraph, cfg: &TranseConfig) -> Result<EmbeddingTable> {
    let mut rng = seed::rng(seed::sub_seed(cfg.seed, "transe"));
    let mut table = init_with(g, cfg, &mut rng)?;
    let triples: Vec<Triple> = g.triples().copied().collect();
    for _ in 0..cfg.epochs {
        let loss = transe_epoch(&mut table, &triples, cfg, &mut rng)?;
        table.loss_history.push(loss);
    }
    Ok(table)
}

/// The `k` closest other APIs by Euclidean distance; ties broken by name.
pub fn nearest_apis(table: &EmbeddingTable, api_name: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let id = table
        .api_id(api_name)
        .ok_or_else(|| Error::UnknownEntity(api_name.to_string()))?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let v = table.entity_vec(id);
    let mut all: Vec<(String, f64)> = table
        .api_index
        .iter()
        .filter(|(_, &j)| j != id)
        .map(|(name, &j)| (name.clone(), math::euclidean(v, table.entity_vec(j))))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    Ok(all)
}

/// The API's vector, or zeros for a name outside the graph.
pub fn api_vector(table: &EmbeddingTable, name: &str) -> Vec<f64> {
    match table.api_id(name) {
        Some(i) => table.entity_vec(i).to_vec(),
        None => vec![0.0; table.dim],
    }
}

/// A table of fixed random unit vectors, one per API name, seeded per name.
/// Stands in for an untrained name-embedding layer.
pub fn random_api_table<'a>(names: impl IntoIterator<Item = &'a str>, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    let entities = names
        .into_iter()
        .map(|n| {
            let mut rng = seed::rng(seed::sub_seed(seed, n));
            let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            math::normalize_in_place(&mut v);
            (EntityKind::Api, n.to_string(), v)
        })
        .collect();
    let relations = Relation::ALL.iter().map(|r| (*r, vec![0.0; dim])).collect();
    EmbeddingTable::from_parts(dim, seed, entities, relations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgraph::EntityId;

    fn tiny_graph() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity(EntityKind::Api, "A");
        let b = g.add_entity(EntityKind::Api, "B");
        let h = g.add_entity(EntityKind::Header, "h.h");
        g.add_triple(a, Relation::FunctionOf, h).unwrap();
        g.add_triple(b, Relation::FunctionOf, h).unwrap();
        g.add_triple(a, Relation::ReplacedBy, b).unwrap();
        g
    }

    fn cfg(dim: usize, epochs: usize) -> TranseConfig {
        TranseConfig {
            dim,
            epochs,
            ..Default::default()
        }
    }

    #[test]
    fn hinge_example() {
        let l = hinge_loss(&[0.2], &[0.3], &[0.5], &[0.2], &[0.1], 1.0);
        assert!((l - 0.6).abs() < 1e-12);
    }

    #[test]
    fn inactive_hinge_has_no_update() {
        assert_eq!(hinge_loss(&[0.0], &[0.5], &[0.5], &[0.0], &[2.0], 1.0), 0.0);
        let table = EmbeddingTable::from_parts(
            1,
            0,
            vec![
                (EntityKind::Api, "A".into(), vec![0.0]),
                (EntityKind::Header, "x".into(), vec![0.5]),
                (EntityKind::Header, "y".into(), vec![2.0]),
            ],
            Relation::ALL.iter().map(|r| (*r, vec![0.5])).collect(),
        )
        .unwrap();
        let pos = Triple {
            head: EntityId(0),
            relation: Relation::FunctionOf,
            tail: EntityId(1),
        };
        let neg = Triple { tail: EntityId(2), ..pos };
        assert!(hinge_gradient(&table, &pos, &neg, 1.0).is_none());
    }

    #[test]
    fn subgradient_matches_finite_differences() {
        let mut rng = seed::rng(3);
        let dim = 5;
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let table = EmbeddingTable::from_parts(
            dim,
            0,
            vec![
                (EntityKind::Api, "A".into(), rows[0].clone()),
                (EntityKind::Header, "x".into(), rows[1].clone()),
                (EntityKind::Api, "B".into(), rows[2].clone()),
                (EntityKind::Header, "y".into(), rows[3].clone()),
            ],
            Relation::ALL.iter().map(|r| (*r, vec![0.1; dim])).collect(),
        )
        .unwrap();
        let pos = Triple {
            head: EntityId(0),
            relation: Relation::FunctionOf,
            tail: EntityId(1),
        };
        let neg = Triple {
            head: EntityId(2),
            relation: Relation::FunctionOf,
            tail: EntityId(3),
        };
        let gamma = 5.0;
        let (ents, rel) = hinge_gradient(&table, &pos, &neg, gamma).unwrap();
        let loss = |t: &EmbeddingTable| {
            hinge_loss(
                t.entity_vec(0),
                t.relation_vec(Relation::FunctionOf),
                t.entity_vec(1),
                t.entity_vec(2),
                t.entity_vec(3),
                gamma,
            )
        };
        let eps = 1e-6;
        for (id, g) in &ents {
            for c in 0..dim {
                let mut p = table.clone();
                p.entity_vec_mut(*id)[c] += eps;
                let mut m = table.clone();
                m.entity_vec_mut(*id)[c] -= eps;
                let fd = (loss(&p) - loss(&m)) / (2.0 * eps);
                let rel_err = (fd - g[c]).abs() / (fd.abs() + g[c].abs()).max(1e-8);
                assert!(rel_err < 1e-4, "entity {id} comp {c}: fd {fd} vs {}", g[c]);
            }
        }
        for c in 0..dim {
            let mut p = table.clone();
            p.relation_vec_mut(Relation::FunctionOf)[c] += eps;
            let mut m = table.clone();
            m.relation_vec_mut(Relation::FunctionOf)[c] -= eps;
            let fd = (loss(&p) - loss(&m)) / (2.0 * eps);
            let rel_err = (fd - rel[c]).abs() / (fd.abs() + rel[c].abs()).max(1e-8);
            assert!(rel_err < 1e-4);
        }
    }

    #[test]
    fn init_is_seeded_and_unit() {
        let g = tiny_graph();
        let a = init_embeddings(&g, &cfg(8, 1)).unwrap();
        let b = init_embeddings(&g, &cfg(8, 1)).unwrap();
        assert_eq!(a, b);
        let mut c8 = cfg(8, 1);
        c8.seed = 8;
        assert_ne!(a, init_embeddings(&g, &c8).unwrap());
        for i in 0..a.entity_count() {
            assert!((math::norm(a.entity_vec(i)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_single_entity() {
        let mut g = KnowledgeGraph::new();
        g.add_entity(EntityKind::Api, "Solo");
        let t = init_embeddings(&g, &cfg(1, 1)).unwrap();
        assert_eq!(t.entity_vec(0)[0].abs(), 1.0);
    }

    #[test]
    fn empty_graph_is_rejected() {
        assert_eq!(init_embeddings(&KnowledgeGraph::new(), &cfg(4, 1)), Err(Error::EmptyGraph));
    }

    #[test]
    fn training_is_deterministic_and_keeps_unit_norms() {
        let g = tiny_graph();
        let a = train(&g, &cfg(8, 20)).unwrap();
        let b = train(&g, &cfg(8, 20)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.loss_history.len(), 20);
        for i in 0..a.entity_count() {
            assert!((math::norm(a.entity_vec(i)) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn nearest_on_two_apis() {
        let t = train(&tiny_graph(), &cfg(8, 5)).unwrap();
        let n = nearest_apis(&t, "A", 1).unwrap();
        assert_eq!(n[0].0, "B");
        let all = nearest_apis(&t, "A", 10).unwrap();
        assert_eq!(all.len(), 1);
        assert!(nearest_apis(&t, "Nope", 1).is_err());
    }

    #[test]
    fn oov_is_zero() {
        let t = train(&tiny_graph(), &cfg(8, 1)).unwrap();
        assert_eq!(api_vector(&t, "Nope"), vec![0.0; 8]);
        assert_eq!(api_vector(&t, "A"), t.entity_vec(0).to_vec());
    }

    #[test]
    fn corruption_keeps_kind() {
        let g = tiny_graph();
        let t = init_embeddings(&g, &cfg(4, 1)).unwrap();
        let pools = kind_pools(&t);
        let mut rng = seed::rng(1);
        for tr in g.triples() {
            for _ in 0..20 {
                match corrupt(&t, tr, &pools, &mut rng) {
                    Some(c) => {
                        assert_eq!(t.entity_kind(c.head.index()), t.entity_kind(tr.head.index()));
                        assert_eq!(t.entity_kind(c.tail.index()), t.entity_kind(tr.tail.index()));
                        assert!(c != *tr);
                    }
                    None => panic!("every triple here has a corruptible side"),
                }
            }
        }
    }
}
