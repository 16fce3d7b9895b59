//! Property tests across module boundaries.

use mme_core::eval::{js_divergence, temporal_split, check_temporal_consistency, Bucketing, Period};
use mme_core::kgraph::{EntityKind, KnowledgeGraph, Relation};
use mme_core::math::norm;
use mme_core::nnet::{
    contrastive_loss, forward, init_params, total_loss, EncoderConfig, EncoderKind, LossMode, Sample, TrainConfig,
};
use mme_core::resource::FeatureHasher;
use mme_core::seed;
use mme_core::seqembed::{ApiCallEvent, ApiTrace, ArgValue, EmbeddedSequence, SequenceEmbedder, YearMonth};
use mme_core::synthgen::{generate_corpus, EvolutionConfig};
use mme_core::transe::{self, random_api_table, TranseConfig};
use proptest::prelude::*;

fn enc(kind: EncoderKind, width: usize) -> EncoderConfig {
    EncoderConfig {
        kind,
        input_width: width,
        filter_widths: vec![2, 3],
        filters_per_width: 2,
        latent_dim: 3,
        hidden: 3,
    }
}

fn kind() -> impl Strategy<Value = EncoderKind> {
    prop_oneof![Just(EncoderKind::TextCnn), Just(EncoderKind::MeanPool)]
}

/// A small random graph of API groups sharing prototypes.
fn random_graph(groups: usize, per: usize, extra: usize) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    let header = g.add_entity(EntityKind::Header, "h.h");
    for gi in 0..groups {
        let proto = g.add_entity(EntityKind::Prototype, &format!("Op{gi}"));
        let param = g.add_entity(EntityKind::Parameter, &format!("lpFileName{gi}"));
        for k in 0..per {
            let api = g.add_entity(EntityKind::Api, &format!("Op{gi}V{k}"));
            g.add_triple(api, Relation::ExtendFrom, proto).unwrap();
            g.add_triple(api, Relation::Input, param).unwrap();
            g.add_triple(api, Relation::FunctionOf, header).unwrap();
        }
    }
    for e in 0..extra {
        let api = g.add_entity(EntityKind::Api, &format!("Other{e}"));
        g.add_triple(api, Relation::FunctionOf, header).unwrap();
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn losses_are_nonnegative(seed_v in any::<u64>(), kind in kind(), n in 1usize..8, contrastive in any::<bool>()) {
        let e = enc(kind, 3);
        let mut rng = seed::rng(seed_v);
        let params = init_params(&e, &mut rng);
        let samples: Vec<Sample> = (0..n)
            .map(|i| {
                use rand::Rng as _;
                let len = rng.gen_range(1..6);
                let data = (0..len * 3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let family = (i % 3) as u32;
                Sample { x: EmbeddedSequence::from_matrix(data, 3, 6, len).unwrap(), y: u8::from(family > 0), family }
            })
            .collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let mode = if contrastive { LossMode::Contrastive } else { LossMode::Regular };
        let (total, con, cla) = total_loss(&e, &params, &refs, &TrainConfig { mode, ..Default::default() }).unwrap();
        prop_assert!(con >= 0.0 && cla >= 0.0 && total >= 0.0);
    }

    #[test]
    fn saturated_batches_cost_nothing(m in 0.1f64..1.4) {
        // Two tight clusters on opposite poles are 2 apart, beyond any margin < 2.
        let zs = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![-1.0, 0.0]];
        prop_assert_eq!(contrastive_loss(&zs, &[0, 0, 1, 1], &[0, 0, 4, 4], m), 0.0);
    }

    #[test]
    fn padding_rows_never_matter(seed_v in any::<u64>(), kind in kind(), len in 1usize..5, junk in -50.0f64..50.0) {
        use rand::Rng as _;
        let e = enc(kind, 2);
        let mut rng = seed::rng(seed_v);
        let params = init_params(&e, &mut rng);
        let real: Vec<f64> = (0..len * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut padded = real.clone();
        padded.extend(std::iter::repeat_n(junk, (6 - len) * 2));
        let a = forward(&e, &params, &EmbeddedSequence::from_matrix(real, 2, 6, len).unwrap()).unwrap();
        let b = forward(&e, &params, &EmbeddedSequence::from_matrix(padded, 2, 6, len).unwrap()).unwrap();
        prop_assert_eq!(a.f.to_bits(), b.f.to_bits());
        prop_assert_eq!(a.z, b.z);
    }

    #[test]
    fn transe_keeps_unit_norms_and_is_deterministic(groups in 1usize..4, per in 2usize..4, extra in 0usize..3, seed_v in any::<u64>()) {
        let g = random_graph(groups, per, extra);
        let cfg = TranseConfig { dim: 6, epochs: 15, seed: seed_v, ..Default::default() };
        let a = transe::train(&g, &cfg).unwrap();
        let b = transe::train(&g, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        for i in 0..a.entity_count() {
            let n = norm(a.entity_vec(i));
            prop_assert!((n - 1.0).abs() <= 1e-6, "norm {}", n);
        }
    }

    #[test]
    fn embedding_width_and_truncation(calls in proptest::collection::vec(("[A-C]", proptest::option::of("C:\\\\[a-z]{1,4}")), 1..12), max_len in 1usize..8, bins in 1usize..9) {
        let table = random_api_table(["A", "B"], 3, 1).unwrap();
        let e = SequenceEmbedder::new(table, Some(FeatureHasher::new(bins, 2).unwrap()), max_len);
        let trace = ApiTrace {
            id: "t".into(),
            y: 0,
            family: 0,
            timestamp: YearMonth::new(2020, 1).unwrap(),
            calls: calls
                .iter()
                .map(|(n, a)| ApiCallEvent::new(n.as_str(), a.iter().map(|s| ArgValue::Str(s.clone())).collect()))
                .collect(),
        };
        let x = e.embed_sequence(&trace).unwrap();
        prop_assert_eq!(x.width(), 3 + bins);
        prop_assert_eq!(x.true_length(), calls.len().min(max_len));
        let longer = SequenceEmbedder::new(random_api_table(["A", "B"], 3, 1).unwrap(), Some(FeatureHasher::new(bins, 2).unwrap()), max_len + 5);
        let y = longer.embed_sequence(&trace).unwrap();
        for t in 0..x.true_length() {
            prop_assert_eq!(x.row(t), y.row(t));
        }
    }

    #[test]
    fn js_zero_only_for_equal_distributions(a in proptest::collection::vec(0.01f64..1.0, 2..6), shift in 0usize..5) {
        let s: f64 = a.iter().sum();
        let p: Vec<f64> = a.iter().map(|x| x / s).collect();
        let mut q = p.clone();
        q.rotate_left(shift % p.len());
        let js = js_divergence(&p, &q).unwrap();
        if p == q {
            prop_assert!(js.abs() <= 1e-9);
        } else if p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum::<f64>() > 1e-3 {
            prop_assert!(js > 1e-9);
        }
    }

    #[test]
    fn generated_corpora_are_consistent(seed_v in any::<u64>(), families in 1usize..4, months in 1usize..5, hostile in any::<bool>()) {
        let g = random_graph(4, 3, 3);
        let cfg = EvolutionConfig {
            families,
            months,
            traces_per_family_month: 2,
            benign_per_month: 3,
            p_replace: 0.4,
            hostile,
            seed: seed_v,
            ..Default::default()
        };
        let a = generate_corpus(&g, &cfg).unwrap();
        prop_assert_eq!(&a, &generate_corpus(&g, &cfg).unwrap());
        prop_assert_eq!(a.traces.len(), months * (families * 2 + 3));
        for t in &a.traces {
            prop_assert!(t.validate().is_ok());
            prop_assert_eq!(t.y == 1, t.family >= 1 && t.family as usize <= families);
        }
        if !hostile {
            for s in &a.substitutions {
                let from = g.find(EntityKind::Api, &s.from).unwrap();
                let to = g.find(EntityKind::Api, &s.to).unwrap();
                prop_assert!(g.equivalent_apis(from).contains(&to));
            }
        }
        let ts: Vec<YearMonth> = a.traces.iter().map(|t| t.timestamp).collect();
        let split = temporal_split(&ts, Period::Month(cfg.start), Bucketing::Monthly).unwrap();
        prop_assert!(check_temporal_consistency(&split, &ts));
    }
}
