use std::path::PathBuf;

use mme::features::{FeatureConfig, Mode};
use mme::formats::docs::{parse_doc_corpus, read_docs, write_docs};
use mme::formats::embedding::{read_embedding, write_embedding};
use mme::formats::graph::{load_graph, read_graph, save_graph, write_graph};
use mme::formats::model::{read_model, write_model, ModelFile};
use mme::formats::templates::{load_templates, read_templates, write_templates};
use mme::formats::tensor::{read_tensors, write_tensors, TensorRecord};
use mme::formats::traces::{read_traces, write_traces};
use mme_core::kgraph::{build_graph, default_lexicon, EntityKind, Relation};
use mme_core::nnet::{init_params, EncoderConfig, EncoderKind, LossMode, ModelState, TrainConfig};
use mme_core::seed;
use mme_core::seqembed::{ApiCallEvent, ApiTrace, ArgValue, EmbeddedSequence, YearMonth};
use mme_core::transe::EmbeddingTable;
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn arg() -> impl Strategy<Value = ArgValue> {
    prop_oneof![
        any::<i64>().prop_map(ArgValue::Int),
        ".{0,12}".prop_map(ArgValue::Str),
        "[A-Z]:\\\\[a-z\\\\ ]{0,10}".prop_map(ArgValue::Str),
    ]
}

fn trace() -> impl Strategy<Value = ApiTrace> {
    (
        "[a-z0-9-]{1,10}",
        0u32..5,
        2000u16..2030,
        1u8..=12,
        proptest::collection::vec(("[A-Za-z_][A-Za-z0-9_]{0,12}", proptest::collection::vec(arg(), 0..4)), 1..6),
    )
        .prop_map(|(id, family, year, month, calls)| ApiTrace {
            id,
            y: u8::from(family > 0),
            family,
            timestamp: YearMonth::new(year, month).unwrap(),
            calls: calls.into_iter().map(|(n, a)| ApiCallEvent::new(n, a)).collect(),
        })
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(0.0), Just(-0.0), Just(f64::MIN_POSITIVE / 4.0)]
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn traces_round_trip(traces in proptest::collection::vec(trace(), 0..6)) {
        let mut buf = Vec::new();
        write_traces(&mut buf, &traces).unwrap();
        prop_assert_eq!(read_traces(buf.as_slice()).unwrap(), traces);
    }

    #[test]
    fn embedding_round_trip_is_bit_exact(dim in 1usize..5, rows in proptest::collection::vec(("[A-Za-z][A-Za-z0-9_.]{0,8}", proptest::collection::vec(finite(), 4)), 1..6), seed_v in any::<u64>()) {
        let mut names = std::collections::BTreeSet::new();
        let entities: Vec<_> = rows
            .into_iter()
            .filter(|(n, _)| names.insert(n.clone()))
            .enumerate()
            .map(|(i, (n, v))| (EntityKind::ALL[i % EntityKind::ALL.len()], n, v[..dim].to_vec()))
            .collect();
        let relations = Relation::ALL.iter().map(|r| (*r, vec![r.index() as f64 * 0.1; dim])).collect();
        let t = EmbeddingTable::from_parts(dim, seed_v, entities, relations).unwrap();
        let mut buf = Vec::new();
        write_embedding(&mut buf, &t).unwrap();
        let back = read_embedding(buf.as_slice()).unwrap();
        prop_assert_eq!(back.entity_count(), t.entity_count());
        for i in 0..t.entity_count() {
            prop_assert_eq!(back.entity_name(i), t.entity_name(i));
            prop_assert_eq!(back.entity_kind(i), t.entity_kind(i));
            prop_assert_eq!(bits(back.entity_vec(i)), bits(t.entity_vec(i)));
        }
        for r in Relation::ALL {
            prop_assert_eq!(bits(back.relation_vec(r)), bits(t.relation_vec(r)));
        }
        prop_assert_eq!((back.dim, back.seed), (t.dim, t.seed));
    }

    #[test]
    fn tensors_round_trip(width in 1usize..4, len in 1usize..6, recs in proptest::collection::vec(("[a-z]{1,6}", 0u32..3, 0usize..6, proptest::collection::vec(finite(), 24)), 0..5)) {
        let records: Vec<TensorRecord> = recs
            .into_iter()
            .map(|(id, family, t, vals)| {
                let t = t.min(len);
                TensorRecord {
                    id,
                    y: u8::from(family > 0),
                    family,
                    timestamp: YearMonth::new(2019, 3).unwrap(),
                    x: EmbeddedSequence::from_matrix(vals[..t * width].to_vec(), width, len, t).unwrap(),
                }
            })
            .collect();
        let mut buf = Vec::new();
        write_tensors(&mut buf, &records).unwrap();
        let back = read_tensors(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            prop_assert_eq!((&a.id, a.y, a.family, a.timestamp), (&b.id, b.y, b.family, b.timestamp));
            prop_assert_eq!(a.x.true_length(), b.x.true_length());
            prop_assert_eq!(bits(&a.x.to_matrix()), bits(&b.x.to_matrix()));
        }
    }

    #[test]
    fn model_round_trip(seed_v in any::<u64>(), kind in prop_oneof![Just(EncoderKind::TextCnn), Just(EncoderKind::MeanPool)], mme_mode in any::<bool>()) {
        let mode = if mme_mode { Mode::Mme } else { Mode::Regular };
        let features = FeatureConfig::for_mode(mode, 4, 6, seed_v, seed_v ^ 1, 30);
        let encoder = EncoderConfig {
            kind,
            input_width: features.input_width(),
            filter_widths: vec![2, 3],
            filters_per_width: 2,
            latent_dim: 3,
            hidden: 5,
        };
        let model = ModelState {
            params: init_params(&encoder, &mut seed::rng(seed_v)),
            encoder,
            train: TrainConfig { seed: seed_v, mode: features.loss, lambda: 0.3, ..Default::default() },
            loss_history: vec![3.5, 1.25, 1e-300],
        };
        let m = ModelFile { model, features };
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        prop_assert_eq!(read_model(buf.as_slice()).unwrap(), m);
    }
}

#[test]
fn docs_and_templates_round_trip() {
    let docs = parse_doc_corpus(&fixture("docs.jsonl")).unwrap();
    let mut buf = Vec::new();
    write_docs(&mut buf, &docs).unwrap();
    assert_eq!(read_docs(buf.as_slice()).unwrap(), docs);

    let templates = load_templates(&fixture("templates.jsonl")).unwrap();
    let mut buf = Vec::new();
    write_templates(&mut buf, &templates).unwrap();
    let back = read_templates(buf.as_slice()).unwrap();
    assert_eq!(back.len(), templates.len());
    for (a, b) in back.iter().zip(&templates) {
        assert_eq!((a.relation, &a.pattern, a.head_slot), (b.relation, &b.pattern, b.head_slot));
    }
}

#[test]
fn graph_round_trip_through_file() {
    let docs = parse_doc_corpus(&fixture("docs.jsonl")).unwrap();
    let templates = load_templates(&fixture("templates.jsonl")).unwrap();
    let g = build_graph(&docs, &templates, &default_lexicon()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("g.tsv");
    save_graph(&path, &g).unwrap();
    assert_eq!(load_graph(&path).unwrap(), g);

    let mut a = Vec::new();
    write_graph(&mut a, &g).unwrap();
    let mut b = Vec::new();
    write_graph(&mut b, &read_graph(a.as_slice()).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn corrupt_inputs_are_rejected() {
    assert!(read_tensors(&b"MMETNSR1\x01\x00"[..]).is_err());
    assert!(read_tensors(&b"NOTATENS"[..]).is_err());
    assert!(read_graph("# mme-graph 9\n".as_bytes()).is_err());
    assert!(read_embedding("mme-embedding 1 dim=2 seed=0\nAPI\tX\t1.0\n".as_bytes()).is_err());
    assert!(read_model("mme-model 1\nencoder.kind=lstm\n".as_bytes()).is_err());
    let _ = LossMode::Regular;
}
