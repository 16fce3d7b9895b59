//! The desk-scale drift experiment: documentation corpus → knowledge graph →
//! TransE table → synthetic evolving traces → regular vs enhanced detectors
//! under aging, maintenance and stability evaluation.

use std::collections::BTreeMap;

use mme_core::docmodel::ApiDocRecord;
use mme_core::eval::{
    aging_curve, average_row, maintain_to_threshold, maintain_with_budget, stability_report, temporal_split, Bucketing,
    BudgetReport, Detector, MaintenanceReport, MetricsRow, Period, StabilityReport, TemporalSplit,
};
use mme_core::kgraph::{build_graph, default_lexicon, KnowledgeGraph, RelationTemplate};
use mme_core::nnet::{forward, train_model, EncoderConfig, EncoderKind, ModelState, Sample, TrainConfig};
use mme_core::seed::sub_seed;
use mme_core::seqembed::ApiTrace;
use mme_core::synthgen::{generate_corpus, Corpus, EvolutionConfig};
use mme_core::transe::{self, EmbeddingTable, TranseConfig};

use crate::error::Result;
use crate::features::{FeatureConfig, Mode};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub evolution: EvolutionConfig,
    pub transe: TranseConfig,
    pub bins: usize,
    pub hash_seed: u64,
    pub max_len: usize,
    pub encoder_kind: EncoderKind,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    pub train: TrainConfig,
    pub threshold: f64,
    pub step: f64,
    pub budget_ratio: f64,
}

impl ExperimentConfig {
    /// Sizes that run the whole comparison in minutes on one core.
    pub fn desk(seed: u64) -> Self {
        Self {
            seed,
            evolution: EvolutionConfig {
                seed,
                ..EvolutionConfig::default()
            },
            transe: TranseConfig {
                dim: 32,
                seed,
                ..TranseConfig::default()
            },
            bins: 64,
            hash_seed: 0,
            max_len: 200,
            encoder_kind: EncoderKind::TextCnn,
            filter_widths: vec![3, 4, 5],
            filters_per_width: 8,
            latent_dim: 16,
            hidden: 16,
            train: TrainConfig {
                seed,
                learning_rate: 0.02,
                epochs: 60,
                ..TrainConfig::default()
            },
            threshold: 0.95,
            step: 0.01,
            budget_ratio: 0.01,
        }
    }

    pub fn features(&self, mode: Mode) -> FeatureConfig {
        FeatureConfig::for_mode(mode, self.transe.dim, self.bins, self.hash_seed, sub_seed(self.seed, "names"), self.max_len)
    }

    pub fn encoder(&self, mode: Mode) -> EncoderConfig {
        EncoderConfig {
            kind: self.encoder_kind,
            input_width: self.features(mode).input_width(),
            filter_widths: self.filter_widths.clone(),
            filters_per_width: self.filters_per_width,
            latent_dim: self.latent_dim,
            hidden: self.hidden,
        }
    }

    pub fn train_config(&self, mode: Mode) -> TrainConfig {
        TrainConfig {
            mode: self.features(mode).loss,
            ..self.train.clone()
        }
    }

    /// `key=value` pairs of every knob, in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let e = &self.evolution;
        let t = &self.train;
        let widths: Vec<String> = self.filter_widths.iter().map(|w| w.to_string()).collect();
        [
            ("seed", self.seed.to_string()),
            ("gen.families", e.families.to_string()),
            ("gen.months", e.months.to_string()),
            ("gen.traces_per_family_month", e.traces_per_family_month.to_string()),
            ("gen.benign_per_month", e.benign_per_month.to_string()),
            ("gen.p_replace", e.p_replace.to_string()),
            ("gen.p_resource_mutate", e.p_resource_mutate.to_string()),
            ("gen.p_fragment_reuse", e.p_fragment_reuse.to_string()),
            ("gen.noise_calls", e.noise_calls.to_string()),
            ("gen.p_drop", e.p_drop.to_string()),
            ("gen.benign_drift_scale", e.benign_drift_scale.to_string()),
            ("gen.hostile", e.hostile.to_string()),
            ("gen.start", e.start.to_string()),
            ("kg.dim", self.transe.dim.to_string()),
            ("kg.epochs", self.transe.epochs.to_string()),
            ("kg.margin", self.transe.margin_gamma.to_string()),
            ("kg.learning_rate", self.transe.learning_rate.to_string()),
            ("hash.bins", self.bins.to_string()),
            ("hash.seed", self.hash_seed.to_string()),
            ("seq.max_len", self.max_len.to_string()),
            ("encoder.kind", self.encoder_kind.as_str().to_string()),
            ("encoder.filter_widths", widths.join(",")),
            ("encoder.filters_per_width", self.filters_per_width.to_string()),
            ("encoder.latent_dim", self.latent_dim.to_string()),
            ("encoder.hidden", self.hidden.to_string()),
            ("train.lambda", t.lambda.to_string()),
            ("train.margin", t.margin.to_string()),
            ("train.learning_rate", t.learning_rate.to_string()),
            ("train.momentum", t.momentum.to_string()),
            ("train.epochs", t.epochs.to_string()),
            ("train.batch_n", t.batch_n.to_string()),
            ("train.auto_balance", t.auto_balance.to_string()),
            ("maintain.threshold", self.threshold.to_string()),
            ("maintain.step", self.step.to_string()),
            ("maintain.ratio", self.budget_ratio.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Everything derived from the documentation corpus and the seed.
#[derive(Debug, Clone)]
pub struct World {
    pub graph: KnowledgeGraph,
    pub table: EmbeddingTable,
    pub corpus: Corpus,
}

pub fn build_world(docs: &[ApiDocRecord], templates: &[RelationTemplate], cfg: &ExperimentConfig) -> Result<World> {
    let graph = build_graph(docs, templates, &default_lexicon())?;
    let table = transe::train(&graph, &cfg.transe)?;
    let corpus = generate_corpus(&graph, &cfg.evolution)?;
    Ok(World { graph, table, corpus })
}

/// A detector over pre-embedded samples; training always restarts from the
/// configured seed.
pub struct TraceDetector {
    pub samples: Vec<Sample>,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
}

impl TraceDetector {
    pub fn new(world: &World, cfg: &ExperimentConfig, mode: Mode) -> Result<Self> {
        let samples = cfg.features(mode).samples(Some(&world.table), &world.corpus.traces)?;
        Ok(Self {
            samples,
            encoder: cfg.encoder(mode),
            train: cfg.train_config(mode),
        })
    }
}

impl Detector for TraceDetector {
    type Model = ModelState;

    fn train(&mut self, idx: &[usize]) -> mme_core::Result<ModelState> {
        let data: Vec<Sample> = idx.iter().map(|&i| self.samples[i].clone()).collect();
        train_model(&data, &self.encoder, &self.train)
    }

    fn score(&mut self, model: &ModelState, idx: &[usize]) -> mme_core::Result<Vec<f64>> {
        idx.iter()
            .map(|&i| forward(&model.encoder, &model.params, &self.samples[i].x).map(|fw| fw.f))
            .collect()
    }

    fn label(&self, i: usize) -> u8 {
        self.samples[i].y
    }
}

/// Train on the first month, test every later month separately.
pub fn monthly_split(traces: &[ApiTrace]) -> Result<TemporalSplit> {
    let ts: Vec<_> = traces.iter().map(|t| t.timestamp).collect();
    let first = ts.iter().min().copied().ok_or(mme_core::Error::EmptyDataset)?;
    Ok(temporal_split(&ts, Period::Month(first), Bucketing::Monthly)?)
}

/// Mean FNR over the first and last third of an aging curve.
pub fn fnr_thirds(rows: &[MetricsRow]) -> (f64, f64) {
    let k = (rows.len() / 3).max(1);
    let mean = |r: &[MetricsRow]| r.iter().map(|x| x.fnr).sum::<f64>() / r.len() as f64;
    (mean(&rows[..k]), mean(&rows[rows.len() - k..]))
}

#[derive(Debug, Clone)]
pub struct AgingResult {
    pub rows: Vec<MetricsRow>,
    pub average: MetricsRow,
    pub model: ModelState,
}

pub fn run_aging(d: &mut TraceDetector, split: &TemporalSplit) -> Result<AgingResult> {
    let model = d.train(&split.train)?;
    let rows = aging_curve(d, &model, split)?;
    let average = average_row(&rows, "average");
    Ok(AgingResult { rows, average, model })
}

pub fn run_threshold(d: &mut TraceDetector, split: &TemporalSplit, cfg: &ExperimentConfig) -> Result<MaintenanceReport> {
    Ok(maintain_to_threshold(d, split, cfg.threshold, cfg.step)?)
}

pub fn run_budget(d: &mut TraceDetector, split: &TemporalSplit, cfg: &ExperimentConfig) -> Result<BudgetReport> {
    Ok(maintain_with_budget(d, split, mme_core::eval::Budget::Ratio(cfg.budget_ratio))?)
}

/// Latent-space stability of every malware family, over all of its traces.
pub fn run_stability(d: &TraceDetector, model: &ModelState, traces: &[ApiTrace]) -> Result<StabilityReport> {
    let mut by_family: BTreeMap<u32, Vec<_>> = BTreeMap::new();
    for (i, t) in traces.iter().enumerate().filter(|(_, t)| t.y == 1) {
        let z = forward(&model.encoder, &model.params, &d.samples[i].x)?.z;
        by_family.entry(t.family).or_default().push((t.timestamp, t.id.clone(), z));
    }
    Ok(stability_report(by_family)?)
}
