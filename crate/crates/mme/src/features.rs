//! How traces become encoder input for the two detector flavours and the
//! ablation variants in between.

use std::collections::BTreeSet;

use mme_core::nnet::{LossMode, Sample};
use mme_core::resource::FeatureHasher;
use mme_core::seqembed::{ApiTrace, SequenceEmbedder};
use mme_core::transe::{random_api_table, EmbeddingTable};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameSource {
    /// TransE vectors from the API knowledge graph.
    Graph,
    /// A fixed random vector per API name, the usual embedding-layer input.
    Random,
}

impl NameSource {
    pub fn as_str(self) -> &'static str {
        match self {
            NameSource::Graph => "graph",
            NameSource::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "graph" => Some(NameSource::Graph),
            "random" => Some(NameSource::Random),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Regular,
    Mme,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Regular => "regular",
            Mode::Mme => "mme",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "regular" => Some(Mode::Regular),
            "mme" => Some(Mode::Mme),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub names: NameSource,
    pub dim: usize,
    pub name_seed: u64,
    pub args: bool,
    pub bins: usize,
    pub hash_seed: u64,
    pub max_len: usize,
    pub loss: LossMode,
}

impl FeatureConfig {
    pub fn for_mode(mode: Mode, dim: usize, bins: usize, hash_seed: u64, name_seed: u64, max_len: usize) -> Self {
        let mme = mode == Mode::Mme;
        Self {
            names: if mme { NameSource::Graph } else { NameSource::Random },
            dim,
            name_seed,
            args: mme,
            bins,
            hash_seed,
            max_len,
            loss: if mme { LossMode::Contrastive } else { LossMode::Regular },
        }
    }

    pub fn input_width(&self) -> usize {
        self.dim + if self.args { self.bins } else { 0 }
    }

    /// Embedder for `traces`. `Graph` names need the trained table; `Random`
    /// names are drawn for every API the traces mention.
    pub fn embedder(&self, graph_table: Option<&EmbeddingTable>, traces: &[ApiTrace]) -> Result<SequenceEmbedder> {
        let table = match self.names {
            NameSource::Graph => {
                let t = graph_table.ok_or_else(|| Error::Usage("graph name vectors need an embedding file".into()))?;
                if t.dim != self.dim {
                    return Err(Error::Format(format!("embedding dim {} but features expect {}", t.dim, self.dim)));
                }
                t.clone()
            }
            NameSource::Random => {
                let names: BTreeSet<&str> = traces.iter().flat_map(|t| t.calls.iter().map(|c| c.api_name.as_str())).collect();
                random_api_table(names, self.dim, self.name_seed)?
            }
        };
        let hasher = if self.args {
            Some(FeatureHasher::new(self.bins, self.hash_seed)?)
        } else {
            None
        };
        Ok(SequenceEmbedder::new(table, hasher, self.max_len))
    }

    pub fn samples(&self, graph_table: Option<&EmbeddingTable>, traces: &[ApiTrace]) -> Result<Vec<Sample>> {
        let e = self.embedder(graph_table, traces)?;
        traces
            .iter()
            .map(|t| {
                Ok(Sample {
                    x: e.embed_sequence(t)?,
                    y: t.y,
                    family: t.family,
                })
            })
            .collect()
    }
}
