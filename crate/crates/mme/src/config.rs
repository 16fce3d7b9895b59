//! Flat `key = value` settings. Files are parsed line by line (`#` starts a
//! comment); command-line flags are layered on top and win.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiment::ExperimentConfig;
use mme_core::nnet::EncoderKind;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::MalformedRecord(i + 1, format!("expected key = value, got `{line}`")))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    /// Sets `key` only when a flag value is present.
    pub fn flag<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn apply<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key) {
            *slot = v.parse().map_err(|_| Error::Usage(format!("invalid value `{v}` for `{key}`")))?;
        }
        Ok(())
    }

    /// Desk defaults overridden by every recognised key.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let mut seed = 7u64;
        self.apply("seed", &mut seed)?;
        let mut c = ExperimentConfig::desk(seed);
        let e = &mut c.evolution;
        self.apply("gen.families", &mut e.families)?;
        self.apply("gen.months", &mut e.months)?;
        self.apply("gen.traces_per_family_month", &mut e.traces_per_family_month)?;
        self.apply("gen.benign_per_month", &mut e.benign_per_month)?;
        self.apply("gen.p_replace", &mut e.p_replace)?;
        self.apply("gen.p_resource_mutate", &mut e.p_resource_mutate)?;
        self.apply("gen.p_fragment_reuse", &mut e.p_fragment_reuse)?;
        self.apply("gen.noise_calls", &mut e.noise_calls)?;
        self.apply("gen.p_drop", &mut e.p_drop)?;
        self.apply("gen.benign_drift_scale", &mut e.benign_drift_scale)?;
        self.apply("gen.hostile", &mut e.hostile)?;
        if let Some(v) = self.get("gen.start") {
            e.start = mme_core::seqembed::YearMonth::parse(v)?;
        }
        self.apply("kg.dim", &mut c.transe.dim)?;
        self.apply("kg.epochs", &mut c.transe.epochs)?;
        self.apply("kg.margin", &mut c.transe.margin_gamma)?;
        self.apply("kg.learning_rate", &mut c.transe.learning_rate)?;
        self.apply("hash.bins", &mut c.bins)?;
        self.apply("hash.seed", &mut c.hash_seed)?;
        self.apply("seq.max_len", &mut c.max_len)?;
        if let Some(v) = self.get("encoder.kind") {
            c.encoder_kind = EncoderKind::parse(v).ok_or_else(|| Error::Usage(format!("unknown encoder `{v}`")))?;
        }
        if let Some(v) = self.get("encoder.filter_widths") {
            c.filter_widths = v
                .split(',')
                .map(|w| w.trim().parse().map_err(|_| Error::Usage(format!("bad filter width `{w}`"))))
                .collect::<Result<_>>()?;
        }
        self.apply("encoder.filters_per_width", &mut c.filters_per_width)?;
        self.apply("encoder.latent_dim", &mut c.latent_dim)?;
        self.apply("encoder.hidden", &mut c.hidden)?;
        let t = &mut c.train;
        self.apply("train.lambda", &mut t.lambda)?;
        self.apply("train.margin", &mut t.margin)?;
        self.apply("train.learning_rate", &mut t.learning_rate)?;
        self.apply("train.momentum", &mut t.momentum)?;
        self.apply("train.epochs", &mut t.epochs)?;
        self.apply("train.batch_n", &mut t.batch_n)?;
        self.apply("train.auto_balance", &mut t.auto_balance)?;
        self.apply("maintain.threshold", &mut c.threshold)?;
        self.apply("maintain.step", &mut c.step)?;
        self.apply("maintain.ratio", &mut c.budget_ratio)?;
        c.evolution.validate()?;
        c.transe.validate()?;
        c.train.validate()?;
        Ok(c)
    }
}

pub fn echo_text(cfg: &ExperimentConfig) -> String {
    cfg.echo().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
