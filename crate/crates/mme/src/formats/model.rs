//! Model text file. Line 1 is `mme-model 1`; then `key=value` lines echoing
//! the encoder, training and feature configuration; then the loss history;
//! then each parameter block as `block <name> <shape>` followed by one line
//! of values. Values use shortest round-trip formatting.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use mme_core::nnet::{EncoderConfig, EncoderKind, Layout, LossMode, ModelState, TrainConfig};

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, NameSource};

pub const MODEL_FORMAT: &str = "mme-model 1";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: ModelState,
    pub features: FeatureConfig,
}

fn join<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

pub fn write_model(mut w: impl Write, m: &ModelFile) -> Result<()> {
    let e = &m.model.encoder;
    let t = &m.model.train;
    let f = &m.features;
    writeln!(w, "{MODEL_FORMAT}")?;
    let widths: Vec<String> = e.filter_widths.iter().map(|x| x.to_string()).collect();
    let kv: [(&str, String); 22] = [
        ("encoder.kind", e.kind.as_str().into()),
        ("encoder.input_width", e.input_width.to_string()),
        ("encoder.filter_widths", widths.join(",")),
        ("encoder.filters_per_width", e.filters_per_width.to_string()),
        ("encoder.latent_dim", e.latent_dim.to_string()),
        ("encoder.hidden", e.hidden.to_string()),
        ("train.mode", t.mode.as_str().into()),
        ("train.lambda", format!("{:?}", t.lambda)),
        ("train.margin", format!("{:?}", t.margin)),
        ("train.learning_rate", format!("{:?}", t.learning_rate)),
        ("train.momentum", format!("{:?}", t.momentum)),
        ("train.epochs", t.epochs.to_string()),
        ("train.batch_n", t.batch_n.to_string()),
        ("train.seed", t.seed.to_string()),
        ("train.auto_balance", t.auto_balance.to_string()),
        ("features.names", f.names.as_str().into()),
        ("features.dim", f.dim.to_string()),
        ("features.name_seed", f.name_seed.to_string()),
        ("features.args", f.args.to_string()),
        ("features.bins", f.bins.to_string()),
        ("features.hash_seed", f.hash_seed.to_string()),
        ("features.max_len", f.max_len.to_string()),
    ];
    for (k, v) in kv {
        writeln!(w, "{k}={v}")?;
    }
    writeln!(w, "loss_history={}", join(&m.model.loss_history))?;
    for (name, offset, shape) in Layout::new(e).blocks(e) {
        let n: usize = shape.iter().product();
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        writeln!(w, "block {name} {}", dims.join("x"))?;
        writeln!(w, "{}", join(&m.model.params[offset..offset + n]))?;
    }
    Ok(())
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn get(&self, k: &str) -> Result<&str> {
        self.0.get(k).map(String::as_str).ok_or_else(|| Error::Format(format!("model file lacks `{k}`")))
    }

    fn num<T: std::str::FromStr>(&self, k: &str) -> Result<T> {
        self.get(k)?.parse().map_err(|_| Error::Format(format!("bad value for `{k}`")))
    }
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|x| x.parse().map_err(|_| Error::Format(format!("bad number `{x}`"))))
        .collect()
}

pub fn read_model(reader: impl BufRead) -> Result<ModelFile> {
    let mut lines = reader.lines();
    if lines.next().transpose()?.as_deref() != Some(MODEL_FORMAT) {
        return Err(Error::Format(format!("expected `{MODEL_FORMAT}` header")));
    }
    let mut fields = BTreeMap::new();
    let mut blocks: Vec<(String, Vec<f64>)> = Vec::new();
    while let Some(line) = lines.next().transpose()? {
        if let Some(rest) = line.strip_prefix("block ") {
            let name = rest.split_whitespace().next().unwrap_or_default().to_string();
            let values = lines.next().transpose()?.ok_or_else(|| Error::Format(format!("block {name} has no values")))?;
            blocks.push((name, floats(&values)?));
        } else if let Some((k, v)) = line.split_once('=') {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let f = Fields(fields);
    let encoder = EncoderConfig {
        kind: EncoderKind::parse(f.get("encoder.kind")?).ok_or_else(|| Error::Format("unknown encoder kind".into()))?,
        input_width: f.num("encoder.input_width")?,
        filter_widths: f
            .get("encoder.filter_widths")?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| Error::Format("bad filter width".into())))
            .collect::<Result<_>>()?,
        filters_per_width: f.num("encoder.filters_per_width")?,
        latent_dim: f.num("encoder.latent_dim")?,
        hidden: f.num("encoder.hidden")?,
    };
    encoder.validate(None)?;
    let train = TrainConfig {
        mode: LossMode::parse(f.get("train.mode")?).ok_or_else(|| Error::Format("unknown loss mode".into()))?,
        lambda: f.num("train.lambda")?,
        margin: f.num("train.margin")?,
        learning_rate: f.num("train.learning_rate")?,
        momentum: f.num("train.momentum")?,
        epochs: f.num("train.epochs")?,
        batch_n: f.num("train.batch_n")?,
        seed: f.num("train.seed")?,
        auto_balance: f.num("train.auto_balance")?,
    };
    let features = FeatureConfig {
        names: NameSource::parse(f.get("features.names")?).ok_or_else(|| Error::Format("unknown name source".into()))?,
        dim: f.num("features.dim")?,
        name_seed: f.num("features.name_seed")?,
        args: f.num("features.args")?,
        bins: f.num("features.bins")?,
        hash_seed: f.num("features.hash_seed")?,
        max_len: f.num("features.max_len")?,
        loss: train.mode,
    };
    let layout = Layout::new(&encoder);
    let mut params = vec![0.0; layout.total];
    let expected = layout.blocks(&encoder);
    if expected.len() != blocks.len() {
        return Err(Error::Format(format!("{} parameter blocks, expected {}", blocks.len(), expected.len())));
    }
    for ((name, offset, shape), (got, values)) in expected.into_iter().zip(blocks) {
        let n: usize = shape.iter().product();
        if name != got || values.len() != n {
            return Err(Error::Format(format!("block `{got}` does not match `{name}` with {n} values")));
        }
        params[offset..offset + n].copy_from_slice(&values);
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Format("non-finite parameter".into()));
    }
    Ok(ModelFile {
        model: ModelState {
            encoder,
            params,
            train,
            loss_history: floats(f.get("loss_history")?)?,
        },
        features,
    })
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    read_model(super::open(path)?)
}

pub fn save_model(path: &Path, m: &ModelFile) -> Result<()> {
    let mut w = super::create(path)?;
    write_model(&mut w, m)?;
    w.flush().map_err(|e| Error::io(path, e))
}
