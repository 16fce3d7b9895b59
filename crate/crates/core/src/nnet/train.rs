use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::batch::mirror_half;
use super::loss::total_loss_grad;
use super::{forward, init_params, EncoderConfig, Layout};
use crate::seed::{self, Rng};
use crate::seqembed::{ApiTrace, EmbeddedSequence, SequenceEmbedder};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// Classification loss only.
    Regular,
    /// Contrastive loss plus λ times the classification loss, on mirrored batches.
    Contrastive,
}

impl LossMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LossMode::Regular => "regular",
            LossMode::Contrastive => "contrastive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "regular" => Some(LossMode::Regular),
            "contrastive" => Some(LossMode::Contrastive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: LossMode,
    pub lambda: f64,
    pub margin: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Half batch size `N`; batches hold `2N` samples.
    pub batch_n: usize,
    pub seed: u64,
    /// Rescale λ after every epoch so both loss terms have similar means.
    pub auto_balance: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: LossMode::Contrastive,
            lambda: 1.0,
            margin: 1.0,
            learning_rate: 0.05,
            momentum: 0.0,
            epochs: 30,
            batch_n: 16,
            seed: 7,
            auto_balance: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda > 0.0
            && self.margin > 0.0
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.momentum)
            && self.epochs >= 1
            && self.batch_n >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("training hyperparameters out of range".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: EmbeddedSequence,
    pub y: u8,
    pub family: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub encoder: EncoderConfig,
    pub params: Vec<f64>,
    pub train: TrainConfig,
    pub loss_history: Vec<f64>,
}

impl ModelState {
    pub fn layout(&self) -> Layout {
        Layout::new(&self.encoder)
    }
}

fn sgd_step(params: &mut [f64], grad: &[f64], velocity: &mut [f64], tc: &TrainConfig) {
    for i in 0..params.len() {
        velocity[i] = tc.momentum * velocity[i] - tc.learning_rate * grad[i];
        params[i] += velocity[i];
    }
}

fn batches(order: &[usize], labels: &[(u8, u32)], tc: &TrainConfig, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    match tc.mode {
        LossMode::Contrastive => order
            .chunks(tc.batch_n)
            .map(|first| mirror_half(first, labels, rng, true).map(|b| b.indices))
            .collect(),
        LossMode::Regular => Ok(order.chunks(2 * tc.batch_n).map(<[usize]>::to_vec).collect()),
    }
}

/// Minibatch SGD for a fixed number of epochs. Each epoch visits every
/// sample once as a batch anchor.
pub fn train_model(data: &[Sample], encoder: &EncoderConfig, tc: &TrainConfig) -> Result<ModelState> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    encoder.validate(None)?;
    tc.validate()?;
    for s in data {
        if s.x.width() != encoder.input_width {
            return Err(Error::ShapeMismatch {
                expected: encoder.input_width,
                found: s.x.width(),
            });
        }
    }
    let mut rng = seed::rng(seed::sub_seed(tc.seed, "nnet"));
    let mut params = init_params(encoder, &mut rng);
    let mut velocity = vec![0.0; params.len()];
    let labels: Vec<(u8, u32)> = data.iter().map(|s| (s.y, s.family)).collect();
    let mut cfg = tc.clone();
    let mut history = Vec::with_capacity(tc.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for _ in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut epoch = 0.0;
        let (mut con_sum, mut cla_sum) = (0.0, 0.0);
        for idx in batches(&order, &labels, &cfg, &mut rng)? {
            let batch: Vec<&Sample> = idx.iter().map(|&i| &data[i]).collect();
            let ((loss, con, cla), grad) = total_loss_grad(encoder, &params, &batch, &cfg)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient);
            }
            sgd_step(&mut params, &grad, &mut velocity, &cfg);
            epoch += loss;
            con_sum += con;
            cla_sum += cla;
        }
        history.push(epoch);
        if cfg.auto_balance && cfg.mode == LossMode::Contrastive && con_sum > 0.0 && cla_sum > 0.0 {
            cfg.lambda = con_sum / cla_sum;
        }
    }
    Ok(ModelState {
        encoder: encoder.clone(),
        params,
        train: cfg,
        loss_history: history,
    })
}

/// `(ŷ, f(x), z)` with `ŷ = 1` iff `f(x) ≥ 0.5`.
pub fn predict(model: &ModelState, x: &EmbeddedSequence) -> Result<(u8, f64, Vec<f64>)> {
    let fw = forward(&model.encoder, &model.params, x)?;
    Ok((u8::from(fw.f >= 0.5), fw.f, fw.z))
}

impl ModelState {
    /// Embeds and scores one trace.
    pub fn predict_trace(&self, embedder: &SequenceEmbedder, trace: &ApiTrace) -> Result<(u8, f64, Vec<f64>)> {
        predict(self, &embedder.embed_sequence(trace)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::EncoderKind;
    use rand::Rng as _;

    fn toy(seed_v: u64) -> Vec<Sample> {
        let mut rng = seed::rng(seed_v);
        let mut out = Vec::new();
        for i in 0..24 {
            let (y, fam) = match i % 3 {
                0 => (0, 0),
                1 => (1, 1),
                _ => (1, 2),
            };
            let len = rng.gen_range(3..7);
            let mut data = Vec::new();
            for _ in 0..len {
                for d in 0..4 {
                    let signal = if d == fam as usize { 1.0 } else { 0.0 };
                    data.push(signal + rng.gen_range(-0.2..0.2));
                }
            }
            out.push(Sample {
                x: EmbeddedSequence::from_matrix(data, 4, 8, len).unwrap(),
                y,
                family: fam,
            });
        }
        out
    }

    fn enc(kind: EncoderKind) -> EncoderConfig {
        EncoderConfig {
            kind,
            input_width: 4,
            filter_widths: vec![2, 3],
            filters_per_width: 3,
            latent_dim: 4,
            hidden: 4,
        }
    }

    fn tc(mode: LossMode) -> TrainConfig {
        TrainConfig {
            mode,
            epochs: 40,
            batch_n: 4,
            learning_rate: 0.05,
            ..Default::default()
        }
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        for mode in [LossMode::Regular, LossMode::Contrastive] {
            for kind in [EncoderKind::TextCnn, EncoderKind::MeanPool] {
                let data = toy(1);
                let a = train_model(&data, &enc(kind), &tc(mode)).unwrap();
                let b = train_model(&data, &enc(kind), &tc(mode)).unwrap();
                assert_eq!(a, b);
                assert_eq!(a.loss_history.len(), 40);
                assert!(a.loss_history.last().unwrap() <= a.loss_history.first().unwrap());
                let correct = data
                    .iter()
                    .filter(|s| predict(&a, &s.x).unwrap().0 == s.y)
                    .count();
                assert!(correct >= 20, "{mode:?} {kind:?}: {correct}/24");
            }
        }
    }

    #[test]
    fn auto_balance_updates_lambda() {
        let mut c = tc(LossMode::Contrastive);
        c.auto_balance = true;
        c.epochs = 3;
        let m = train_model(&toy(2), &enc(EncoderKind::MeanPool), &c).unwrap();
        assert_ne!(m.train.lambda, 1.0);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert_eq!(
            train_model(&[], &enc(EncoderKind::TextCnn), &tc(LossMode::Regular)),
            Err(Error::EmptyDataset)
        );
    }

    #[test]
    fn threshold_rule() {
        let m = train_model(&toy(3), &enc(EncoderKind::TextCnn), &tc(LossMode::Regular)).unwrap();
        for s in toy(4) {
            let (yh, f, z) = predict(&m, &s.x).unwrap();
            assert_eq!(yh == 1, f >= 0.5);
            assert_eq!(z.len(), 4);
        }
    }
}
