//! Sequence encoder, classifier head, losses, batch sampler and training.
//!
//! Parameters live in one flat `Vec<f64>` described by a [`Layout`], which
//! keeps SGD and finite-difference checks trivial.

mod batch;
mod gradcheck;
mod loss;
mod train;

pub use batch::{build_contrastive_batch, mirror_half, ContrastiveBatch};
pub use gradcheck::{check_gradient, grad_check, jitter, kink_margin};
pub use loss::{bce_loss, contrastive_loss, contrastive_loss_grad, neg_set, pos_set, total_loss, total_loss_grad};
pub use train::{predict, train_model, LossMode, ModelState, Sample, TrainConfig};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::math;
use crate::seed::Rng;
use crate::seqembed::EmbeddedSequence;
use crate::{Error, Result};

pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    TextCnn,
    MeanPool,
}

impl EncoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::TextCnn => "textcnn",
            EncoderKind::MeanPool => "meanpool",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "textcnn" => Some(EncoderKind::TextCnn),
            "meanpool" => Some(EncoderKind::MeanPool),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub input_width: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub latent_dim: usize,
    pub hidden: usize,
}

impl EncoderConfig {
    pub fn textcnn(input_width: usize) -> Self {
        Self {
            kind: EncoderKind::TextCnn,
            input_width,
            filter_widths: vec![3, 4, 5],
            filters_per_width: 16,
            latent_dim: 32,
            hidden: 16,
        }
    }

    pub fn validate(&self, max_len: Option<usize>) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(alloc::format!("encoder: {m}")));
        if self.input_width == 0 || self.latent_dim == 0 || self.hidden == 0 {
            return bad("widths must be >= 1");
        }
        if self.kind == EncoderKind::TextCnn {
            if self.filter_widths.is_empty() || self.filters_per_width == 0 {
                return bad("textcnn needs filters");
            }
            if self.filter_widths.iter().any(|&w| w == 0 || max_len.is_some_and(|l| w > l)) {
                return bad("filter widths must be in 1..=L");
            }
        }
        Ok(())
    }

    pub fn pool_dim(&self) -> usize {
        match self.kind {
            EncoderKind::TextCnn => self.filter_widths.len() * self.filters_per_width,
            EncoderKind::MeanPool => self.input_width,
        }
    }
}

/// Offsets of each parameter block in the flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    /// `(width, weight offset, bias offset)`; weights are `[filter][k][d]`.
    pub conv: Vec<(usize, usize, usize)>,
    pub proj_w: usize,
    pub proj_b: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &EncoderConfig) -> Self {
        let mut off = 0;
        let mut conv = Vec::new();
        if cfg.kind == EncoderKind::TextCnn {
            for &w in &cfg.filter_widths {
                let wo = off;
                off += cfg.filters_per_width * w * cfg.input_width;
                let bo = off;
                off += cfg.filters_per_width;
                conv.push((w, wo, bo));
            }
        }
        let proj_w = off;
        off += cfg.latent_dim * cfg.pool_dim();
        let proj_b = off;
        off += cfg.latent_dim;
        let w1 = off;
        off += cfg.hidden * cfg.latent_dim;
        let b1 = off;
        off += cfg.hidden;
        let w2 = off;
        off += cfg.hidden;
        let b2 = off;
        off += 1;
        Self {
            conv,
            proj_w,
            proj_b,
            w1,
            b1,
            w2,
            b2,
            total: off,
        }
    }

    /// Named blocks with their shapes, for serialization.
    pub fn blocks(&self, cfg: &EncoderConfig) -> Vec<(alloc::string::String, usize, Vec<usize>)> {
        let mut out = Vec::new();
        for (w, wo, bo) in &self.conv {
            out.push((alloc::format!("conv{w}.weight"), *wo, vec![cfg.filters_per_width, *w, cfg.input_width]));
            out.push((alloc::format!("conv{w}.bias"), *bo, vec![cfg.filters_per_width]));
        }
        out.push(("proj.weight".into(), self.proj_w, vec![cfg.latent_dim, cfg.pool_dim()]));
        out.push(("proj.bias".into(), self.proj_b, vec![cfg.latent_dim]));
        out.push(("cls1.weight".into(), self.w1, vec![cfg.hidden, cfg.latent_dim]));
        out.push(("cls1.bias".into(), self.b1, vec![cfg.hidden]));
        out.push(("cls2.weight".into(), self.w2, vec![1, cfg.hidden]));
        out.push(("cls2.bias".into(), self.b2, vec![1]));
        out
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(cfg: &EncoderConfig, rng: &mut Rng) -> Vec<f64> {
    let l = Layout::new(cfg);
    let mut p = vec![0.0; l.total];
    let mut fill = |p: &mut [f64], fan_in: usize, fan_out: usize| {
        let b = math::sqrt(6.0 / (fan_in + fan_out) as f64);
        for x in p {
            *x = rng.gen_range(-b..=b);
        }
    };
    for &(w, wo, _) in &l.conv {
        let n = cfg.filters_per_width * w * cfg.input_width;
        fill(&mut p[wo..wo + n], w * cfg.input_width, cfg.filters_per_width);
    }
    let pd = cfg.pool_dim();
    fill(&mut p[l.proj_w..l.proj_w + cfg.latent_dim * pd], pd, cfg.latent_dim);
    fill(&mut p[l.w1..l.w1 + cfg.hidden * cfg.latent_dim], cfg.latent_dim, cfg.hidden);
    fill(&mut p[l.w2..l.w2 + cfg.hidden], cfg.hidden, 1);
    p
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Per pooled unit: window start of the maximum pre-activation.
    conv_arg: Vec<usize>,
    conv_max: Vec<f64>,
    pub pool: Vec<f64>,
    u_norm: f64,
    pub z: Vec<f64>,
    pre1: Vec<f64>,
    h: Vec<f64>,
    pub logit: f64,
    pub f: f64,
    pub clamped: bool,
}

fn window_count(t_len: usize, w: usize) -> usize {
    if t_len >= w {
        t_len - w + 1
    } else {
        1
    }
}

/// `en(x)` followed by `g(z)`.
pub fn forward(cfg: &EncoderConfig, params: &[f64], x: &EmbeddedSequence) -> Result<Forward> {
    let l = Layout::new(cfg);
    if params.len() != l.total {
        return Err(Error::ShapeMismatch {
            expected: l.total,
            found: params.len(),
        });
    }
    if x.width() != cfg.input_width {
        return Err(Error::ShapeMismatch {
            expected: cfg.input_width,
            found: x.width(),
        });
    }
    let d = cfg.input_width;
    let t_len = x.true_length();
    let xs = &x.stored()[..t_len * d];

    let mut conv_arg = Vec::new();
    let mut conv_max = Vec::new();
    let pool: Vec<f64> = match cfg.kind {
        EncoderKind::TextCnn => {
            let mut pool = Vec::with_capacity(cfg.pool_dim());
            for &(w, wo, bo) in &l.conv {
                let npos = window_count(t_len, w);
                for f in 0..cfg.filters_per_width {
                    let wf = &params[wo + f * w * d..wo + (f + 1) * w * d];
                    let mut best = f64::NEG_INFINITY;
                    let mut arg = 0;
                    for t in 0..npos {
                        let rows = w.min(t_len - t);
                        let s = params[bo + f] + math::dot(&wf[..rows * d], &xs[t * d..(t + rows) * d]);
                        if s > best {
                            best = s;
                            arg = t;
                        }
                    }
                    conv_arg.push(arg);
                    conv_max.push(best);
                    pool.push(best.max(0.0));
                }
            }
            pool
        }
        EncoderKind::MeanPool => {
            let mut pool = vec![0.0; d];
            for t in 0..t_len {
                for (p, v) in pool.iter_mut().zip(&xs[t * d..(t + 1) * d]) {
                    *p += v;
                }
            }
            let n = t_len.max(1) as f64;
            pool.iter_mut().for_each(|p| *p /= n);
            pool
        }
    };

    let pd = cfg.pool_dim();
    let mut u: Vec<f64> = (0..cfg.latent_dim)
        .map(|i| params[l.proj_b + i] + math::dot(&params[l.proj_w + i * pd..l.proj_w + (i + 1) * pd], &pool))
        .collect();
    let u_norm = math::norm(&u);
    math::normalize_in_place(&mut u);
    let z = u;

    let ld = cfg.latent_dim;
    let pre1: Vec<f64> = (0..cfg.hidden)
        .map(|j| params[l.b1 + j] + math::dot(&params[l.w1 + j * ld..l.w1 + (j + 1) * ld], &z))
        .collect();
    let h: Vec<f64> = pre1.iter().map(|v| v.max(0.0)).collect();
    let logit = params[l.b2] + math::dot(&params[l.w2..l.w2 + cfg.hidden], &h);
    let raw = math::sigmoid(logit);
    let f = raw.clamp(PROB_EPS, 1.0 - PROB_EPS);
    Ok(Forward {
        conv_arg,
        conv_max,
        pool,
        u_norm,
        z,
        pre1,
        h,
        logit,
        f,
        clamped: raw != f,
    })
}

/// Accumulates into `grad` the parameter gradient of a loss whose partial
/// derivatives are `dz` (w.r.t. the latent vector) and `dlogit`.
pub fn backward(
    cfg: &EncoderConfig,
    params: &[f64],
    x: &EmbeddedSequence,
    fw: &Forward,
    dz: &[f64],
    dlogit: f64,
    grad: &mut [f64],
) {
    let l = Layout::new(cfg);
    let ld = cfg.latent_dim;
    let mut dz = dz.to_vec();

    grad[l.b2] += dlogit;
    for j in 0..cfg.hidden {
        grad[l.w2 + j] += dlogit * fw.h[j];
        let dpre = if fw.pre1[j] > 0.0 { dlogit * params[l.w2 + j] } else { 0.0 };
        if dpre != 0.0 {
            grad[l.b1 + j] += dpre;
            for i in 0..ld {
                grad[l.w1 + j * ld + i] += dpre * fw.z[i];
                dz[i] += dpre * params[l.w1 + j * ld + i];
            }
        }
    }

    if fw.u_norm == 0.0 {
        return;
    }
    let zdz = math::dot(&fw.z, &dz);
    let du: Vec<f64> = (0..ld).map(|i| (dz[i] - fw.z[i] * zdz) / fw.u_norm).collect();

    let pd = cfg.pool_dim();
    let mut dpool = vec![0.0; pd];
    for i in 0..ld {
        grad[l.proj_b + i] += du[i];
        let row = l.proj_w + i * pd;
        for k in 0..pd {
            grad[row + k] += du[i] * fw.pool[k];
            dpool[k] += du[i] * params[row + k];
        }
    }

    if cfg.kind != EncoderKind::TextCnn {
        return;
    }
    let d = cfg.input_width;
    let t_len = x.true_length();
    let xs = &x.stored()[..t_len * d];
    let mut unit = 0;
    for &(w, wo, bo) in &l.conv {
        for f in 0..cfg.filters_per_width {
            if fw.conv_max[unit] > 0.0 && dpool[unit] != 0.0 {
                let g = dpool[unit];
                let t = fw.conv_arg[unit];
                let rows = w.min(t_len - t);
                grad[bo + f] += g;
                let wf = wo + f * w * d;
                for (k, xv) in xs[t * d..(t + rows) * d].iter().enumerate() {
                    grad[wf + k] += g * xv;
                }
            }
            unit += 1;
        }
    }
}
