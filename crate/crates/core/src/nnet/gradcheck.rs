use alloc::vec::Vec;

use rand::Rng as _;

use super::loss::{neg_set, pos_set, total_loss, total_loss_grad};
use super::train::{LossMode, Sample, TrainConfig};
use super::{forward, EncoderConfig, EncoderKind, Layout};
use crate::math;
use crate::seed::Rng;
use crate::seqembed::EmbeddedSequence;
use crate::{Error, Result};

/// Largest relative error `|a − b| / max(1e−8, |a| + |b|)` between
/// `analytic` and central differences of `f` around `params`.
pub fn check_gradient(params: &[f64], analytic: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Result<f64> {
    if analytic.len() != params.len() {
        return Err(Error::LengthMismatch(analytic.len(), params.len()));
    }
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let up = f(&p);
        p[i] = orig - eps;
        let down = f(&p);
        p[i] = orig;
        let fd = (up - down) / (2.0 * eps);
        let a = analytic[i];
        if !fd.is_finite() || !a.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        worst = worst.max((a - fd).abs() / (a.abs() + fd.abs()).max(1e-8));
    }
    Ok(worst)
}

/// Compares the backpropagated gradient of the batch loss with central
/// differences over every parameter.
pub fn grad_check(enc: &EncoderConfig, params: &[f64], batch: &[&Sample], tc: &TrainConfig, eps: f64) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(Error::InvalidConfig("grad_check eps must be in [1e-6, 1e-3]".into()));
    }
    let (_, grad) = total_loss_grad(enc, params, batch, tc)?;
    let mut failed = None;
    let err = check_gradient(params, &grad, eps, |p| match total_loss(enc, p, batch, tc) {
        Ok(l) => l.0,
        Err(e) => {
            failed = Some(e);
            f64::NAN
        }
    });
    match failed {
        Some(e) => Err(e),
        None => err,
    }
}

fn conv_windows(enc: &EncoderConfig, params: &[f64], x: &EmbeddedSequence) -> Vec<Vec<f64>> {
    let l = Layout::new(enc);
    let d = enc.input_width;
    let t_len = x.true_length();
    let xs = &x.stored()[..t_len * d];
    let mut out = Vec::new();
    for &(w, wo, bo) in &l.conv {
        let npos = if t_len >= w { t_len - w + 1 } else { 1 };
        for f in 0..enc.filters_per_width {
            let wf = &params[wo + f * w * d..wo + (f + 1) * w * d];
            out.push(
                (0..npos)
                    .map(|t| {
                        let rows = w.min(t_len - t);
                        params[bo + f] + math::dot(&wf[..rows * d], &xs[t * d..(t + rows) * d])
                    })
                    .collect(),
            );
        }
    }
    out
}

/// Distance of the batch to the nearest non-differentiable point of the
/// loss: ReLU inputs at zero, max-pool ties, hinge corners, zero distances
/// and a zero latent pre-normalization vector. Finite differences are only
/// meaningful when this margin is well above the probe step.
pub fn kink_margin(enc: &EncoderConfig, params: &[f64], batch: &[&Sample], tc: &TrainConfig) -> Result<f64> {
    let mut margin = f64::INFINITY;
    let mut zs = Vec::new();
    for s in batch {
        let fw = forward(enc, params, &s.x)?;
        for v in &fw.pre1 {
            margin = margin.min(v.abs());
        }
        margin = margin.min(fw.u_norm);
        if enc.kind == EncoderKind::TextCnn {
            for win in conv_windows(enc, params, &s.x) {
                let mut sorted = win.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                margin = margin.min(sorted[0].abs());
                if sorted.len() > 1 {
                    margin = margin.min(sorted[0] - sorted[1]);
                }
            }
        }
        zs.push(fw.z);
    }
    if tc.mode == LossMode::Contrastive {
        let ys: Vec<u8> = batch.iter().map(|s| s.y).collect();
        let yps: Vec<u32> = batch.iter().map(|s| s.family).collect();
        for i in 0..batch.len() {
            for j in pos_set(i, &ys, &yps) {
                margin = margin.min(math::euclidean(&zs[i], &zs[j]));
            }
            for j in neg_set(i, &ys) {
                let d = math::euclidean(&zs[i], &zs[j]);
                margin = margin.min(d).min((tc.margin - d).abs());
            }
        }
    }
    Ok(margin)
}

/// Adds `U(−scale, scale)` noise to every real row of each sample.
pub fn jitter(samples: &mut [Sample], scale: f64, rng: &mut Rng) {
    for s in samples {
        let t = s.x.true_length();
        let (w, l) = (s.x.width(), s.x.max_len());
        let mut data = s.x.stored().to_vec();
        for v in &mut data[..t * w] {
            *v += rng.gen_range(-scale..=scale);
        }
        s.x = EmbeddedSequence::from_matrix(data, w, l, t).expect("same shape");
    }
}
