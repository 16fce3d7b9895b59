use alloc::vec;
use alloc::vec::Vec;

use super::train::{LossMode, Sample, TrainConfig};
use super::{backward, forward, EncoderConfig, Forward};
use crate::math;
use crate::Result;

/// Binary cross-entropy of one clamped probability.
pub fn bce_loss(f: f64, y: u8) -> f64 {
    if y == 1 {
        -math::ln(f)
    } else {
        -math::ln(1.0 - f)
    }
}

/// Same label, and for malicious samples the same family.
pub fn pos_set(i: usize, ys: &[u8], yps: &[u32]) -> Vec<usize> {
    (0..ys.len())
        .filter(|&j| j != i && ys[j] == ys[i] && (ys[i] == 0 || yps[j] == yps[i]))
        .collect()
}

pub fn neg_set(i: usize, ys: &[u8]) -> Vec<usize> {
    (0..ys.len()).filter(|&j| ys[j] != ys[i]).collect()
}

/// Sum over samples of mean positive distance plus mean negative hinge
/// `max(0, m − d)`. Empty sets contribute nothing.
pub fn contrastive_loss(zs: &[Vec<f64>], ys: &[u8], yps: &[u32], m: f64) -> f64 {
    contrastive_loss_grad(zs, ys, yps, m).0
}

/// Loss and its gradient w.r.t. every latent vector. The subgradient of the
/// distance at zero is taken as zero.
pub fn contrastive_loss_grad(zs: &[Vec<f64>], ys: &[u8], yps: &[u32], m: f64) -> (f64, Vec<Vec<f64>>) {
    let n = zs.len();
    let dim = zs.first().map_or(0, Vec::len);
    let mut grads = vec![vec![0.0; dim]; n];
    let mut total = 0.0;
    for i in 0..n {
        let pos = pos_set(i, ys, yps);
        let neg = neg_set(i, ys);
        if !pos.is_empty() {
            let w = 1.0 / pos.len() as f64;
            let mut s = 0.0;
            for &j in &pos {
                let d = math::euclidean(&zs[i], &zs[j]);
                s += d;
                add_distance_grad(&mut grads, zs, i, j, d, w);
            }
            total += s / pos.len() as f64;
        }
        if !neg.is_empty() {
            let w = 1.0 / neg.len() as f64;
            let mut s = 0.0;
            for &j in &neg {
                let d = math::euclidean(&zs[i], &zs[j]);
                if m - d > 0.0 {
                    s += m - d;
                    add_distance_grad(&mut grads, zs, i, j, d, -w);
                }
            }
            total += s / neg.len() as f64;
        }
    }
    (total, grads)
}

fn add_distance_grad(grads: &mut [Vec<f64>], zs: &[Vec<f64>], i: usize, j: usize, d: f64, scale: f64) {
    if d == 0.0 {
        return;
    }
    for k in 0..zs[i].len() {
        let g = scale * (zs[i][k] - zs[j][k]) / d;
        grads[i][k] += g;
        grads[j][k] -= g;
    }
}

fn labels(batch: &[&Sample]) -> (Vec<u8>, Vec<u32>) {
    (batch.iter().map(|s| s.y).collect(), batch.iter().map(|s| s.family).collect())
}

/// `L_con + λ·L_cla` in contrastive mode, `L_cla` alone in regular mode.
/// Returns `(total, L_con, L_cla)`.
pub fn total_loss(enc: &EncoderConfig, params: &[f64], batch: &[&Sample], tc: &TrainConfig) -> Result<(f64, f64, f64)> {
    let fws = batch
        .iter()
        .map(|s| forward(enc, params, &s.x))
        .collect::<Result<Vec<Forward>>>()?;
    Ok(combine(&fws, batch, tc).0)
}

fn combine(fws: &[Forward], batch: &[&Sample], tc: &TrainConfig) -> ((f64, f64, f64), Vec<Vec<f64>>, Vec<f64>) {
    let (ys, yps) = labels(batch);
    let cla: f64 = fws.iter().zip(&ys).map(|(fw, &y)| bce_loss(fw.f, y)).sum();
    let (con, dz) = match tc.mode {
        LossMode::Contrastive => {
            let zs: Vec<Vec<f64>> = fws.iter().map(|f| f.z.clone()).collect();
            contrastive_loss_grad(&zs, &ys, &yps, tc.margin)
        }
        LossMode::Regular => (0.0, vec![vec![0.0; fws.first().map_or(0, |f| f.z.len())]; fws.len()]),
    };
    let lambda = match tc.mode {
        LossMode::Contrastive => tc.lambda,
        LossMode::Regular => 1.0,
    };
    let dlogits: Vec<f64> = fws
        .iter()
        .zip(&ys)
        .map(|(fw, &y)| if fw.clamped { 0.0 } else { lambda * (fw.f - f64::from(y)) })
        .collect();
    ((con + lambda * cla, con, cla), dz, dlogits)
}

/// Loss components plus the gradient w.r.t. all parameters.
pub fn total_loss_grad(
    enc: &EncoderConfig,
    params: &[f64],
    batch: &[&Sample],
    tc: &TrainConfig,
) -> Result<((f64, f64, f64), Vec<f64>)> {
    let fws = batch
        .iter()
        .map(|s| forward(enc, params, &s.x))
        .collect::<Result<Vec<Forward>>>()?;
    let (loss, dz, dlogits) = combine(&fws, batch, tc);
    let mut grad = vec![0.0; params.len()];
    for (k, s) in batch.iter().enumerate() {
        backward(enc, params, &s.x, &fws[k], &dz[k], dlogits[k], &mut grad);
    }
    Ok((loss, grad))
}
