use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng as _;

use crate::seed::Rng;
use crate::{Error, Result};

/// Indices into a dataset. For `k < n`, entry `k + n` shares the label and
/// family of entry `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastiveBatch {
    pub indices: Vec<usize>,
    pub n: usize,
    /// Set when some mirror had to reuse an already chosen sample.
    pub with_replacement: bool,
}

fn class_members(labels: &[(u8, u32)]) -> BTreeMap<(u8, u32), Vec<usize>> {
    let mut m: BTreeMap<(u8, u32), Vec<usize>> = BTreeMap::new();
    for (i, c) in labels.iter().enumerate() {
        m.entry(*c).or_default().push(i);
    }
    m
}

/// Draws a mirror partner with the same `(y, y′)` for each entry of `first`,
/// avoiding samples already in the batch. When a class runs out, partners
/// are drawn with replacement (excluding the anchor itself where possible)
/// if `allow_replacement`, otherwise `InsufficientClass` is returned.
pub fn mirror_half(
    first: &[usize],
    labels: &[(u8, u32)],
    rng: &mut Rng,
    allow_replacement: bool,
) -> Result<ContrastiveBatch> {
    let members = class_members(labels);
    let mut used: BTreeSet<usize> = first.iter().copied().collect();
    let mut indices = first.to_vec();
    let mut replaced = false;
    for &anchor in first {
        let class = labels[anchor];
        let pool = &members[&class];
        let fresh: Vec<usize> = pool.iter().copied().filter(|i| !used.contains(i)).collect();
        let pick = if !fresh.is_empty() {
            fresh[rng.gen_range(0..fresh.len())]
        } else if !allow_replacement {
            return Err(Error::InsufficientClass(class.1));
        } else {
            replaced = true;
            let others: Vec<usize> = pool.iter().copied().filter(|&i| i != anchor).collect();
            if others.is_empty() {
                anchor
            } else {
                others[rng.gen_range(0..others.len())]
            }
        };
        used.insert(pick);
        indices.push(pick);
    }
    Ok(ContrastiveBatch {
        indices,
        n: first.len(),
        with_replacement: replaced,
    })
}

/// First half: `n` samples uniformly without replacement; second half:
/// class-matched mirrors.
pub fn build_contrastive_batch(
    labels: &[(u8, u32)],
    n: usize,
    rng: &mut Rng,
    allow_replacement: bool,
) -> Result<ContrastiveBatch> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n == 0 || n > labels.len() {
        return Err(Error::InvalidConfig(alloc::format!(
            "batch half size {n} for {} samples",
            labels.len()
        )));
    }
    let first: Vec<usize> = sample(rng, labels.len(), n).into_vec();
    mirror_half(&first, labels, rng, allow_replacement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;

    fn dataset() -> Vec<(u8, u32)> {
        let mut v = Vec::new();
        for _ in 0..10 {
            v.push((0, 0));
        }
        for f in 1..=3 {
            for _ in 0..4 {
                v.push((1, f));
            }
        }
        v
    }

    fn check_mirror(b: &ContrastiveBatch, labels: &[(u8, u32)]) {
        assert_eq!(b.indices.len(), 2 * b.n);
        for k in 0..b.n {
            assert_eq!(labels[b.indices[k]], labels[b.indices[k + b.n]]);
        }
    }

    #[test]
    fn single_family_mirrors_stay_in_family() {
        let labels: Vec<(u8, u32)> = (0..8).map(|_| (1, 6)).collect();
        let b = build_contrastive_batch(&labels, 4, &mut seed::rng(0), false).unwrap();
        check_mirror(&b, &labels);
        assert!(b.indices.iter().all(|&i| labels[i] == (1, 6)));
        assert!(!b.with_replacement);
    }

    #[test]
    fn singleton_class_errors_without_fallback() {
        let labels = vec![(0, 0), (0, 0), (1, 9)];
        let mut rng = seed::rng(4);
        let first = [2];
        assert_eq!(mirror_half(&first, &labels, &mut rng, false), Err(Error::InsufficientClass(9)));
        let b = mirror_half(&first, &labels, &mut rng, true).unwrap();
        assert!(b.with_replacement);
        assert_eq!(b.indices, vec![2, 2]);
    }

    #[test]
    fn halves_have_equal_histograms() {
        let labels = dataset();
        let mut rng = seed::rng(11);
        for _ in 0..100 {
            let b = build_contrastive_batch(&labels, 8, &mut rng, true).unwrap();
            let hist = |r: core::ops::Range<usize>| {
                let mut h: BTreeMap<(u8, u32), usize> = BTreeMap::new();
                for k in r {
                    *h.entry(labels[b.indices[k]]).or_default() += 1;
                }
                h
            };
            assert_eq!(hist(0..8), hist(8..16));
        }
    }

    proptest! {
        #[test]
        fn mirror_invariant(seed_v in any::<u64>(), n in 1usize..12) {
            let labels = dataset();
            let b = build_contrastive_batch(&labels, n, &mut seed::rng(seed_v), true).unwrap();
            check_mirror(&b, &labels);
            let first: BTreeSet<usize> = b.indices[..n].iter().copied().collect();
            prop_assert_eq!(first.len(), n);
        }
    }
}
