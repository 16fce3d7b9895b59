//! System-resource recognition in call arguments and signed feature hashing
//! of their hierarchical substrings.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::seed::{fnv1a, splitmix64};
use crate::seqembed::{ApiCallEvent, ArgValue};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceKind {
    FilePath,
    Dll,
    RegistryKey,
    Url,
    IpAddress,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 5] = [
        ResourceKind::FilePath,
        ResourceKind::Dll,
        ResourceKind::RegistryKey,
        ResourceKind::Url,
        ResourceKind::IpAddress,
    ];
}

fn is_ipv4(s: &str) -> bool {
    let parts: Vec<&str> = s.split('.').collect();
    parts.len() == 4
        && parts.iter().all(|p| {
            !p.is_empty() && p.len() <= 3 && p.bytes().all(|b| b.is_ascii_digit()) && p.parse::<u16>().is_ok_and(|v| v <= 255)
        })
}

fn is_drive_path(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 3 && b[0].is_ascii_alphabetic() && b[1] == b':' && b[2] == b'\\'
}

/// Rules are tried in the order Dll, RegistryKey, Url, IpAddress, FilePath.
pub fn classify_str(value: &str) -> Option<ResourceKind> {
    let lower_tail = value.len() >= 4 && value.as_bytes()[value.len() - 4..].eq_ignore_ascii_case(b".dll");
    if lower_tail {
        Some(ResourceKind::Dll)
    } else if value.starts_with("HKEY_") {
        Some(ResourceKind::RegistryKey)
    } else if value.starts_with("http") {
        Some(ResourceKind::Url)
    } else if is_ipv4(value) {
        Some(ResourceKind::IpAddress)
    } else if is_drive_path(value) {
        Some(ResourceKind::FilePath)
    } else {
        None
    }
}

pub fn classify_argument(value: &ArgValue) -> Option<ResourceKind> {
    match value {
        ArgValue::Int(_) => None,
        ArgValue::Str(s) => classify_str(s),
    }
}

fn hostname(url: &str) -> &str {
    let rest = url.find("://").map_or(url, |i| &url[i + 3..]);
    let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let authority = &rest[..end];
    let host = authority.rfind('@').map_or(authority, |i| &authority[i + 1..]);
    host.find(':').map_or(host, |i| &host[..i])
}

fn push_unique(out: &mut Vec<String>, s: String) {
    if !out.contains(&s) {
        out.push(s);
    }
}

/// Hierarchical substrings of a classified resource: backslash prefixes for
/// paths, DLLs and registry keys; hostname suffixes for URLs; dotted
/// prefixes for IPv4 addresses. Empty components are skipped.
pub fn substrings(value: &str, kind: ResourceKind) -> Result<Vec<String>> {
    let mut out = Vec::new();
    match kind {
        ResourceKind::FilePath | ResourceKind::Dll | ResourceKind::RegistryKey => {
            let mut acc = String::new();
            for part in value.split('\\').filter(|p| !p.is_empty()) {
                if !acc.is_empty() {
                    acc.push('\\');
                }
                acc.push_str(part);
                push_unique(&mut out, acc.clone());
            }
        }
        ResourceKind::Url => {
            let labels: Vec<&str> = hostname(value).split('.').filter(|p| !p.is_empty()).collect();
            for i in (0..labels.len()).rev() {
                push_unique(&mut out, labels[i..].join("."));
            }
        }
        ResourceKind::IpAddress => {
            let parts: Vec<&str> = value.split('.').filter(|p| !p.is_empty()).collect();
            for i in 1..=parts.len() {
                push_unique(&mut out, parts[..i].join("."));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyResource);
    }
    Ok(out)
}

/// Signed bin counts. Index `i` holds bin `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedVector {
    pub bins: Vec<i64>,
}

impl HashedVector {
    pub fn zeros(n: usize) -> Self {
        Self { bins: vec![0; n] }
    }

    pub fn add(&mut self, other: &HashedVector) {
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.bins.iter().map(|&b| b as f64).collect()
    }
}

/// Eq. (1) with caller-supplied hashes: `h` maps to `1..=n`, `xi` to ±1.
pub fn feature_hash_with<S: AsRef<str>>(
    items: &[S],
    n: usize,
    h: impl Fn(&str) -> usize,
    xi: impl Fn(&str) -> i64,
) -> HashedVector {
    let mut v = HashedVector::zeros(n);
    for s in items {
        let s = s.as_ref();
        let bin = h(s);
        assert!((1..=n).contains(&bin), "bin {bin} outside 1..={n}");
        v.bins[bin - 1] += xi(s);
    }
    v
}

/// Seeded 64-bit string hash providing the production `h` and `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureHasher {
    pub bins: usize,
    pub seed: u64,
}

impl Default for FeatureHasher {
    fn default() -> Self {
        Self { bins: 128, seed: 0 }
    }
}

impl FeatureHasher {
    pub fn new(bins: usize, seed: u64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("hash.bins must be >= 1".into()));
        }
        Ok(Self { bins, seed })
    }

    pub fn hash(&self, s: &str) -> u64 {
        splitmix64(fnv1a(s.as_bytes(), 0xCBF2_9CE4_8422_2325 ^ splitmix64(self.seed)))
    }

    /// `h(s) ∈ 1..=bins`.
    pub fn bin(&self, s: &str) -> usize {
        (self.hash(s) % self.bins as u64) as usize + 1
    }

    /// `ξ(s)`: +1 when the hash's high bit is clear, −1 otherwise.
    pub fn sign(&self, s: &str) -> i64 {
        if self.hash(s) >> 63 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn feature_hash<S: AsRef<str>>(&self, items: &[S]) -> HashedVector {
        feature_hash_with(items, self.bins, |s| self.bin(s), |s| self.sign(s))
    }

    /// Sum of the hashed substring sets of every resource argument.
    pub fn hash_arguments(&self, args: &[ArgValue]) -> HashedVector {
        let mut v = HashedVector::zeros(self.bins);
        for a in args {
            let ArgValue::Str(s) = a else { continue };
            let Some(kind) = classify_str(s) else { continue };
            if let Ok(items) = substrings(s, kind) {
                v.add(&self.feature_hash(&items));
            }
        }
        v
    }
}

pub fn embed_call_arguments(call: &ApiCallEvent, hasher: &FeatureHasher) -> Vec<f64> {
    hasher.hash_arguments(&call.arguments).to_f64()
}

/// Renames the last component of a resource, keeping its extension. Used by
/// the synthetic generator for leaf mutation.
pub fn replace_leaf(value: &str, kind: ResourceKind, new_leaf: &str) -> String {
    match kind {
        ResourceKind::FilePath | ResourceKind::Dll | ResourceKind::RegistryKey => {
            let (dir, leaf) = match value.rfind('\\') {
                Some(i) => (&value[..=i], &value[i + 1..]),
                None => ("", value),
            };
            let ext = leaf.rfind('.').map_or("", |i| &leaf[i..]);
            let mut s = dir.to_string();
            s.push_str(new_leaf);
            s.push_str(ext);
            s
        }
        ResourceKind::Url => {
            let host = hostname(value);
            let Some(start) = value.find(host) else {
                return value.to_string();
            };
            let first_label_end = host.find('.').unwrap_or(host.len());
            let mut s = value[..start].to_string();
            s.push_str(new_leaf);
            s.push_str(&value[start + first_label_end..]);
            s
        }
        ResourceKind::IpAddress => {
            let i = value.rfind('.').map_or(0, |i| i + 1);
            let octet = new_leaf.bytes().fold(0u32, |a, b| (a * 31 + u32::from(b)) % 254) + 1;
            let mut s = value[..i].to_string();
            s.push_str(&alloc::format!("{octet}"));
            s
        }
    }
}
