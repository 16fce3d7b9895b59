//! Traces and their embedding into fixed-width matrices: each call becomes
//! `[name vector ‖ hashed argument vector]`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::resource::FeatureHasher;
use crate::transe::{api_vector, EmbeddingTable};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgValue {
    Int(i64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiCallEvent {
    pub api_name: String,
    pub arguments: Vec<ArgValue>,
}

impl ApiCallEvent {
    pub fn new(api_name: impl Into<String>, arguments: Vec<ArgValue>) -> Self {
        Self {
            api_name: api_name.into(),
            arguments,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: u16,
    pub month: u8,
}

impl YearMonth {
    pub fn new(year: u16, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidTimestamp(alloc::format!("{year:04}-{month:02}")));
        }
        Ok(Self { year, month })
    }

    /// Parses `YYYY-MM`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidTimestamp(s.to_string());
        let b = s.as_bytes();
        if b.len() != 7 || b[4] != b'-' || !b.iter().enumerate().all(|(i, c)| i == 4 || c.is_ascii_digit()) {
            return Err(bad());
        }
        let year: u16 = s[..4].parse().map_err(|_| bad())?;
        let month: u8 = s[5..].parse().map_err(|_| bad())?;
        Self::new(year, month).map_err(|_| bad())
    }

    /// Months since year 0, for arithmetic.
    pub fn ordinal(self) -> u32 {
        u32::from(self.year) * 12 + u32::from(self.month) - 1
    }

    pub fn from_ordinal(o: u32) -> Self {
        Self {
            year: (o / 12) as u16,
            month: (o % 12) as u8 + 1,
        }
    }

    pub fn plus_months(self, n: u32) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// One sample. `family == 0` means benign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiTrace {
    pub id: String,
    pub calls: Vec<ApiCallEvent>,
    pub y: u8,
    pub family: u32,
    pub timestamp: YearMonth,
}

impl ApiTrace {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidTrace(alloc::format!("{}: {m}", self.id)));
        if self.y > 1 {
            return bad("label must be 0 or 1");
        }
        if (self.y == 0) != (self.family == 0) {
            return bad("benign iff family 0");
        }
        if self.calls.is_empty() {
            return bad("no calls");
        }
        if self.calls.iter().any(|c| c.api_name.is_empty()) {
            return bad("empty api name");
        }
        Ok(())
    }
}

/// The first `true_length` rows of an `L × width` matrix; the remaining rows
/// are implicit zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSequence {
    data: Vec<f64>,
    width: usize,
    max_len: usize,
    true_length: usize,
}

impl EmbeddedSequence {
    /// Builds from an explicit row-major matrix of at least `true_length`
    /// rows. Rows past `true_length` are kept as given, so callers can check
    /// that consumers ignore them.
    pub fn from_matrix(data: Vec<f64>, width: usize, max_len: usize, true_length: usize) -> Result<Self> {
        if width == 0 || true_length > max_len || !data.len().is_multiple_of(width) || data.len() / width < true_length {
            return Err(Error::ShapeMismatch {
                expected: true_length * width,
                found: data.len(),
            });
        }
        if data.len() / width > max_len {
            return Err(Error::ShapeMismatch {
                expected: max_len * width,
                found: data.len(),
            });
        }
        Ok(Self {
            data,
            width,
            max_len,
            true_length,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn true_length(&self) -> usize {
        self.true_length
    }

    /// Stored row `t`; `None` for implicit padding rows.
    pub fn row(&self, t: usize) -> Option<&[f64]> {
        self.data.get(t * self.width..(t + 1) * self.width)
    }

    /// The stored rows, row-major.
    pub fn stored(&self) -> &[f64] {
        &self.data
    }

    /// The full `max_len × width` matrix with padding materialized.
    pub fn to_matrix(&self) -> Vec<f64> {
        let mut m = self.data.clone();
        m.resize(self.max_len * self.width, 0.0);
        m
    }
}

/// How name and argument vectors are produced for each call.
#[derive(Debug, Clone)]
pub struct SequenceEmbedder {
    pub table: EmbeddingTable,
    /// `None` disables argument features.
    pub hasher: Option<FeatureHasher>,
    pub max_len: usize,
    pub dedup_consecutive: bool,
}

impl SequenceEmbedder {
    pub fn new(table: EmbeddingTable, hasher: Option<FeatureHasher>, max_len: usize) -> Self {
        Self {
            table,
            hasher,
            max_len,
            dedup_consecutive: false,
        }
    }

    pub fn width(&self) -> usize {
        self.table.dim + self.hasher.map_or(0, |h| h.bins)
    }

    pub fn embed_call(&self, call: &ApiCallEvent) -> Vec<f64> {
        let mut v = api_vector(&self.table, &call.api_name);
        if let Some(h) = &self.hasher {
            v.extend(crate::resource::embed_call_arguments(call, h));
        }
        v
    }

    pub fn embed_sequence(&self, trace: &ApiTrace) -> Result<EmbeddedSequence> {
        if self.max_len == 0 {
            return Err(Error::InvalidConfig("sequence length must be >= 1".into()));
        }
        if trace.calls.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let width = self.width();
        let mut data = Vec::with_capacity(self.max_len.min(trace.calls.len()) * width);
        let mut rows = 0;
        let mut prev: Option<&ApiCallEvent> = None;
        for call in &trace.calls {
            if rows == self.max_len {
                break;
            }
            if self.dedup_consecutive && prev == Some(call) {
                continue;
            }
            data.extend(self.embed_call(call));
            rows += 1;
            prev = Some(call);
        }
        EmbeddedSequence::from_matrix(data, width, self.max_len, rows)
    }
}

pub fn embed_call(call: &ApiCallEvent, table: &EmbeddingTable, hasher: &FeatureHasher) -> Vec<f64> {
    let mut v = api_vector(table, &call.api_name);
    v.extend(crate::resource::embed_call_arguments(call, hasher));
    v
}

pub fn embed_sequence(
    trace: &ApiTrace,
    table: &EmbeddingTable,
    hasher: &FeatureHasher,
    max_len: usize,
) -> Result<EmbeddedSequence> {
    SequenceEmbedder::new(table.clone(), Some(*hasher), max_len).embed_sequence(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgraph::{EntityKind, Relation};

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_parts(
            2,
            0,
            vec![
                (EntityKind::Api, "NtCreateFile".into(), vec![0.6, 0.8]),
                (EntityKind::Api, "Sleep".into(), vec![1.0, 0.0]),
            ],
            Relation::ALL.iter().map(|r| (*r, vec![0.0, 0.0])).collect(),
        )
        .unwrap()
    }

    fn trace(n: usize) -> ApiTrace {
        ApiTrace {
            id: "t".into(),
            calls: (0..n)
                .map(|i| {
                    ApiCallEvent::new(
                        "NtCreateFile",
                        vec![ArgValue::Str(alloc::format!("C:\\Users\\a\\{i}.txt")), ArgValue::Int(2)],
                    )
                })
                .collect(),
            y: 1,
            family: 3,
            timestamp: YearMonth::new(2017, 1).unwrap(),
        }
    }

    #[test]
    fn timestamps() {
        let t = YearMonth::parse("2017-03").unwrap();
        assert_eq!((t.year, t.month), (2017, 3));
        assert_eq!(t.to_string(), "2017-03");
        assert_eq!(t.plus_months(10).to_string(), "2018-01");
        assert!(YearMonth::parse("2017-13").is_err());
        assert!(YearMonth::parse("2017-3").is_err());
        assert!(YearMonth::parse("17-03-01").is_err());
    }

    #[test]
    fn trace_invariants() {
        assert!(trace(1).validate().is_ok());
        let mut t = trace(1);
        t.family = 0;
        assert!(t.validate().is_err());
        let mut t = trace(0);
        t.y = 1;
        assert!(t.validate().is_err());
    }

    #[test]
    fn unknown_api_without_args_is_zero() {
        let h = FeatureHasher::new(4, 0).unwrap();
        assert_eq!(embed_call(&ApiCallEvent::new("Nope", vec![]), &table(), &h), vec![0.0; 6]);
        assert_eq!(
            embed_call(&ApiCallEvent::new("Sleep", vec![]), &table(), &h),
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn call_is_name_then_hash() {
        let h = FeatureHasher::new(16, 2).unwrap();
        let path = "C:\\User\\Administrator\\AppData\\x.exe";
        let call = ApiCallEvent::new("NtCreateFile", vec![ArgValue::Str(path.into()), ArgValue::Int(2)]);
        let v = embed_call(&call, &table(), &h);
        assert_eq!(v.len(), 18);
        assert_eq!(&v[..2], &[0.6, 0.8]);
        let subs = crate::resource::substrings(path, crate::resource::ResourceKind::FilePath).unwrap();
        assert_eq!(v[2..].to_vec(), h.feature_hash(&subs).to_f64());
    }

    #[test]
    fn padding_and_truncation() {
        let h = FeatureHasher::new(4, 0).unwrap();
        let e = embed_sequence(&trace(1), &table(), &h, 4).unwrap();
        assert_eq!(e.true_length(), 1);
        for t in 1..4 {
            assert!(e.to_matrix()[t * 6..(t + 1) * 6].iter().all(|&x| x == 0.0));
        }
        let e = embed_sequence(&trace(9), &table(), &h, 4).unwrap();
        assert_eq!(e.true_length(), 4);
        let tr = trace(9);
        for t in 0..4 {
            assert_eq!(e.row(t).unwrap(), embed_call(&tr.calls[t], &table(), &h).as_slice());
        }
        let mut empty = trace(1);
        empty.calls.clear();
        assert_eq!(embed_sequence(&empty, &table(), &h, 4), Err(Error::EmptyTrace));
    }

    #[test]
    fn consecutive_dedup_is_opt_in() {
        let mut tr = trace(1);
        tr.calls.push(tr.calls[0].clone());
        let mut emb = SequenceEmbedder::new(table(), None, 8);
        assert_eq!(emb.embed_sequence(&tr).unwrap().true_length(), 2);
        emb.dedup_consecutive = true;
        assert_eq!(emb.embed_sequence(&tr).unwrap().true_length(), 1);
        assert_eq!(emb.width(), 2);
    }
}
