//! Sparse non-negative vectors over term or concept dimensions, and their
//! `ESAV` binary encoding.
//!
//! Binary layout (little-endian): magic `ESAV`, version `u16`, space tag
//! `u8` (0 = term space, 1 = concept space), entry count `u64`, then
//! `count` pairs of (`u32` dimension, `f64` weight) sorted by dimension.
//! A vector file is a concatenation of such records.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ESAV_MAGIC: &[u8; 4] = b"ESAV";
pub const ESAV_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 8;
const ENTRY_LEN: usize = 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Term,
    Concept,
}

impl Space {
    fn tag(self) -> u8 {
        match self {
            Space::Term => 0,
            Space::Concept => 1,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Space::Term),
            1 => Some(Space::Concept),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("dimensions must be strictly increasing (saw {prev} then {next})")]
    Unsorted { prev: u32, next: u32 },
    #[error("weight at dimension {0} is not finite")]
    NonFinite(u32),
    #[error("weight at dimension {0} is negative")]
    Negative(u32),
    #[error("bad magic bytes, expected ESAV")]
    BadMagic,
    #[error("unsupported ESAV version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown space tag {0}")]
    BadSpaceTag(u8),
    #[error("truncated vector record")]
    Truncated,
}

/// Sorted `(dimension, weight)` pairs. Weights are finite and strictly
/// positive; zeros are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    space: Space,
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn zero(space: Space) -> Self {
        SparseVector { space, entries: Vec::new() }
    }

    /// Validates ordering and weights; zero weights are dropped.
    pub fn new(space: Space, entries: Vec<(u32, f64)>) -> Result<Self, VectorError> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(VectorError::Unsorted { prev: w[0].0, next: w[1].0 });
            }
        }
        for &(d, x) in &entries {
            if !x.is_finite() {
                return Err(VectorError::NonFinite(d));
            }
            if x < 0.0 {
                return Err(VectorError::Negative(d));
            }
        }
        let mut entries = entries;
        entries.retain(|&(_, x)| x != 0.0);
        Ok(SparseVector { space, entries })
    }

    /// Caller guarantees sorted, finite, non-negative input.
    pub(crate) fn from_sorted(space: Space, mut entries: Vec<(u32, f64)>) -> Self {
        entries.retain(|&(_, x)| x != 0.0);
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, x)| x.is_finite() && x > 0.0));
        SparseVector { space, entries }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, dim: u32) -> f64 {
        self.entries.binary_search_by_key(&dim, |e| e.0).map(|i| self.entries[i].1).unwrap_or(0.0)
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, x)| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    /// Merge-join dot product; symmetric bit-for-bit.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Cosine similarity in `[0, 1]`; 0 when either side is zero.
    pub fn cosine(&self, other: &SparseVector) -> f64 {
        if self.is_zero() || other.is_zero() {
            return 0.0;
        }
        // sqrt(a2 * b2) rather than |a|*|b|: for identical inputs this is
        // exactly a2, so self-similarity is exactly 1.
        let denom = (self.squared_norm() * other.squared_norm()).sqrt();
        (self.dot(other) / denom).clamp(0.0, 1.0)
    }

    /// Unit-length copy; the zero vector stays zero.
    pub fn normalized(&self) -> SparseVector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        SparseVector::from_sorted(self.space, self.entries.iter().map(|&(d, x)| (d, x / n)).collect())
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.reserve(HEADER_LEN + self.entries.len() * ENTRY_LEN);
        out.extend_from_slice(ESAV_MAGIC);
        out.extend_from_slice(&ESAV_VERSION.to_le_bytes());
        out.push(self.space.tag());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for &(d, x) in &self.entries {
            out.extend_from_slice(&d.to_le_bytes());
            out.extend_from_slice(&x.to_le_bytes());
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode(&mut out);
        out
    }

    /// Decodes one record from the front of `bytes`, returning the vector
    /// and the number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(SparseVector, usize), VectorError> {
        if bytes.len() < HEADER_LEN {
            return Err(VectorError::Truncated);
        }
        if &bytes[..4] != ESAV_MAGIC {
            return Err(VectorError::BadMagic);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != ESAV_VERSION {
            return Err(VectorError::UnsupportedVersion(version));
        }
        let space = Space::from_tag(bytes[6]).ok_or(VectorError::BadSpaceTag(bytes[6]))?;
        let count = u64::from_le_bytes(bytes[7..15].try_into().unwrap());
        let body = usize::try_from(count).ok().and_then(|c| c.checked_mul(ENTRY_LEN)).ok_or(VectorError::Truncated)?;
        let end = HEADER_LEN.checked_add(body).ok_or(VectorError::Truncated)?;
        if bytes.len() < end {
            return Err(VectorError::Truncated);
        }
        let entries = bytes[HEADER_LEN..end]
            .chunks_exact(ENTRY_LEN)
            .map(|c| (u32::from_le_bytes(c[..4].try_into().unwrap()), f64::from_le_bytes(c[4..].try_into().unwrap())))
            .collect();
        Ok((SparseVector::new(space, entries)?, end))
    }

    /// `dim\tweight` lines in dimension order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for &(d, x) in &self.entries {
            writeln!(out, "{d}\t{x}")?;
        }
        Ok(())
    }
}

pub fn encode_vectors(vectors: &[SparseVector]) -> Vec<u8> {
    let mut out = Vec::new();
    for v in vectors {
        v.encode(&mut out);
    }
    out
}

pub fn decode_vectors(mut bytes: &[u8]) -> Result<Vec<SparseVector>, VectorError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let (v, used) = SparseVector::decode(bytes)?;
        out.push(v);
        bytes = &bytes[used..];
    }
    Ok(out)
}

pub fn write_vector_file(path: &Path, vectors: &[SparseVector]) -> io::Result<()> {
    fs::write(path, encode_vectors(vectors))
}

pub fn read_vector_file(path: &Path) -> io::Result<Vec<SparseVector>> {
    let bytes = fs::read(path)?;
    decode_vectors(&bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
