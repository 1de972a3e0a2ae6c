//! Classical explicit semantic analysis.
//!
//! Every page is a concept. Pages are tfidf-weighted unit vectors over
//! terms; transposing that matrix gives each word a vector over concepts,
//! and relatedness of two words is the cosine of their concept vectors.

mod index;
mod sparse;

use thiserror::Error;

pub use index::{combine_word_vectors, EsaIndex};
pub use sparse::{
    decode_vectors, encode_vectors, read_vector_file, write_vector_file, Space, SparseVector, VectorError, ESAV_MAGIC,
    ESAV_VERSION,
};

use crate::textproc::TermId;

#[derive(Debug, Error, PartialEq)]
pub enum EsaError {
    #[error("tfidf domain violation: f={f}, df={df}, n_docs={n_docs}")]
    Domain { f: f64, df: f64, n_docs: f64 },
    #[error("unknown term id {0}")]
    UnknownTerm(TermId),
    #[error("term `{0}` is not in the vocabulary")]
    UnknownWord(String),
    #[error("unknown page id {0}")]
    UnknownPage(u64),
}

/// `(1 + ln f) * ln(n_docs / df)`, requiring `f >= 1` and
/// `1 <= df <= n_docs`.
pub fn tfidf(f: f64, df: f64, n_docs: f64) -> Result<f64, EsaError> {
    if !(f >= 1.0 && df >= 1.0 && df <= n_docs && n_docs.is_finite() && f.is_finite()) {
        return Err(EsaError::Domain { f, df, n_docs });
    }
    Ok(tfidf_weight(f, df, n_docs))
}

/// The shared kernel for page and categorical tfidf. Keeping one code path
/// makes the two agree bit-for-bit whenever their inputs coincide.
#[inline]
pub(crate) fn tfidf_weight(tf: f64, denom: f64, n_docs: f64) -> f64 {
    (1.0 + tf.ln()) * (n_docs / denom).ln()
}
