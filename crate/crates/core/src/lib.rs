//! Label embeddings on the unit sphere.
//!
//! The pipeline turns a multi-label annotation corpus into dense class
//! embeddings by factorizing the pointwise mutual information (PMI) matrix of
//! label co-occurrences:
//!
//! 1. [`corpus`] builds the label vocabulary and counts co-occurrences.
//! 2. [`pmi`] turns the counts into a sparse symmetric PMI matrix.
//! 3. [`factorize`] eigendecomposes it and keeps `E = U·√Σ` for the top-k
//!    eigenpairs.
//! 4. [`embed`] encodes label sets as sums of rows, decodes vectors back to
//!    ranked labels by cosine proximity and places unseen classes.
//! 5. [`eval`] scores ranked predictions with class-weighted MAP@100.
//! 6. [`trainer`] compares cosine-proximity regression with logistic
//!    regression on synthetic data.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise. Results do not depend on the
//! thread count.

pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod factorize;
pub mod io;
mod par;
pub mod pmi;
pub mod trainer;

pub use corpus::{AnnotationRecord, CooccurrenceStats, LabelVocab, RawRecord};
pub use embed::{EmbeddedVector, RankedPredictions};
pub use error::{Error, Result};
pub use eval::{ClassWeights, EvalResult};
pub use factorize::{EmbeddingMatrix, Spectrum};
pub use pmi::{PmiMatrix, PmiMode, PmiOptions};
