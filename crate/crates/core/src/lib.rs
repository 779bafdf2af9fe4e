//! Toolkit for building scientific-abstract corpora, training a small
//! journal-classification encoder, and benchmarking document embeddings with
//! three standards: linear probing, clustering purity and pairwise retrieval.
//!
//! Any embedding source can be evaluated as long as it lands in the
//! [`embedstore`] binary layout.

pub mod binfmt;
pub mod cluster;
pub mod corpus;
pub mod embedstore;
pub mod encoder;
pub mod error;
pub mod metrics;
pub mod probe;
pub mod retrieval;

pub use corpus::{AbstractRecord, FilterConfig, JournalLabelMap, LabelIndex, Source, SubcategoryTaxonomy};
pub use embedstore::{assemble_input, EmbeddingMatrix, EncoderInput, SimilarityMetric};
pub use encoder::{ClassProbabilities, ToyEncoderParams, TrainConfig};
pub use error::{Error, Result};
pub use probe::{ProbeConfig, ProbeResult};
