//! Corpus construction: PubMed / arXiv ingestion, journal filtering, label
//! maps, the arXiv subcategory taxonomy, and synthetic fixture corpora.

pub mod arxiv;
pub mod fetch;
pub mod filter;
pub mod pubmed;
mod record;
pub mod synth;
pub mod taxonomy;

use serde::{Deserialize, Serialize};

pub use arxiv::{parse_arxiv_metadata, ArxivParse};
pub use filter::{filter_journals, FilterConfig};
pub use pubmed::{parse_pubmed_xml, PubmedParse};
pub use record::{
    load_corpus, read_jsonl, save_corpus, validate_corpus, write_jsonl, AbstractRecord, JournalLabelMap, LabelIndex,
    Source,
};
pub use synth::{generate_synthetic_corpus, SynthConfig};
pub use taxonomy::SubcategoryTaxonomy;

/// A record the parser could not accept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// Line number (arXiv) or article index (PubMed).
    pub location: usize,
    pub id: Option<String>,
    pub reason: String,
}
