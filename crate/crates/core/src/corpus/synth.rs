//! Deterministic synthetic corpora with field / journal / subcategory
//! structure, for exercising the evaluation pipeline at desk scale.
//!
//! Vocabulary layout (indices into `0..vocab_size`): the first half is a
//! common pool shared by every field; the rest is split into one disjoint
//! block per field. Each field block starts with a small core that every
//! document of the field draws from, followed by one slice per subcategory.
//! Journals add a signature drawn mostly from their primary subcategory.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::arxiv::major_category;
use super::taxonomy::SubcategoryTaxonomy;
use super::{AbstractRecord, Source};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_fields: usize,
    pub journals_per_field: usize,
    pub docs_per_journal: usize,
    pub vocab_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n_fields: 6, journals_per_field: 10, docs_per_journal: 50, vocab_size: 5000, seed: 7 }
    }
}

// Token mixture weights per document.
const P_COMMON: f64 = 0.35;
const P_CORE: f64 = 0.30;
const P_SUBCAT: f64 = 0.20;
// Remaining mass goes to the journal signature.

const SIGNATURE_FROM_SUBCAT: usize = 12;
const SIGNATURE_FROM_FIELD: usize = 4;
const SECOND_SUBCAT_PROB: f64 = 0.25;
const ABSTRACT_LEN: (usize, usize) = (50, 150);
const TITLE_LEN: (usize, usize) = (5, 10);

const ONSETS: [&str; 15] = ["b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Pronounceable, purely alphabetic word for a vocabulary index. Injective.
pub fn synthetic_word(mut index: usize) -> String {
    let base = ONSETS.len() * NUCLEI.len();
    let mut out = String::new();
    for _ in 0..3 {
        let s = index % base;
        out.push_str(ONSETS[s / NUCLEI.len()]);
        out.push_str(NUCLEI[s % NUCLEI.len()]);
        index /= base;
    }
    while index > 0 {
        let s = index % base;
        out.push_str(ONSETS[s / NUCLEI.len()]);
        out.push_str(NUCLEI[s % NUCLEI.len()]);
        index /= base;
    }
    out
}

struct FieldPlan {
    key: String,
    name: String,
    subcats: Vec<String>,
    core: Vec<usize>,
    slices: Vec<Vec<usize>>,
}

struct JournalPlan {
    name: String,
    primary: usize,
    signature: Vec<usize>,
}

fn field_plans(cfg: &SynthConfig) -> Vec<FieldPlan> {
    let taxonomy = SubcategoryTaxonomy::shipped();
    let v = cfg.vocab_size;
    let block = ((v - v / 2) / cfg.n_fields).max(1);
    let common = v.saturating_sub(block * cfg.n_fields);
    let n_sub_target = (cfg.journals_per_field / 2).max(1);

    (0..cfg.n_fields)
        .map(|f| {
            let (key, name, all_codes): (String, String, Vec<String>) = match taxonomy.fields.get(f) {
                Some(tf) => {
                    (tf.field.clone(), tf.name.clone(), tf.subcategories.iter().map(|s| s.code.clone()).collect())
                }
                None => {
                    let key = format!("field{}", f + 1);
                    let codes = (0..n_sub_target).map(|s| format!("{key}.s{s}")).collect();
                    (key.clone(), format!("Field {}", f + 1), codes)
                }
            };
            let n_sub = n_sub_target.min(all_codes.len());
            // Evenly spaced so multi-archive fields (Phys) span archives.
            let subcats: Vec<String> = (0..n_sub).map(|s| all_codes[s * all_codes.len() / n_sub].clone()).collect();

            let start = common + f * block;
            let ids: Vec<usize> = (start..start + block).map(|i| i % v).collect();
            let core_len = (block / 10).max(1).min(ids.len());
            let core = ids[..core_len].to_vec();
            let rest = if ids.len() > core_len { &ids[core_len..] } else { &ids[..] };
            let slice_len = (rest.len() / n_sub).max(1);
            let slices = (0..n_sub)
                .map(|s| {
                    let lo = (s * slice_len).min(rest.len() - 1);
                    let hi = ((s + 1) * slice_len).min(rest.len()).max(lo + 1);
                    rest[lo..hi].to_vec()
                })
                .collect();
            FieldPlan { key, name, subcats, core, slices }
        })
        .collect()
}

fn sample_text(
    rng: &mut ChaCha8Rng,
    len: usize,
    common: usize,
    field: &FieldPlan,
    doc_subcats: &[usize],
    journal: &JournalPlan,
) -> String {
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        let u: f64 = rng.random();
        let idx = if u < P_COMMON && common > 0 {
            rng.random_range(0..common)
        } else if u < P_COMMON + P_CORE {
            *field.core.choose(rng).unwrap()
        } else if u < P_COMMON + P_CORE + P_SUBCAT {
            let s = *doc_subcats.choose(rng).unwrap();
            *field.slices[s].choose(rng).unwrap()
        } else {
            *journal.signature.choose(rng).unwrap()
        };
        words.push(synthetic_word(idx));
    }
    words.join(" ")
}

/// Generates `n_fields × journals_per_field × docs_per_journal` records,
/// deterministic in `seed`. The first six fields take their names and
/// subcategory codes from the shipped arXiv taxonomy.
pub fn generate_synthetic_corpus(cfg: &SynthConfig) -> Result<Vec<AbstractRecord>> {
    if cfg.n_fields == 0 || cfg.journals_per_field == 0 || cfg.docs_per_journal == 0 || cfg.vocab_size == 0 {
        return Err(Error::invalid("synthetic corpus counts must all be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plans = field_plans(cfg);
    let block = ((cfg.vocab_size - cfg.vocab_size / 2) / cfg.n_fields).max(1);
    let common = cfg.vocab_size.saturating_sub(block * cfg.n_fields);

    let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    let span_days = (NaiveDate::from_ymd_opt(2021, 12, 31).unwrap() - start).num_days();
    let y2021 = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();

    let mut out = Vec::with_capacity(cfg.n_fields * cfg.journals_per_field * cfg.docs_per_journal);
    for (f, field) in plans.iter().enumerate() {
        let n_sub = field.subcats.len();
        let journals: Vec<JournalPlan> = (0..cfg.journals_per_field)
            .map(|j| {
                let primary = j % n_sub;
                let mut signature: Vec<usize> =
                    field.slices[primary].choose_multiple(&mut rng, SIGNATURE_FROM_SUBCAT).copied().collect();
                let all: Vec<usize> = field.slices.iter().flatten().copied().collect();
                signature.extend(all.choose_multiple(&mut rng, SIGNATURE_FROM_FIELD).copied());
                JournalPlan { name: format!("{} Journal {:02}", field.name, j + 1), primary, signature }
            })
            .collect();

        for (j, journal) in journals.iter().enumerate() {
            for d in 0..cfg.docs_per_journal {
                let mut doc_subcats = vec![journal.primary];
                if rng.random_bool(SECOND_SUBCAT_PROB) {
                    let extra = rng.random_range(0..n_sub);
                    if extra != journal.primary {
                        doc_subcats.push(extra);
                    }
                }
                let title_len = rng.random_range(TITLE_LEN.0..=TITLE_LEN.1);
                let abs_len = rng.random_range(ABSTRACT_LEN.0..=ABSTRACT_LEN.1);
                let title = sample_text(&mut rng, title_len, common, field, &doc_subcats, journal);
                let abstract_text = sample_text(&mut rng, abs_len, common, field, &doc_subcats, journal);
                let date = if d == 0 {
                    y2021 + chrono::Days::new(rng.random_range(0..365))
                } else {
                    start + chrono::Days::new(rng.random_range(0..=span_days as u64))
                };
                let subcategories: BTreeSet<String> = doc_subcats.iter().map(|&s| field.subcats[s].clone()).collect();
                let field_labels = subcategories.iter().map(|c| major_category(c).to_string()).collect();
                out.push(AbstractRecord {
                    id: format!("syn-f{f:02}-j{j:03}-d{d:05}"),
                    title,
                    abstract_text,
                    journal: journal.name.clone(),
                    source: Source::Arxiv,
                    date,
                    field_labels,
                    subcategories,
                });
            }
        }
    }
    Ok(out)
}

/// Taxonomy field key for each synthetic field index, in generation order.
pub fn synthetic_field_keys(n_fields: usize) -> Vec<String> {
    let cfg = SynthConfig { n_fields, ..SynthConfig::default() };
    field_plans(&cfg).into_iter().map(|p| p.key).collect()
}
