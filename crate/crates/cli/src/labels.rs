use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use scidoc_core::corpus::arxiv::major_category;
use scidoc_core::corpus::load_corpus;
use scidoc_core::{AbstractRecord, EmbeddingMatrix, LabelIndex, SubcategoryTaxonomy};
use serde::Deserialize;

use crate::manifest::ManifestBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelBy {
    /// Taxonomy field (CS, Math, ...) of the record's arXiv archives.
    Field,
    Journal,
    /// First arXiv archive (`cs`, `hep-th`, ...).
    Archive,
}

/// Where class labels come from: a label file, or a corpus plus a rule.
#[derive(Args, Debug)]
pub struct LabelArgs {
    /// JSON lines of `{"id": ..., "label": ...}`.
    #[arg(long, conflicts_with = "corpus")]
    pub labels: Option<PathBuf>,
    /// Corpus whose records supply labels via `--label-by`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LabelBy::Field)]
    pub label_by: LabelBy,
    /// Taxonomy JSON for `--label-by field` (default: the bundled one).
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
}

#[derive(Deserialize)]
struct LabelLine {
    id: String,
    label: serde_json::Value,
}

pub fn read_label_file(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: LabelLine =
            serde_json::from_str(&line).with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        let label = match l.label {
            serde_json::Value::String(s) => s,
            v @ serde_json::Value::Number(_) => v.to_string(),
            other => bail!("{}: line {}: label must be a string or number, got {other}", path.display(), i + 1),
        };
        out.push((l.id, label));
    }
    Ok(out)
}

pub fn load_taxonomy(path: Option<&Path>, mb: &mut ManifestBuilder) -> anyhow::Result<SubcategoryTaxonomy> {
    Ok(match path {
        Some(p) => {
            mb.input(p)?;
            SubcategoryTaxonomy::load(p)?
        }
        None => SubcategoryTaxonomy::shipped(),
    })
}

pub fn record_label(r: &AbstractRecord, by: LabelBy, taxonomy: &SubcategoryTaxonomy) -> Option<String> {
    match by {
        LabelBy::Journal => Some(r.journal.clone()),
        LabelBy::Archive => r.field_labels.iter().next().map(|a| major_category(a).to_string()),
        LabelBy::Field => taxonomy.field_of(r).map(|f| f.field.clone()),
    }
}

/// Embedding rows that carry a label, in store order, with class indices
/// over the sorted label names.
pub struct Labeled {
    pub matrix: EmbeddingMatrix,
    pub labels: Vec<LabelIndex>,
    pub classes: Vec<String>,
    pub source: String,
}

pub fn resolve(m: &EmbeddingMatrix, args: &LabelArgs, mb: &mut ManifestBuilder) -> anyhow::Result<Labeled> {
    let (pairs, source) = match (&args.labels, &args.corpus) {
        (Some(p), None) => {
            mb.input(p)?;
            let stem = p.file_stem().map_or_else(|| "labels".into(), |s| s.to_string_lossy().into_owned());
            (read_label_file(p)?, stem)
        }
        (None, Some(c)) => {
            mb.input(c)?;
            let taxonomy = load_taxonomy(args.taxonomy.as_deref(), mb)?;
            let records = load_corpus(c)?;
            let mut pairs = Vec::with_capacity(records.len());
            let mut unlabeled = 0;
            for r in &records {
                match record_label(r, args.label_by, &taxonomy) {
                    Some(l) => pairs.push((r.id.clone(), l)),
                    None => unlabeled += 1,
                }
            }
            if unlabeled > 0 {
                log::warn!("{unlabeled} records have no {:?} label", args.label_by);
            }
            let name = format!("{:?}", args.label_by).to_lowercase();
            (pairs, name)
        }
        _ => bail!("give exactly one of --labels or --corpus"),
    };

    let mut by_id: HashMap<&str, &str> = HashMap::with_capacity(pairs.len());
    for (id, l) in &pairs {
        if by_id.insert(id, l).is_some() {
            bail!("label for {id:?} given twice");
        }
        if m.row_index(id).is_none() {
            bail!("labelled id {id:?} is not in the embedding store");
        }
    }
    let classes: Vec<String> = pairs.iter().map(|p| p.1.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let class_index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let ids: Vec<String> = m.ids().iter().filter(|id| by_id.contains_key(id.as_str())).cloned().collect();
    if ids.len() < m.rows() {
        log::warn!("{} of {} rows have no label and are skipped", m.rows() - ids.len(), m.rows());
    }
    let labels = ids.iter().map(|id| class_index[by_id[id.as_str()]]).collect();
    Ok(Labeled { matrix: m.select(&ids)?, labels, classes, source })
}
