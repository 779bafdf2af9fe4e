use std::collections::{BTreeMap, HashSet};

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{AbstractRecord, JournalLabelMap};
use crate::error::{Error, Result};

/// Journal filtering thresholds.
///
/// The defaults follow the main-text rule (min 100, cap 300, at least one
/// 2021 paper). The stricter PubMed-only rule of at least 300 papers is
/// available by setting `min_per_journal = 300`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub max_per_journal: usize,
    pub min_per_journal: usize,
    pub required_recent_year: i32,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { max_per_journal: 300, min_per_journal: 100, required_recent_year: 2021 }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_per_journal < 1 || self.max_per_journal < self.min_per_journal {
            return Err(Error::invalid(format!(
                "need max_per_journal >= min_per_journal >= 1, got max {} min {}",
                self.max_per_journal, self.min_per_journal
            )));
        }
        Ok(())
    }
}

/// Applies the journal rules and builds the label map over the survivors.
///
/// Each journal is first truncated to its `max_per_journal` most recent
/// records (ties broken by ascending id). A journal survives when it has at
/// least `min_per_journal` records and its kept records include one dated in
/// `required_recent_year`. Survivors keep their input order.
pub fn filter_journals(
    records: &[AbstractRecord],
    cfg: &FilterConfig,
) -> Result<(Vec<AbstractRecord>, JournalLabelMap)> {
    cfg.validate()?;
    let mut by_journal: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_journal.entry(r.journal.as_str()).or_default().push(i);
    }

    let mut keep: HashSet<usize> = HashSet::new();
    let mut survivors = Vec::new();
    for (journal, mut idx) in by_journal {
        if idx.len() < cfg.min_per_journal {
            continue;
        }
        idx.sort_by(|&a, &b| {
            let (ra, rb) = (&records[a], &records[b]);
            rb.date.cmp(&ra.date).then_with(|| ra.id.cmp(&rb.id))
        });
        idx.truncate(cfg.max_per_journal);
        let recent = idx.iter().any(|&i| records[i].date.year() == cfg.required_recent_year);
        if !recent {
            continue;
        }
        keep.extend(idx);
        survivors.push(journal);
    }
    if survivors.is_empty() {
        return Err(Error::NoSurvivors);
    }
    let kept: Vec<AbstractRecord> =
        records.iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, r)| r.clone()).collect();
    Ok((kept, JournalLabelMap::from_names(survivors)))
}
