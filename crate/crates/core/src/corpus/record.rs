use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Pubmed,
    Arxiv,
}

/// One paper in the canonical interchange format.
///
/// Serialized as one JSON object per line with exactly the fields `id`,
/// `title`, `abstract`, `journal`, `source`, `date`, `field_labels` and
/// `subcategories`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub journal: String,
    pub source: Source,
    pub date: NaiveDate,
    pub field_labels: BTreeSet<String>,
    pub subcategories: BTreeSet<String>,
}

impl AbstractRecord {
    pub fn validate(&self) -> Result<()> {
        if self.abstract_text.trim().is_empty() {
            return Err(Error::invalid(format!("record {:?}: empty abstract", self.id)));
        }
        if self.journal.trim().is_empty() {
            return Err(Error::invalid(format!("record {:?}: empty journal", self.id)));
        }
        Ok(())
    }
}

/// Checks per-record invariants and id uniqueness.
pub fn validate_corpus(records: &[AbstractRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        r.validate()?;
        if !seen.insert(r.id.as_str()) {
            return Err(Error::DuplicateId(r.id.clone()));
        }
    }
    Ok(())
}

/// Class index into a [`JournalLabelMap`] (or any other label space).
pub type LabelIndex = usize;

/// Bijection between class names and contiguous indices `0..N`, ordered
/// lexicographically by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LabelMapRepr", into = "LabelMapRepr")]
pub struct JournalLabelMap {
    names: Vec<String>,
    index: HashMap<String, LabelIndex>,
}

#[derive(Serialize, Deserialize)]
struct LabelMapRepr {
    classes: Vec<String>,
}

impl TryFrom<LabelMapRepr> for JournalLabelMap {
    type Error = Error;
    fn try_from(r: LabelMapRepr) -> Result<Self> {
        let sorted = r.classes.windows(2).all(|w| w[0] < w[1]);
        if !sorted {
            return Err(Error::invalid("label map classes must be strictly sorted"));
        }
        Ok(JournalLabelMap::from_names(r.classes))
    }
}

impl From<JournalLabelMap> for LabelMapRepr {
    fn from(m: JournalLabelMap) -> Self {
        LabelMapRepr { classes: m.names }
    }
}

impl JournalLabelMap {
    /// Builds the map over the distinct names, sorted.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        let names: Vec<String> = set.into_iter().collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        JournalLabelMap { names, index }
    }

    pub fn from_journals(records: &[AbstractRecord]) -> Self {
        Self::from_names(records.iter().map(|r| r.journal.as_str()))
    }

    /// Number of classes.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<LabelIndex> {
        self.index.get(name).copied()
    }

    pub fn name_of(&self, idx: LabelIndex) -> Option<&str> {
        self.names.get(idx).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Journal class for every record, failing on the first unknown journal.
    pub fn labels_for(&self, records: &[AbstractRecord]) -> Result<Vec<LabelIndex>> {
        records
            .iter()
            .map(|r| self.index_of(&r.journal).ok_or_else(|| Error::UnknownJournal(r.journal.clone())))
            .collect()
    }
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[AbstractRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<AbstractRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Line { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AbstractRecord =
            serde_json::from_str(&line).map_err(|e| Error::Line { line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn save_corpus(path: &Path, records: &[AbstractRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records)?;
    crate::binfmt::write_atomic(path, &buf)
}

pub fn load_corpus(path: &Path) -> Result<Vec<AbstractRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(std::io::BufReader::new(f))
}
