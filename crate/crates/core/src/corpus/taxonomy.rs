use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AbstractRecord;
use crate::error::{Error, Result};

const SHIPPED: &str = include_str!("../../data/taxonomy.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subcategory {
    pub code: String,
    pub name: String,
}

/// One top-level arXiv field. `archives` are the archive prefixes (the part
/// of a category code before the dot) whose papers belong to this field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyField {
    pub field: String,
    pub name: String,
    pub archives: Vec<String>,
    pub subcategories: Vec<Subcategory>,
}

impl TaxonomyField {
    pub fn contains(&self, code: &str) -> bool {
        self.subcategories.iter().any(|s| s.code == code)
    }

    pub fn covers_archive(&self, archive: &str) -> bool {
        self.archives.iter().any(|a| a == archive)
    }

    /// True when any of the record's field labels is one of this field's
    /// archives.
    pub fn covers(&self, record: &AbstractRecord) -> bool {
        record.field_labels.iter().any(|f| self.covers_archive(f))
    }

    /// The record's subcategories that belong to this field.
    pub fn restrict<'r>(&self, record: &'r AbstractRecord) -> BTreeSet<&'r str> {
        record.subcategories.iter().map(String::as_str).filter(|c| self.contains(c)).collect()
    }
}

/// Field → subcategory mapping, in evaluation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcategoryTaxonomy {
    pub fields: Vec<TaxonomyField>,
}

impl SubcategoryTaxonomy {
    /// The six-field arXiv taxonomy bundled with the crate
    /// (CS 40, Math 32, Phys 51, EESS 4, Econ 3, Stat 6).
    pub fn shipped() -> Self {
        serde_json::from_str(SHIPPED).expect("bundled taxonomy parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: SubcategoryTaxonomy = serde_json::from_str(text)?;
        t.check()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for f in &self.fields {
            if !seen.insert(f.field.as_str()) {
                return Err(Error::invalid(format!("taxonomy field {:?} repeated", f.field)));
            }
            let codes: BTreeSet<_> = f.subcategories.iter().map(|s| &s.code).collect();
            if codes.len() != f.subcategories.len() {
                return Err(Error::invalid(format!("taxonomy field {:?} has duplicate subcategories", f.field)));
            }
        }
        Ok(())
    }

    pub fn field(&self, key: &str) -> Option<&TaxonomyField> {
        self.fields.iter().find(|f| f.field == key)
    }

    /// First field, in taxonomy order, that covers one of the record's
    /// field labels.
    pub fn field_of(&self, record: &AbstractRecord) -> Option<&TaxonomyField> {
        self.fields.iter().find(|f| f.covers(record))
    }

    pub fn cardinalities(&self) -> Vec<(&str, usize)> {
        self.fields.iter().map(|f| (f.field.as_str(), f.subcategories.len())).collect()
    }

    /// Every subcategory of the record must belong to a taxonomy field that
    /// covers one of the record's field labels.
    pub fn validate_record(&self, record: &AbstractRecord) -> Result<()> {
        for code in &record.subcategories {
            let ok = self.fields.iter().any(|f| f.covers(record) && f.contains(code));
            if !ok {
                return Err(Error::invalid(format!(
                    "record {:?}: subcategory {code:?} is outside the taxonomy of its fields",
                    record.id
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_cardinalities() {
        let t = SubcategoryTaxonomy::shipped();
        assert_eq!(
            t.cardinalities(),
            vec![("CS", 40), ("Math", 32), ("Phys", 51), ("EESS", 4), ("Econ", 3), ("Stat", 6)]
        );
        t.check().unwrap();
    }

    #[test]
    fn archives_match_codes() {
        let t = SubcategoryTaxonomy::shipped();
        for f in &t.fields {
            for s in &f.subcategories {
                let archive = super::super::arxiv::major_category(&s.code);
                assert!(f.covers_archive(archive), "{} not covered by {}", s.code, f.field);
            }
        }
    }
}
