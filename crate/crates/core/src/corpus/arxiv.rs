use std::collections::BTreeSet;
use std::io::BufRead;

use chrono::NaiveDate;
use serde::Deserialize;

use super::{AbstractRecord, Reject, Source};

#[derive(Debug, Default)]
pub struct ArxivParse {
    pub records: Vec<AbstractRecord>,
    /// `location` is the 1-based line number.
    pub rejects: Vec<Reject>,
}

#[derive(Deserialize)]
struct ArxivLine {
    id: Option<String>,
    title: Option<String>,
    #[serde(rename = "abstract")]
    abstract_text: Option<String>,
    categories: Option<String>,
    journal: Option<String>,
    date: Option<String>,
    update_date: Option<String>,
    versions: Option<Vec<ArxivVersion>>,
}

#[derive(Deserialize)]
struct ArxivVersion {
    created: Option<String>,
}

/// Archive prefix of a category code: `"cs.LG"` → `"cs"`, `"hep-th"` → `"hep-th"`.
pub fn major_category(code: &str) -> &str {
    code.split_once('.').map_or(code, |(major, _)| major)
}

fn parse_date(line: &ArxivLine) -> Option<NaiveDate> {
    if let Some(d) = line.date.as_deref().or(line.update_date.as_deref()) {
        if let Ok(d) = NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d") {
            return Some(d);
        }
    }
    let created = line.versions.as_ref()?.first()?.created.as_deref()?;
    chrono::DateTime::parse_from_rfc2822(created.trim()).ok().map(|d| d.date_naive())
}

fn convert(line: ArxivLine) -> Result<AbstractRecord, (Option<String>, String)> {
    let id = match line.id.as_deref().map(str::trim) {
        Some(id) if !id.is_empty() => id.to_string(),
        _ => return Err((None, "missing id".into())),
    };
    let fail = |msg: &str| Err((Some(id.clone()), msg.to_string()));
    let abstract_text = match line.abstract_text.as_deref().map(str::trim) {
        Some(a) if !a.is_empty() => a.to_string(),
        _ => return fail("missing abstract"),
    };
    let subcategories: BTreeSet<String> =
        line.categories.as_deref().unwrap_or("").split_whitespace().map(str::to_string).collect();
    if subcategories.is_empty() {
        return fail("missing categories");
    }
    let Some(date) = parse_date(&line) else {
        return fail("missing or unparseable date");
    };
    let field_labels = subcategories.iter().map(|c| major_category(c).to_string()).collect();
    // Without an explicit venue the primary (first listed) category stands in
    // for the journal.
    let journal = match line.journal.as_deref().map(str::trim) {
        Some(j) if !j.is_empty() => j.to_string(),
        _ => line.categories.as_deref().and_then(|c| c.split_whitespace().next()).unwrap().to_string(),
    };
    Ok(AbstractRecord {
        id,
        title: line.title.unwrap_or_default().trim().to_string(),
        abstract_text,
        journal,
        source: Source::Arxiv,
        date,
        field_labels,
        subcategories,
    })
}

/// Parses arXiv metadata, one JSON object per line (blank lines ignored).
///
/// Recognized keys: `id`, `title`, `abstract`, `categories` (space-separated
/// codes), optional `journal`, and a date from `date` / `update_date`
/// (`YYYY-MM-DD`) or the first `versions[].created` timestamp.
pub fn parse_arxiv_metadata<R: BufRead>(reader: R) -> ArxivParse {
    let mut out = ArxivParse::default();
    for (i, line) in reader.split(b'\n').enumerate() {
        let lineno = i + 1;
        let reject = |id, reason: String| Reject { location: lineno, id, reason };
        let bytes = match line {
            Ok(b) => b,
            Err(e) => {
                out.rejects.push(reject(None, e.to_string()));
                break;
            }
        };
        let Ok(text) = std::str::from_utf8(&bytes) else {
            out.rejects.push(reject(None, "invalid UTF-8".into()));
            continue;
        };
        if text.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ArxivLine>(text) {
            Ok(parsed) => match convert(parsed) {
                Ok(r) => out.records.push(r),
                Err((id, reason)) => out.rejects.push(reject(id, reason)),
            },
            Err(e) => out.rejects.push(reject(None, format!("unparseable line: {e}"))),
        }
    }
    out
}
