//! Streaming parser for PubMed e-utils `efetch` XML (`PubmedArticleSet`).

use std::collections::BTreeSet;

use chrono::NaiveDate;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{AbstractRecord, Reject, Source};
use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct PubmedParse {
    pub records: Vec<AbstractRecord>,
    pub skipped_no_abstract: usize,
    pub skipped_non_english: usize,
    /// `location` is the 0-based index of the article within the document.
    pub rejects: Vec<Reject>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Target {
    Pmid,
    Title,
    AbstractText,
    Journal,
    Language,
    PubYear,
    PubMonth,
    PubDay,
    MedlineDate,
    ArtYear,
    ArtMonth,
    ArtDay,
}

#[derive(Default)]
struct ArticleState {
    pmid: Option<String>,
    title: String,
    abstract_parts: Vec<String>,
    journals: Vec<String>,
    languages: Vec<String>,
    pub_ymd: [Option<String>; 3],
    medline_date: Option<String>,
    art_ymd: [Option<String>; 3],
}

fn ends_with(path: &[String], suffix: &[&str]) -> bool {
    path.len() >= suffix.len() && path[path.len() - suffix.len()..].iter().zip(suffix).all(|(a, b)| a == b)
}

fn target_for(path: &[String]) -> Option<Target> {
    let name = path.last()?.as_str();
    let t = match name {
        "PMID" if ends_with(path, &["MedlineCitation", "PMID"]) => Target::Pmid,
        "ArticleTitle" if ends_with(path, &["Article", "ArticleTitle"]) => Target::Title,
        "AbstractText" if ends_with(path, &["Article", "Abstract", "AbstractText"]) => Target::AbstractText,
        "Title" if ends_with(path, &["Article", "Journal", "Title"]) => Target::Journal,
        "Language" if ends_with(path, &["Article", "Language"]) => Target::Language,
        "Year" if ends_with(path, &["JournalIssue", "PubDate", "Year"]) => Target::PubYear,
        "Month" if ends_with(path, &["JournalIssue", "PubDate", "Month"]) => Target::PubMonth,
        "Day" if ends_with(path, &["JournalIssue", "PubDate", "Day"]) => Target::PubDay,
        "MedlineDate" if ends_with(path, &["JournalIssue", "PubDate", "MedlineDate"]) => Target::MedlineDate,
        "Year" if ends_with(path, &["Article", "ArticleDate", "Year"]) => Target::ArtYear,
        "Month" if ends_with(path, &["Article", "ArticleDate", "Month"]) => Target::ArtMonth,
        "Day" if ends_with(path, &["Article", "ArticleDate", "Day"]) => Target::ArtDay,
        _ => return None,
    };
    Some(t)
}

fn language_attr(e: &BytesStart<'_>) -> Option<String> {
    e.attributes().flatten().find_map(|a| {
        let key = a.key.as_ref();
        if key.eq_ignore_ascii_case(b"Language") || key == b"lang" || key == b"xml:lang" {
            Some(String::from_utf8_lossy(&a.value).into_owned())
        } else {
            None
        }
    })
}

fn is_english(lang: &str) -> bool {
    matches!(lang.trim().to_ascii_lowercase().as_str(), "eng" | "en" | "english")
}

fn month_number(m: &str) -> Option<u32> {
    let m = m.trim();
    if let Ok(n) = m.parse::<u32>() {
        return (1..=12).contains(&n).then_some(n);
    }
    const NAMES: [&str; 12] = ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"];
    let lower = m.to_ascii_lowercase();
    NAMES.iter().position(|n| lower.starts_with(n)).map(|i| i as u32 + 1)
}

fn ymd_date(ymd: &[Option<String>; 3]) -> Option<NaiveDate> {
    let year: i32 = ymd[0].as_deref()?.trim().parse().ok()?;
    let month = ymd[1].as_deref().and_then(month_number).unwrap_or(1);
    let day = ymd[2].as_deref().and_then(|d| d.trim().parse().ok()).unwrap_or(1);
    NaiveDate::from_ymd_opt(year, month, day).or_else(|| NaiveDate::from_ymd_opt(year, month, 1))
}

/// `"2021 Jan-Feb"` → 2021-01-01.
fn medline_date(s: &str) -> Option<NaiveDate> {
    let mut parts = s.split_whitespace();
    let year: i32 = parts.next()?.get(..4)?.parse().ok()?;
    let month = parts.next().and_then(month_number).unwrap_or(1);
    NaiveDate::from_ymd_opt(year, month, 1)
}

enum Outcome {
    Record(AbstractRecord),
    NoAbstract,
    NonEnglish,
    Reject(Option<String>, String),
}

impl ArticleState {
    fn finish(self) -> Outcome {
        let pmid = match self.pmid.as_deref().map(str::trim) {
            Some(p) if !p.is_empty() => p.to_string(),
            _ => return Outcome::Reject(None, "missing PMID".into()),
        };
        let journals: BTreeSet<&str> = self.journals.iter().map(|j| j.trim()).filter(|j| !j.is_empty()).collect();
        let journal = match journals.len() {
            1 => journals.into_iter().next().unwrap().to_string(),
            0 => return Outcome::Reject(Some(pmid), "missing journal".into()),
            n => return Outcome::Reject(Some(pmid), format!("{n} journal names")),
        };
        let abstract_text =
            self.abstract_parts.iter().map(|p| p.trim()).filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" ");
        if abstract_text.is_empty() {
            return Outcome::NoAbstract;
        }
        if !self.languages.is_empty() && !self.languages.iter().any(|l| is_english(l)) {
            return Outcome::NonEnglish;
        }
        let date = ymd_date(&self.pub_ymd)
            .or_else(|| self.medline_date.as_deref().and_then(medline_date))
            .or_else(|| ymd_date(&self.art_ymd));
        let Some(date) = date else {
            return Outcome::Reject(Some(pmid), "missing publication date".into());
        };
        Outcome::Record(AbstractRecord {
            id: pmid,
            title: self.title.trim().to_string(),
            abstract_text,
            journal,
            source: Source::Pubmed,
            date,
            field_labels: BTreeSet::new(),
            subcategories: BTreeSet::new(),
        })
    }

    fn push_text(&mut self, target: Target, text: &str) {
        let slot = match target {
            Target::Pmid => self.pmid.get_or_insert_with(String::new),
            Target::Title => &mut self.title,
            Target::AbstractText => self.abstract_parts.last_mut().expect("opened on start"),
            Target::Journal => self.journals.last_mut().expect("opened on start"),
            Target::Language => self.languages.last_mut().expect("opened on start"),
            Target::PubYear => self.pub_ymd[0].get_or_insert_with(String::new),
            Target::PubMonth => self.pub_ymd[1].get_or_insert_with(String::new),
            Target::PubDay => self.pub_ymd[2].get_or_insert_with(String::new),
            Target::MedlineDate => self.medline_date.get_or_insert_with(String::new),
            Target::ArtYear => self.art_ymd[0].get_or_insert_with(String::new),
            Target::ArtMonth => self.art_ymd[1].get_or_insert_with(String::new),
            Target::ArtDay => self.art_ymd[2].get_or_insert_with(String::new),
        };
        slot.push_str(text);
    }
}

/// Parses one e-utils XML page. One outcome per `PubmedArticle`, in document
/// order: a record, a skip (no abstract / non-English), or a reject (missing
/// PMID or journal, more than one journal name, no usable date).
///
/// Language comes from `Article/Language` elements or a language attribute on
/// the abstract; when neither is present the article is accepted.
pub fn parse_pubmed_xml(xml: &[u8]) -> Result<PubmedParse> {
    let mut reader = Reader::from_reader(xml);
    reader.config_mut().check_end_names = true;

    let mut out = PubmedParse::default();
    let mut path: Vec<String> = Vec::new();
    let mut article: Option<ArticleState> = None;
    let mut article_index = 0usize;
    // (target, depth of the element that opened it)
    let mut capture: Option<(Target, usize)> = None;
    let mut buf = Vec::new();

    let xml_err = |reader: &Reader<&[u8]>, message: String| Error::Xml { offset: reader.error_position(), message };

    loop {
        let ev = reader.read_event_into(&mut buf).map_err(|e| xml_err(&reader, e.to_string()))?;
        match ev {
            Event::Start(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                path.push(name);
                if path.last().unwrap() == "PubmedArticle" {
                    article = Some(ArticleState::default());
                } else if let (Some(a), None) = (article.as_mut(), capture) {
                    if let Some(t) = target_for(&path) {
                        match t {
                            Target::AbstractText => {
                                a.abstract_parts.push(String::new());
                                if let Some(l) = language_attr(&e) {
                                    a.languages.push(l);
                                }
                            }
                            Target::Journal => a.journals.push(String::new()),
                            Target::Language => a.languages.push(String::new()),
                            _ => {}
                        }
                        capture = Some((t, path.len()));
                    } else if path.last().unwrap() == "Abstract" {
                        if let Some(l) = language_attr(&e) {
                            a.languages.push(l);
                        }
                    }
                }
            }
            Event::Empty(e) => {
                // Self-closing target elements contribute an empty slot.
                if let (Some(a), None) = (article.as_mut(), capture) {
                    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                    path.push(name);
                    match target_for(&path) {
                        Some(Target::AbstractText) => a.abstract_parts.push(String::new()),
                        Some(Target::Journal) => a.journals.push(String::new()),
                        _ => {}
                    }
                    path.pop();
                }
            }
            Event::End(_) => {
                if matches!(capture, Some((_, d)) if d == path.len()) {
                    capture = None;
                }
                let name = path.pop();
                if name.as_deref() == Some("PubmedArticle") {
                    let state = article.take().unwrap_or_default();
                    match state.finish() {
                        Outcome::Record(r) => out.records.push(r),
                        Outcome::NoAbstract => out.skipped_no_abstract += 1,
                        Outcome::NonEnglish => out.skipped_non_english += 1,
                        Outcome::Reject(id, reason) => out.rejects.push(Reject { location: article_index, id, reason }),
                    }
                    article_index += 1;
                }
            }
            Event::Text(t) => {
                if let (Some((target, _)), Some(a)) = (capture, article.as_mut()) {
                    let text = t.unescape().map_err(|e| xml_err(&reader, e.to_string()))?;
                    a.push_text(target, &text);
                }
            }
            Event::CData(t) => {
                if let (Some((target, _)), Some(a)) = (capture, article.as_mut()) {
                    a.push_text(target, &String::from_utf8_lossy(&t));
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if let Some(open) = path.last() {
        return Err(Error::Xml {
            offset: xml.len() as u64,
            message: format!("unexpected end of document inside <{open}>"),
        });
    }
    Ok(out)
}
