use std::path::{Path, PathBuf};

use anyhow::Context;
use scidoc_core::cluster::PurityRow;
use scidoc_core::metrics::TTest;
use scidoc_core::retrieval::FieldScore;
use scidoc_core::ProbeResult;
use serde::{Deserialize, Serialize};

/// Structured result written by the evaluation subcommands and read by
/// `report` and `compare`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResultFile {
    Probe { method: String, dataset: String, classes: Vec<String>, result: ProbeResult },
    Cluster { method: String, dataset: String, restarts: usize, rows: Vec<PurityRow> },
    Retrieve { method: String, fields: Vec<FieldScore>, mean_ap: Option<f64> },
    Compare { a: String, b: String, metric: String, mean_a: f64, mean_b: f64, test: TTest },
}

impl ResultFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{} is not a result file", path.display()))
    }

    pub fn method(&self) -> &str {
        match self {
            ResultFile::Probe { method, .. }
            | ResultFile::Cluster { method, .. }
            | ResultFile::Retrieve { method, .. } => method,
            ResultFile::Compare { a, .. } => a,
        }
    }
}

/// Percent with two decimals, as in the published tables.
pub fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

pub fn pct_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), pct)
}

/// CSV cell; quotes when needed.
pub fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_line(cells: &[String]) -> String {
    cells.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(",") + "\n"
}

pub fn md_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n", header.join(" | "));
    s.push_str(&format!("|{}\n", header.iter().map(|_| "---|").collect::<String>()));
    for r in rows {
        s.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    s
}

/// Writes `x.json` plus the `x.csv` / `x.md` companions; returns all paths.
pub fn write_result(output: &Path, r: &ResultFile, csv: &str, md: &str) -> anyhow::Result<Vec<PathBuf>> {
    let csv_path = output.with_extension("csv");
    let md_path = output.with_extension("md");
    let write = |p: &Path, s: &str| scidoc_core::binfmt::write_atomic(p, s.as_bytes());
    write(output, &(serde_json::to_string_pretty(r)? + "\n"))?;
    write(&csv_path, csv)?;
    write(&md_path, md)?;
    Ok(vec![output.to_path_buf(), csv_path, md_path])
}

pub fn method_name(explicit: Option<&str>, store: &Path) -> String {
    explicit.map_or_else(
        || store.file_stem().map_or_else(|| "embeddings".into(), |s| s.to_string_lossy().into_owned()),
        str::to_string,
    )
}
