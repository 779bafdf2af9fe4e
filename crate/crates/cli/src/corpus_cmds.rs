use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use clap::Args;
use scidoc_core::corpus::fetch::{FetchConfig, HttpTransport, PubmedFetcher, ReplayTransport, Transport};
use scidoc_core::corpus::{
    filter_journals, generate_synthetic_corpus, load_corpus, parse_arxiv_metadata, parse_pubmed_xml, save_corpus,
    validate_corpus, Reject,
};
use scidoc_core::AbstractRecord;
use serde::Serialize;

use crate::config::set;
use crate::manifest::{guard_output, ManifestBuilder};
use crate::Ctx;

#[derive(Serialize)]
struct IngestStats {
    records: usize,
    skipped_no_abstract: usize,
    skipped_non_english: usize,
    rejected: usize,
}

fn write_rejects(output: &Path, rejects: &[(String, Reject)]) -> anyhow::Result<PathBuf> {
    let path = output.with_extension("rejects.jsonl");
    let mut text = String::new();
    for (file, r) in rejects {
        let line = serde_json::json!({ "file": file, "location": r.location, "id": r.id, "reason": r.reason });
        text.push_str(&line.to_string());
        text.push('\n');
    }
    scidoc_core::binfmt::write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

fn finish_ingest(
    ctx: &Ctx,
    name: &str,
    records: Vec<AbstractRecord>,
    rejects: Vec<(String, Reject)>,
    skipped: (usize, usize),
    mut mb: ManifestBuilder,
) -> anyhow::Result<()> {
    let output = ctx.output()?;
    validate_corpus(&records)?;
    save_corpus(output, &records)?;
    let rej_path = write_rejects(output, &rejects)?;
    eprintln!(
        "{name}: {} records, {} without abstract, {} non-English, {} rejected",
        records.len(),
        skipped.0,
        skipped.1,
        rejects.len()
    );
    mb.output(output).output(&rej_path).config(&IngestStats {
        records: records.len(),
        skipped_no_abstract: skipped.0,
        skipped_non_english: skipped.1,
        rejected: rejects.len(),
    })?;
    mb.write(output)
}

pub fn ingest_pubmed(ctx: &Ctx) -> anyhow::Result<()> {
    let output = ctx.output()?;
    if ctx.inputs.is_empty() {
        anyhow::bail!("missing --input");
    }
    guard_output(output, &ctx.inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let mut mb = ManifestBuilder::new(ctx, "ingest-pubmed");
    let (mut records, mut rejects) = (Vec::new(), Vec::new());
    let mut skipped = (0, 0);
    for path in &ctx.inputs {
        mb.input(path)?;
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed = parse_pubmed_xml(&bytes).with_context(|| format!("parsing {}", path.display()))?;
        skipped.0 += parsed.skipped_no_abstract;
        skipped.1 += parsed.skipped_non_english;
        records.extend(parsed.records);
        rejects.extend(parsed.rejects.into_iter().map(|r| (path.display().to_string(), r)));
    }
    finish_ingest(ctx, "ingest-pubmed", records, rejects, skipped, mb)
}

pub fn ingest_arxiv(ctx: &Ctx) -> anyhow::Result<()> {
    let output = ctx.output()?;
    if ctx.inputs.is_empty() {
        anyhow::bail!("missing --input");
    }
    guard_output(output, &ctx.inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let mut mb = ManifestBuilder::new(ctx, "ingest-arxiv");
    let (mut records, mut rejects) = (Vec::new(), Vec::new());
    for path in &ctx.inputs {
        mb.input(path)?;
        let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let parsed = parse_arxiv_metadata(std::io::BufReader::new(f));
        records.extend(parsed.records);
        rejects.extend(parsed.rejects.into_iter().map(|r| (path.display().to_string(), r)));
    }
    finish_ingest(ctx, "ingest-arxiv", records, rejects, (0, 0), mb)
}

#[derive(Args, Debug)]
pub struct FetchArgs {
    /// Journal ISSN; repeat for several journals.
    #[arg(long, required = true)]
    issn: Vec<String>,
    /// Publication year; repeat for several years.
    #[arg(long, default_values_t = [2021])]
    year: Vec<i32>,
    /// Serve requests from a recorded JSON file instead of the network.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Directory for raw XML pages and the resume cursor
    /// (default: `<output>.pages`).
    #[arg(long)]
    pages: Option<PathBuf>,
    /// PMIDs per efetch request (at most 200).
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
}

#[derive(Serialize)]
struct FetchManifest<'a> {
    issns: &'a [String],
    years: &'a [i32],
    base_url: &'a str,
    batch: usize,
    replay: Option<String>,
    pages: usize,
    records: usize,
}

/// Fetches each query not already marked done, storing one XML file per page.
fn fetch_all<T: Transport>(
    fetcher: &mut PubmedFetcher<T>,
    queries: &[(String, i32)],
    pages: &Path,
) -> anyhow::Result<()> {
    for (issn, year) in queries {
        let done = pages.join(format!("{issn}_{year}.done"));
        if done.exists() {
            log::info!("{issn}/{year} already fetched");
            continue;
        }
        let n = fetcher.fetch(issn, *year, |i, xml| {
            scidoc_core::binfmt::write_atomic(&pages.join(format!("{issn}_{year}_{i:05}.xml")), xml.as_bytes())
        })?;
        log::info!("{issn}/{year}: {n} pages");
        std::fs::write(&done, b"")?;
    }
    Ok(())
}

pub fn fetch_pubmed(ctx: &Ctx, args: &FetchArgs) -> anyhow::Result<()> {
    let output = ctx.output()?;
    let pages = args.pages.clone().unwrap_or_else(|| output.with_extension("pages"));
    std::fs::create_dir_all(&pages).with_context(|| format!("creating {}", pages.display()))?;
    let mut cfg = FetchConfig::from_env()?;
    set(&mut cfg.batch_size, args.batch);
    cfg.cursor_path = Some(pages.join("cursor.json"));
    let base_url = cfg.base_url.clone();
    let batch = cfg.batch_size;

    let queries: Vec<(String, i32)> =
        args.issn.iter().flat_map(|i| args.year.iter().map(move |y| (i.clone(), *y))).collect();
    let mut mb = ManifestBuilder::new(ctx, "fetch-pubmed");
    match &args.replay {
        Some(path) => {
            mb.input(path)?;
            cfg.min_delay = Duration::ZERO;
            let mut f = PubmedFetcher::new(cfg, ReplayTransport::load(path)?)?;
            fetch_all(&mut f, &queries, &pages)?;
        }
        None => {
            let mut f = PubmedFetcher::new(cfg, HttpTransport::new(Duration::from_secs(args.timeout_secs)))?;
            fetch_all(&mut f, &queries, &pages)?;
        }
    }

    let mut files: Vec<PathBuf> = Vec::new();
    for (issn, year) in &queries {
        let prefix = format!("{issn}_{year}_");
        let mut mine: Vec<PathBuf> = std::fs::read_dir(&pages)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|e| e == "xml")
                    && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with(&prefix))
            })
            .collect();
        mine.sort();
        files.extend(mine);
    }

    let mut records: Vec<AbstractRecord> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut rejects = Vec::new();
    for f in &files {
        let parsed = parse_pubmed_xml(&std::fs::read(f)?).with_context(|| format!("parsing {}", f.display()))?;
        for r in parsed.records {
            // The same article can match several queries.
            if seen.insert(r.id.clone()) {
                records.push(r);
            }
        }
        rejects.extend(parsed.rejects.into_iter().map(|r| (f.display().to_string(), r)));
    }
    save_corpus(output, &records)?;
    let rej_path = write_rejects(output, &rejects)?;
    eprintln!("fetch-pubmed: {} pages, {} records", files.len(), records.len());
    mb.output(output).output(&rej_path).config(&FetchManifest {
        issns: &args.issn,
        years: &args.year,
        base_url: &base_url,
        batch,
        replay: args.replay.as_ref().map(|p| p.display().to_string()),
        pages: files.len(),
        records: records.len(),
    })?;
    mb.write(output)
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    /// Minimum records per journal.
    #[arg(long)]
    min: Option<usize>,
    /// Records kept per journal (most recent first).
    #[arg(long)]
    max: Option<usize>,
    /// A kept record must be dated in this year.
    #[arg(long)]
    year: Option<i32>,
    /// Where to write the journal label map (default: `<output>.journals.json`).
    #[arg(long)]
    label_map: Option<PathBuf>,
}

pub fn filter(ctx: &Ctx, args: &FilterArgs) -> anyhow::Result<()> {
    let (input, output) = (ctx.input()?, ctx.output()?);
    guard_output(output, &[input])?;
    let mut cfg = ctx.config.filter;
    set(&mut cfg.min_per_journal, args.min);
    set(&mut cfg.max_per_journal, args.max);
    set(&mut cfg.required_recent_year, args.year);
    let records = load_corpus(input)?;
    let (kept, labels) = filter_journals(&records, &cfg)?;
    let map_path = args.label_map.clone().unwrap_or_else(|| output.with_extension("journals.json"));
    save_corpus(output, &kept)?;
    scidoc_core::binfmt::write_atomic(&map_path, (serde_json::to_string_pretty(&labels)? + "\n").as_bytes())?;
    eprintln!("filter: kept {} of {} records, {} journals", kept.len(), records.len(), labels.len());
    let mut mb = ManifestBuilder::new(ctx, "filter");
    mb.input(input)?.output(output).output(&map_path).config(&cfg)?;
    mb.write(output)
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    fields: Option<usize>,
    #[arg(long)]
    journals_per_field: Option<usize>,
    #[arg(long)]
    docs_per_journal: Option<usize>,
    #[arg(long)]
    vocab: Option<usize>,
}

pub fn synth(ctx: &Ctx, args: &SynthArgs) -> anyhow::Result<()> {
    let output = ctx.output()?;
    let mut cfg = ctx.config.synth;
    set(&mut cfg.n_fields, args.fields);
    set(&mut cfg.journals_per_field, args.journals_per_field);
    set(&mut cfg.docs_per_journal, args.docs_per_journal);
    set(&mut cfg.vocab_size, args.vocab);
    set(&mut cfg.seed, ctx.seed);
    let records = generate_synthetic_corpus(&cfg)?;
    save_corpus(output, &records)?;
    eprintln!("synth: {} records", records.len());
    let mut mb = ManifestBuilder::new(ctx, "synth");
    mb.output(output).seed(cfg.seed).config(&cfg)?;
    mb.write(output)
}
