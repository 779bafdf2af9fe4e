use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use scidoc_core::corpus::load_corpus;
use scidoc_core::embedstore::write_store;
use scidoc_core::encoder::{self, ToyEncoderParams};
use scidoc_core::{assemble_input, JournalLabelMap};
use serde::Serialize;

use crate::config::set;
use crate::manifest::{guard_output, ManifestBuilder};
use crate::Ctx;

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Journal label map from `filter`; default: every journal in the corpus.
    #[arg(long)]
    label_map: Option<PathBuf>,
}

#[derive(Serialize)]
struct TrainLog<'a> {
    classes: usize,
    records: usize,
    initial_loss: f64,
    epoch_losses: &'a [f64],
}

pub fn train_toy(ctx: &Ctx, args: &TrainArgs) -> anyhow::Result<()> {
    let (input, output) = (ctx.input()?, ctx.output()?);
    guard_output(output, &[input])?;
    let mut cfg = ctx.config.train;
    set(&mut cfg.hidden_dim, args.hidden);
    set(&mut cfg.feature_dim, args.features);
    set(&mut cfg.lr, args.lr);
    set(&mut cfg.batch, args.batch);
    set(&mut cfg.epochs, args.epochs);
    set(&mut cfg.seed, ctx.seed);

    let mut mb = ManifestBuilder::new(ctx, "train-toy");
    mb.input(input)?;
    let records = load_corpus(input)?;
    let labels = match &args.label_map {
        Some(p) => {
            mb.input(p)?;
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<JournalLabelMap>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => JournalLabelMap::from_journals(&records),
    };
    let out = encoder::train(&records, &labels, &cfg)?;
    out.params.save(output)?;

    let log_path = output.with_extension("train.json");
    let log = TrainLog {
        classes: labels.len(),
        records: records.len(),
        initial_loss: out.initial_loss,
        epoch_losses: &out.epoch_losses,
    };
    scidoc_core::binfmt::write_atomic(&log_path, (serde_json::to_string_pretty(&log)? + "\n").as_bytes())?;
    eprintln!(
        "train-toy: {} classes, loss {:.4} -> {:.4}",
        labels.len(),
        out.initial_loss,
        out.epoch_losses.last().copied().unwrap_or(out.initial_loss)
    );
    mb.output(output).output(&log_path).seed(cfg.seed).config(&cfg)?;
    mb.write(output)
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Checkpoint written by `train-toy`.
    #[arg(long)]
    model: PathBuf,
}

pub fn extract(ctx: &Ctx, args: &ExtractArgs) -> anyhow::Result<()> {
    let (input, output) = (ctx.input()?, ctx.output()?);
    guard_output(output, &[input, &args.model])?;
    let params = ToyEncoderParams::load(&args.model)?;
    let records = load_corpus(input)?;
    let m = encoder::extract(&params, &records)?;
    write_store(&m, output)?;
    eprintln!("extract: {} x {}", m.rows(), m.dim());
    let mut mb = ManifestBuilder::new(ctx, "extract");
    mb.input(input)?.input(&args.model)?.output(output).config(&serde_json::json!({
        "feature_dim": params.feature_dim,
        "hidden_dim": params.hidden_dim,
        "n_classes": params.n_classes,
    }))?;
    mb.write(output)
}

/// One JSON line per record: `{"id": ..., "text": "title [SEP] abstract"}`.
pub fn export_input(ctx: &Ctx) -> anyhow::Result<()> {
    let (input, output) = (ctx.input()?, ctx.output()?);
    guard_output(output, &[input])?;
    let records = load_corpus(input)?;
    let mut text = String::new();
    let mut flagged = 0;
    for r in &records {
        let enc = assemble_input(r);
        flagged += usize::from(enc.embedded_separator);
        text.push_str(&serde_json::json!({ "id": r.id, "text": enc.text }).to_string());
        text.push('\n');
    }
    scidoc_core::binfmt::write_atomic(output, text.as_bytes())?;
    if flagged > 0 {
        eprintln!("export-input: {flagged} records contain a literal [SEP]");
    }
    let mut mb = ManifestBuilder::new(ctx, "export-input");
    mb.input(input)?
        .output(output)
        .config(&serde_json::json!({ "records": records.len(), "embedded_separator": flagged }))?;
    mb.write(output)
}
