use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

mod config;
mod corpus_cmds;
mod eval_cmds;
mod labels;
mod manifest;
mod model_cmds;
mod report;
mod results;

use config::FileConfig;

/// Scientific-document embedding toolkit: corpus building, a toy
/// journal-classification encoder, and probe / clustering / retrieval
/// evaluation of any embedding store.
#[derive(Parser, Debug)]
#[command(name = "scidoc", version, propagate_version = true)]
struct Cli {
    /// Input file(s). Some subcommands take several.
    #[arg(long, global = true)]
    input: Vec<PathBuf>,
    /// Output file (or directory, for `report`).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for every random choice the subcommand makes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Sequential, bit-reproducible execution.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse PubMed efetch XML files into a corpus.
    IngestPubmed,
    /// Parse arXiv metadata JSON lines into a corpus.
    IngestArxiv,
    /// Download ISSN/year queries from PubMed e-utils into a corpus.
    FetchPubmed(corpus_cmds::FetchArgs),
    /// Apply the journal size and recency rules.
    Filter(corpus_cmds::FilterArgs),
    /// Generate a synthetic corpus.
    Synth(corpus_cmds::SynthArgs),
    /// Train the toy encoder on journal labels.
    TrainToy(model_cmds::TrainArgs),
    /// Write toy-encoder representations to an embedding store.
    Extract(model_cmds::ExtractArgs),
    /// Write `title [SEP] abstract` inputs for external encoders.
    ExportInput,
    /// Linear probe with cross-validation.
    Probe(eval_cmds::ProbeArgs),
    /// k-means purity sweep.
    Cluster(eval_cmds::ClusterArgs),
    /// Pairwise retrieval AP/AUC per taxonomy field.
    Retrieve(eval_cmds::RetrieveArgs),
    /// Nearest neighbours of one id.
    Knn(eval_cmds::KnnArgs),
    /// Unpaired t-test between two probe results.
    Compare(eval_cmds::CompareArgs),
    /// Assemble result files into Markdown and CSV tables.
    Report,
}

/// Global options shared by every subcommand.
pub struct Ctx {
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub config: FileConfig,
    pub config_path: Option<PathBuf>,
    pub deterministic: bool,
}

impl Ctx {
    pub fn input(&self) -> anyhow::Result<&PathBuf> {
        match self.inputs.as_slice() {
            [one] => Ok(one),
            [] => anyhow::bail!("missing --input"),
            _ => anyhow::bail!("expected one --input, got {}", self.inputs.len()),
        }
    }

    pub fn output(&self) -> anyhow::Result<&PathBuf> {
        self.output.as_ref().ok_or_else(|| anyhow::anyhow!("missing --output"))
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if !cli.deterministic {
        log::info!("no parallel mode is implemented; running sequentially");
    }
    let ctx = Ctx {
        inputs: cli.input,
        output: cli.output,
        seed: cli.seed,
        config,
        config_path: cli.config,
        deterministic: cli.deterministic,
    };
    match cli.command {
        Command::IngestPubmed => corpus_cmds::ingest_pubmed(&ctx),
        Command::IngestArxiv => corpus_cmds::ingest_arxiv(&ctx),
        Command::FetchPubmed(a) => corpus_cmds::fetch_pubmed(&ctx, &a),
        Command::Filter(a) => corpus_cmds::filter(&ctx, &a),
        Command::Synth(a) => corpus_cmds::synth(&ctx, &a),
        Command::TrainToy(a) => model_cmds::train_toy(&ctx, &a),
        Command::Extract(a) => model_cmds::extract(&ctx, &a),
        Command::ExportInput => model_cmds::export_input(&ctx),
        Command::Probe(a) => eval_cmds::probe(&ctx, &a),
        Command::Cluster(a) => eval_cmds::cluster(&ctx, &a),
        Command::Retrieve(a) => eval_cmds::retrieve(&ctx, &a),
        Command::Knn(a) => eval_cmds::knn(&ctx, &a),
        Command::Compare(a) => eval_cmds::compare(&ctx, &a),
        Command::Report => report::report(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            for cause in e.chain().skip(1) {
                eprintln!("  caused by: {cause}");
            }
            ExitCode::FAILURE
        }
    }
}
