use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use scidoc_core::cluster::{kmeans_restarts, KMeansConfig, KMeansInit, PurityRow};
use scidoc_core::corpus::load_corpus;
use scidoc_core::embedstore::{knn_query, read_store};
use scidoc_core::metrics::{mean, purity, unpaired_t_test, ScoreSample, TTestVariant};
use scidoc_core::probe::{train_probe, train_probe_with_splits, Split};
use scidoc_core::retrieval::{evaluate_all_fields, mean_average_precision};
use scidoc_core::SimilarityMetric;
use serde::Deserialize;

use crate::config::set;
use crate::labels::{load_taxonomy, resolve, LabelArgs};
use crate::manifest::{guard_output, ManifestBuilder};
use crate::report::{table1, table2, table3};
use crate::results::{csv_line, md_table, method_name, write_result, ResultFile};
use crate::Ctx;

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[command(flatten)]
    labels: LabelArgs,
    /// Row name in reports (default: store file stem).
    #[arg(long)]
    method: Option<String>,
    /// Column group in reports (default: label source).
    #[arg(long)]
    dataset: Option<String>,
    /// Fixed splits instead of cross-validation: a JSON array of
    /// `{"train": [ids], "validation": [ids]}`.
    #[arg(long)]
    splits: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    regularization: Option<f64>,
}

#[derive(Deserialize)]
struct IdSplit {
    train: Vec<String>,
    validation: Vec<String>,
}

fn read_splits(path: &PathBuf, ids: &[String]) -> anyhow::Result<Vec<Split>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: Vec<IdSplit> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let map = |v: &[String]| -> anyhow::Result<Vec<usize>> {
        v.iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| anyhow::anyhow!("split id {id:?} has no labelled row"))
            })
            .collect()
    };
    raw.iter().map(|s| Ok(Split { train: map(&s.train)?, validation: map(&s.validation)? })).collect()
}

pub fn probe(ctx: &Ctx, args: &ProbeArgs) -> anyhow::Result<()> {
    let (input, output) = (ctx.input()?, ctx.output()?);
    guard_output(output, &[input])?;
    let mut cfg = ctx.config.probe;
    set(&mut cfg.runs, args.runs);
    set(&mut cfg.folds, args.folds);
    set(&mut cfg.lr, args.lr);
    set(&mut cfg.batch, args.batch);
    set(&mut cfg.epochs, args.epochs);
    set(&mut cfg.regularization, args.regularization);
    set(&mut cfg.seed, ctx.seed);

    let mut mb = ManifestBuilder::new(ctx, "probe");
    mb.input(input)?;
    let m = read_store(input)?;
    let lab = resolve(&m, &args.labels, &mut mb)?;
    let result = match &args.splits {
        Some(p) => {
            mb.input(p)?;
            let splits = read_splits(p, lab.matrix.ids())?;
            train_probe_with_splits(&lab.matrix, &lab.labels, &splits, &cfg)?
        }
        None => train_probe(&lab.matrix, &lab.labels, &cfg)?,
    };
    eprintln!(
        "probe: acc {:.4} ± {:.4}, macro-F1 {:.4} ± {:.4} over {} folds",
        result.mean_acc,
        result.std_acc,
        result.mean_f1,
        result.std_f1,
        result.per_fold.len()
    );
    let r = ResultFile::Probe {
        method: method_name(args.method.as_deref(), input),
        dataset: args.dataset.clone().unwrap_or(lab.source),
        classes: lab.classes,
        result,
    };
    let (csv, md) = table1(&[&r]);
    for p in write_result(output, &r, &csv, &md)? {
        mb.output(&p);
    }
    mb.seed(cfg.seed).config(&cfg)?;
    mb.write(output)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Kmeanspp,
    Random,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[command(flatten)]
    labels: LabelArgs,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    dataset: Option<String>,
    /// Cluster counts, comma separated (default 10,20,50,100).
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Independent k-means runs per k; the lowest inertia wins.
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
}

pub fn cluster(ctx: &Ctx, args: &ClusterArgs) -> anyhow::Result<()> {
    let (input, output) = (ctx.input()?, ctx.output()?);
    guard_output(output, &[input])?;
    let mut section = ctx.config.cluster.clone();
    set(&mut section.ks, args.ks.clone());
    set(&mut section.restarts, args.restarts);
    let mut base: KMeansConfig = ctx.config.kmeans;
    set(&mut base.seed, ctx.seed);
    if let Some(i) = args.init {
        base.init = match i {
            InitArg::Kmeanspp => KMeansInit::KMeansPP,
            InitArg::Random => KMeansInit::Random,
        };
    }
    if section.ks.is_empty() {
        bail!("no cluster counts given");
    }

    let mut mb = ManifestBuilder::new(ctx, "cluster");
    mb.input(input)?;
    let m = read_store(input)?;
    let lab = resolve(&m, &args.labels, &mut mb)?;
    let mut rows = Vec::with_capacity(section.ks.len());
    for &k in &section.ks {
        let res = kmeans_restarts(&lab.matrix, &KMeansConfig { k, ..base }, section.restarts)?;
        let p = purity(&res.assignments, &lab.labels)?;
        eprintln!("cluster: k {k}: purity {p:.4}, inertia {:.6}", res.inertia);
        rows.push(PurityRow { k, purity: p, inertia: res.inertia });
    }
    let r = ResultFile::Cluster {
        method: method_name(args.method.as_deref(), input),
        dataset: args.dataset.clone().unwrap_or(lab.source),
        restarts: section.restarts,
        rows,
    };
    let (csv, md) = table2(&[&r]);
    for p in write_result(output, &r, &csv, &md)? {
        mb.output(&p);
    }
    mb.seed(base.seed).config(&serde_json::json!({ "kmeans": base, "cluster": section }))?;
    mb.write(output)
}

#[derive(Args, Debug)]
pub struct RetrieveArgs {
    /// Corpus supplying arXiv field labels and subcategories.
    #[arg(long)]
    corpus: PathBuf,
    /// Taxonomy JSON (default: the bundled one).
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    /// Pair cap per field; larger fields are sampled with `--seed`.
    #[arg(long)]
    max_pairs: Option<usize>,
}

pub fn retrieve(ctx: &Ctx, args: &RetrieveArgs) -> anyhow::Result<()> {
    let (input, output) = (ctx.input()?, ctx.output()?);
    guard_output(output, &[input, &args.corpus])?;
    let mut section = ctx.config.retrieve.clone();
    set(&mut section.max_pairs, args.max_pairs);
    let seed = ctx.seed.unwrap_or(0);

    let mut mb = ManifestBuilder::new(ctx, "retrieve");
    mb.input(input)?.input(&args.corpus)?;
    let taxonomy = load_taxonomy(args.taxonomy.as_deref(), &mut mb)?;
    let m = read_store(input)?;
    let records = load_corpus(&args.corpus)?;
    let fields = evaluate_all_fields(&records, &m, &taxonomy, section.max_pairs, seed)?;
    for f in &fields {
        match (f.average_precision, &f.absent_reason) {
            (Some(ap), _) => eprintln!("retrieve: {}: AP {ap:.4} over {} pairs", f.field, f.pairs),
            (None, reason) => eprintln!("retrieve: {}: absent ({})", f.field, reason.as_deref().unwrap_or("")),
        }
    }
    let r = ResultFile::Retrieve {
        method: method_name(args.method.as_deref(), input),
        mean_ap: mean_average_precision(&fields),
        fields,
    };
    let t = table3(&[&r]);
    let csv = t.ap_csv.clone();
    let md = t.markdown();
    let mut paths = write_result(output, &r, &csv, &md)?;
    let auc_path = output.with_extension("auc.csv");
    scidoc_core::binfmt::write_atomic(&auc_path, t.auc_csv.as_bytes())?;
    paths.push(auc_path);
    for p in &paths {
        mb.output(p);
    }
    mb.seed(seed).config(&section)?;
    mb.write(output)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Cosine,
    Pearson,
}

#[derive(Args, Debug)]
pub struct KnnArgs {
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::Cosine)]
    metric: MetricArg,
}

pub fn knn(ctx: &Ctx, args: &KnnArgs) -> anyhow::Result<()> {
    let (input, output) = (ctx.input()?, ctx.output()?);
    guard_output(output, &[input])?;
    let metric = match args.metric {
        MetricArg::Cosine => SimilarityMetric::Cosine,
        MetricArg::Pearson => SimilarityMetric::Pearson,
    };
    let m = read_store(input)?;
    let hits = knn_query(&m, &args.query, args.k, metric)?;
    let json: Vec<_> = hits.iter().map(|(id, s)| serde_json::json!({ "id": id, "score": s })).collect();
    let mut csv = csv_line(&["rank".into(), "id".into(), "score".into()]);
    let mut md_rows = Vec::new();
    for (i, (id, s)) in hits.iter().enumerate() {
        csv.push_str(&csv_line(&[(i + 1).to_string(), id.clone(), s.to_string()]));
        md_rows.push(vec![(i + 1).to_string(), id.clone(), format!("{s:.4}")]);
    }
    let md = md_table(&["Rank".into(), "Id".into(), "Score".into()], &md_rows);
    let write = |p: &std::path::Path, s: &str| scidoc_core::binfmt::write_atomic(p, s.as_bytes());
    write(output, &(serde_json::to_string_pretty(&json)? + "\n"))?;
    write(&output.with_extension("csv"), &csv)?;
    write(&output.with_extension("md"), &md)?;
    let mut mb = ManifestBuilder::new(ctx, "knn");
    mb.input(input)?.output(output).output(&output.with_extension("csv")).output(&output.with_extension("md")).config(
        &serde_json::json!({ "query": args.query, "k": args.k, "metric": format!("{:?}", args.metric).to_lowercase() }),
    )?;
    mb.write(output)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CompareMetric {
    Accuracy,
    F1,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long, value_enum, default_value_t = CompareMetric::Accuracy)]
    metric: CompareMetric,
    /// Use Welch's unequal-variance test instead of the pooled one.
    #[arg(long)]
    welch: bool,
}

/// t-test of the per-fold scores of two probe result files (`--input a --input b`).
pub fn compare(ctx: &Ctx, args: &CompareArgs) -> anyhow::Result<()> {
    let output = ctx.output()?;
    let [a_path, b_path] = ctx.inputs.as_slice() else {
        bail!("compare needs exactly two --input probe result files");
    };
    guard_output(output, &[a_path, b_path])?;
    let scores = |p: &PathBuf| -> anyhow::Result<(String, Vec<f64>)> {
        match ResultFile::load(p)? {
            ResultFile::Probe { method, result, .. } => Ok((
                method,
                match args.metric {
                    CompareMetric::Accuracy => result.accuracies(),
                    CompareMetric::F1 => result.f1s(),
                },
            )),
            other => bail!("{} holds a {} result, not a probe result", p.display(), kind_name(&other)),
        }
    };
    let (ma, va) = scores(a_path)?;
    let (mbn, vb) = scores(b_path)?;
    let variant = if args.welch { TTestVariant::Welch } else { TTestVariant::Pooled };
    let test = unpaired_t_test(&ScoreSample::new(va.clone())?, &ScoreSample::new(vb.clone())?, variant)?;
    let metric = format!("{:?}", args.metric).to_lowercase();
    eprintln!("compare: {ma} vs {mbn} on {metric}: t {:.4}, df {}, p {:.3e}", test.t, test.df, test.p);
    let r = ResultFile::Compare {
        a: ma.clone(),
        b: mbn.clone(),
        metric: metric.clone(),
        mean_a: mean(&va),
        mean_b: mean(&vb),
        test,
    };
    let header: Vec<String> = ["a", "b", "metric", "mean_a", "mean_b", "t", "df", "p"].map(String::from).to_vec();
    let cells = vec![
        ma,
        mbn,
        metric,
        mean(&va).to_string(),
        mean(&vb).to_string(),
        test.t.to_string(),
        test.df.to_string(),
        test.p.to_string(),
    ];
    let csv = csv_line(&header) + &csv_line(&cells);
    let md = md_table(&header, &[cells]);
    let mut mb = ManifestBuilder::new(ctx, "compare");
    mb.input(a_path)?.input(b_path)?;
    for p in write_result(output, &r, &csv, &md)? {
        mb.output(&p);
    }
    mb.config(&serde_json::json!({ "variant": if args.welch { "welch" } else { "pooled" } }))?;
    mb.write(output)
}

pub fn kind_name(r: &ResultFile) -> &'static str {
    match r {
        ResultFile::Probe { .. } => "probe",
        ResultFile::Cluster { .. } => "cluster",
        ResultFile::Retrieve { .. } => "retrieve",
        ResultFile::Compare { .. } => "compare",
    }
}
