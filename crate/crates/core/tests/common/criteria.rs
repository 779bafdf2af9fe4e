//! One check per acceptance criterion. Each returns a short summary on
//! success and a description of the first violation otherwise.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use rand::Rng;
use scidoc_core::cluster::{kmeans, purity_sweep, KMeansConfig, KMeansInit, KMeansResult};
use scidoc_core::corpus::{
    filter_journals, generate_synthetic_corpus, write_jsonl, AbstractRecord, FilterConfig, JournalLabelMap, Source,
    SubcategoryTaxonomy, SynthConfig,
};
use scidoc_core::embedstore::{encode_store, read_store, write_store};
use scidoc_core::encoder::{extract, initial_params, loss_and_gradients, train, TrainConfig};
use scidoc_core::metrics::{self, unpaired_t_test, ScoreSample, TTestVariant};
use scidoc_core::probe::train_probe;
use scidoc_core::retrieval::{evaluate_all_fields, mean_average_precision, DEFAULT_MAX_PAIRS};
use scidoc_core::{EmbeddingMatrix, ProbeConfig};
use sha2::{Digest, Sha256};

use super::*;

pub type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("{what} took {took:?}, limit {limit:?}"))
}

fn close(a: f64, b: f64, what: &str, case: usize) -> Result<(), String> {
    ensure((a - b).abs() <= 1e-12, || format!("{what} case {case}: {a} vs oracle {b}"))
}

fn labels(r: &mut impl Rng, n: usize, classes: usize) -> Vec<usize> {
    (0..n).map(|_| r.random_range(0..classes)).collect()
}

/// Scores drawn from a small grid so that ties occur.
fn tied_scores(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(0..6) as f64 * 0.25).collect()
}

pub const ORACLE_CASES: usize = 1000;

pub fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut r = rng(20_240_101);
    for case in 0..ORACLE_CASES {
        let n = r.random_range(1..=20);
        let k = r.random_range(1..=5);
        let (p, t) = (labels(&mut r, n, k), labels(&mut r, n, k));
        close(metrics::accuracy(&p, &t).unwrap(), accuracy(&p, &t), "accuracy", case)?;
        close(metrics::macro_f1(&p, &t, k).unwrap(), macro_f1(&p, &t, k), "macro_f1", case)?;
        let n_clusters = r.random_range(1..=6);
        let clusters = labels(&mut r, n, n_clusters);
        close(metrics::purity(&clusters, &t).unwrap(), purity(&clusters, &t), "purity", case)?;

        let mut ranked: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
        ranked[r.random_range(0..n)] = true;
        let ap = metrics::average_precision(&ranked).unwrap();
        ensure(ap == average_precision(&ranked), || format!("AP case {case}: {ranked:?}"))?;

        let m = r.random_range(2..=20);
        let scores = tied_scores(&mut r, m);
        let mut lab: Vec<bool> = (0..m).map(|_| r.random_bool(0.5)).collect();
        lab[0] = true;
        lab[1] = false;
        let got = metrics::auc(&scores, &lab).unwrap();
        ensure(got == auc(&scores, &lab), || format!("AUC case {case}: {got} vs {}", auc(&scores, &lab)))?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
        let ranked_by_score: Vec<bool> = order.iter().map(|&i| lab[i]).collect();
        ensure(
            metrics::average_precision_scored(&scores, &lab).unwrap() == average_precision(&ranked_by_score),
            || format!("scored AP case {case}"),
        )?;

        let u: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
        close(metrics::pearson(&u, &v).unwrap(), pearson(&u, &v), "pearson", case)?;

        let na = r.random_range(2..=10);
        let nb = r.random_range(2..=10);
        let shift = r.random_range(0.0..2.0);
        let a: Vec<f64> = (0..na).map(|_| r.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..nb).map(|_| r.random_range(0.0..1.0) + shift).collect();
        let got = unpaired_t_test(
            &ScoreSample::new(a.clone()).unwrap(),
            &ScoreSample::new(b.clone()).unwrap(),
            TTestVariant::Pooled,
        )
        .unwrap();
        let (t, df, pv) = pooled_t_test(&a, &b);
        close(got.t, t, "t statistic", case)?;
        ensure(got.df == df as f64, || format!("t-test df case {case}"))?;
        close(got.p, pv, "t-test p", case)?;
    }
    within_time(start, Duration::from_secs(10), "metric oracles")?;
    Ok(format!("{ORACLE_CASES} cases per metric, 7 metrics, {:.2?}", start.elapsed()))
}

pub const GRADIENT_CASES: usize = 100;

pub fn gradient_check_all() -> Outcome {
    let start = Instant::now();
    let mut r = rng(99);
    let mut worst: f64 = 0.0;
    for case in 0..GRADIENT_CASES {
        let p = random_params(&mut r, 50, 8, 5);
        let xs: Vec<_> = (0..4)
            .map(|_| {
                let nnz = r.random_range(3..=12);
                random_sparse(&mut r, 50, nnz)
            })
            .collect();
        let batch: Vec<_> = xs.iter().map(|x| (x, r.random_range(0..5))).collect();
        let (_, g) = loss_and_gradients(&p, &batch).unwrap();
        let err = gradient_check(&p, &batch, &g, 1e-6);
        ensure(err < 1e-5, || format!("case {case}: relative error {err:e}"))?;
        worst = worst.max(err);
    }
    within_time(start, Duration::from_secs(30), "gradient check")?;
    Ok(format!("{GRADIENT_CASES} instances, worst relative error {worst:.2e}"))
}

/// Index of each record's taxonomy field.
pub fn field_truth(corpus: &[AbstractRecord]) -> Vec<usize> {
    let taxonomy = SubcategoryTaxonomy::shipped();
    corpus
        .iter()
        .map(|r| {
            let f = taxonomy.field_of(r).expect("record inside the taxonomy");
            taxonomy.fields.iter().position(|g| g.field == f.field).unwrap()
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct SupervisionScores {
    pub probe: [Vec<f64>; 2],
    pub purity: [Vec<f64>; 2],
    pub map: [Vec<f64>; 2],
    /// Per seed, per field AP (trained, random) for fields that could be scored.
    pub field_ap: Vec<Vec<(f64, f64)>>,
}

pub const SUPERVISION_SEEDS: u64 = 5;

/// Trained (index 0) versus untrained (index 1) encoders on the default
/// synthetic corpus, one entry per seed.
pub fn supervision_scores() -> SupervisionScores {
    let corpus = generate_synthetic_corpus(&SynthConfig::default()).unwrap();
    let journals = JournalLabelMap::from_journals(&corpus);
    let truth = field_truth(&corpus);
    let taxonomy = SubcategoryTaxonomy::shipped();
    let mut s = SupervisionScores::default();
    for seed in 0..SUPERVISION_SEEDS {
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        let trained = extract(&train(&corpus, &journals, &cfg).unwrap().params, &corpus).unwrap();
        let untrained = extract(&initial_params(&cfg, journals.len()), &corpus).unwrap();
        let mut aps = [Vec::new(), Vec::new()];
        for (i, m) in [&trained, &untrained].into_iter().enumerate() {
            let probe = train_probe(m, &truth, &ProbeConfig { seed, ..ProbeConfig::default() }).unwrap();
            s.probe[i].push(probe.mean_acc);
            s.purity[i].push(purity_sweep(m, &truth, &[10], seed, 1).unwrap()[0].purity);
            let rows = evaluate_all_fields(&corpus, m, &taxonomy, DEFAULT_MAX_PAIRS, seed).unwrap();
            s.map[i].push(mean_average_precision(&rows).unwrap());
            aps[i] = rows.iter().map(|row| row.average_precision).collect::<Vec<_>>();
        }
        s.field_ap.push(aps[0].iter().zip(&aps[1]).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect());
    }
    s
}

pub fn supervision_signal() -> Outcome {
    let start = Instant::now();
    let s = supervision_scores();
    let mut parts = Vec::new();
    for (name, [trained, untrained]) in [("probe acc", &s.probe), ("purity@10", &s.purity), ("mean AP", &s.map)] {
        let tt = unpaired_t_test(
            &ScoreSample::new(trained.clone()).unwrap(),
            &ScoreSample::new(untrained.clone()).unwrap(),
            TTestVariant::Pooled,
        )
        .map_err(|e| format!("{name}: {e}"))?;
        let (mt, mu) = (metrics::mean(trained), metrics::mean(untrained));
        ensure(mt > mu && tt.p < 0.01, || format!("{name}: trained {mt:.4} vs untrained {mu:.4}, p = {:.3e}", tt.p))?;
        parts.push(format!("{name} {mt:.3} vs {mu:.3} (p={:.1e})", tt.p));
    }
    within_time(start, Duration::from_secs(300), "supervision experiment")?;
    Ok(format!("{}; {:.1?}", parts.join(", "), start.elapsed()))
}

pub fn protocol_fidelity() -> Outcome {
    let cfg = ProbeConfig::default();
    let snapshot = serde_json::to_string(&cfg).unwrap();
    let expected = r#"{"lr":0.0005,"batch":100,"epochs":5,"folds":4,"regularization":0.0,"runs":3,"seed":0}"#;
    ensure(snapshot == expected, || format!("config snapshot {snapshot}"))?;

    // Early stopping is per epoch and the reported score is the best epoch.
    let (m, truth) = blobs(3, &[vec![0.0, 0.0], vec![1.5, 0.0], vec![0.0, 1.5]], 40, 1.0);
    let res = train_probe(&m, &truth, &cfg).unwrap();
    ensure(res.per_fold.len() == cfg.runs * cfg.folds, || "fold count".into())?;
    for f in &res.per_fold {
        ensure(f.val_accuracy_by_epoch.len() == cfg.epochs, || "one validation score per epoch".into())?;
        let best = f.val_accuracy_by_epoch.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ensure(f.accuracy == best, || format!("fold reports {} but best epoch is {best}", f.accuracy))?;
        ensure(f.accuracy >= *f.val_accuracy_by_epoch.last().unwrap(), || "early stopping dominance".into())?;
    }
    Ok(format!("snapshot {snapshot}"))
}

fn date(y: i32, m: u32, d: u32) -> chrono::NaiveDate {
    chrono::NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// `n` records of `journal`; record `i` is dated `years[i % years.len()]`.
pub fn journal_records(journal: &str, n: usize, years: &[i32]) -> Vec<AbstractRecord> {
    (0..n)
        .map(|i| AbstractRecord {
            id: format!("{journal}-{i:04}"),
            title: format!("title {i}"),
            abstract_text: format!("abstract {i}"),
            journal: journal.to_string(),
            source: Source::Pubmed,
            date: date(years[i % years.len()], 1 + (i % 12) as u32, 1 + (i % 28) as u32),
            field_labels: Default::default(),
            subcategories: Default::default(),
        })
        .collect()
}

fn counts(records: &[AbstractRecord]) -> std::collections::BTreeMap<String, usize> {
    let mut m = std::collections::BTreeMap::new();
    for r in records {
        *m.entry(r.journal.clone()).or_insert(0) += 1;
    }
    m
}

pub fn filter_conformance() -> Outcome {
    let cfg = FilterConfig::default();
    ensure((cfg.min_per_journal, cfg.max_per_journal, cfg.required_recent_year) == (100, 300, 2021), || {
        "defaults".into()
    })?;
    let mut all = Vec::new();
    all.extend(journal_records("A", 50, &[2021, 2019]));
    all.extend(journal_records("B", 150, &[2018, 2021]));
    all.extend(journal_records("C", 400, &[2016, 2017, 2018, 2019, 2020, 2021]));
    all.extend(journal_records("D", 150, &[2019, 2020]));
    all.extend(journal_records("E", 100, &[2021]));
    all.extend(journal_records("F", 99, &[2021]));
    all.extend(journal_records("G", 301, &[2020, 2021]));
    let (kept, map) = filter_journals(&all, &cfg).map_err(|e| e.to_string())?;
    let got = counts(&kept);
    let want: std::collections::BTreeMap<String, usize> =
        [("B", 150), ("C", 300), ("E", 100), ("G", 300)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    ensure(got == want, || format!("kept counts {got:?}"))?;
    ensure(map.names() == ["B", "C", "E", "G"], || format!("label map {:?}", map.names()))?;

    // C keeps its 300 most recent records, ties by ascending id.
    let mut c: Vec<&AbstractRecord> = all.iter().filter(|r| r.journal == "C").collect();
    c.sort_by(|a, b| b.date.cmp(&a.date).then_with(|| a.id.cmp(&b.id)));
    let want_c: std::collections::BTreeSet<&str> = c[..300].iter().map(|r| r.id.as_str()).collect();
    let got_c: std::collections::BTreeSet<&str> =
        kept.iter().filter(|r| r.journal == "C").map(|r| r.id.as_str()).collect();
    ensure(got_c == want_c, || "cap keeps the most recent records".into())?;

    let (again, map2) = filter_journals(&kept, &cfg).map_err(|e| e.to_string())?;
    ensure(again == kept && map2 == map, || "filter is not idempotent".into())?;

    let none = journal_records("H", 150, &[2019]);
    ensure(matches!(filter_journals(&none, &cfg), Err(scidoc_core::Error::NoSurvivors)), || {
        "no survivors must be an error".into()
    })?;
    Ok("min 100 / cap 300 / 2021 presence, idempotent".into())
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hashes of every stage's artifact for one pipeline run.
pub fn pipeline_hashes(seed: u64) -> Vec<(&'static str, String)> {
    let synth = SynthConfig { docs_per_journal: 20, seed, ..SynthConfig::default() };
    let corpus = generate_synthetic_corpus(&synth).unwrap();
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &corpus).unwrap();
    let mut out = vec![("corpus", sha(&buf))];

    let filter_cfg = FilterConfig { min_per_journal: 10, max_per_journal: 15, ..FilterConfig::default() };
    let (filtered, labels) = filter_journals(&corpus, &filter_cfg).unwrap();
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &filtered).unwrap();
    buf.extend(serde_json::to_vec(&labels).unwrap());
    out.push(("filter", sha(&buf)));

    let cfg = TrainConfig { seed, epochs: 2, feature_dim: 1024, hidden_dim: 32, ..TrainConfig::default() };
    let trained = train(&filtered, &labels, &cfg).unwrap();
    out.push(("train", sha(&trained.params.encode().unwrap())));

    let emb = extract(&trained.params, &filtered).unwrap();
    out.push(("extract", sha(&encode_store(&emb).unwrap())));

    let truth = field_truth(&filtered);
    let probe = train_probe(&emb, &truth, &ProbeConfig { seed, runs: 2, ..ProbeConfig::default() }).unwrap();
    out.push(("probe", sha(&serde_json::to_vec(&probe).unwrap())));

    let sweep = purity_sweep(&emb, &truth, &[5, 10], seed, 2).unwrap();
    out.push(("cluster", sha(&serde_json::to_vec(&sweep).unwrap())));

    let rows = evaluate_all_fields(&filtered, &emb, &SubcategoryTaxonomy::shipped(), 5_000, seed).unwrap();
    out.push(("retrieve", sha(&serde_json::to_vec(&rows).unwrap())));
    out
}

pub fn determinism() -> Outcome {
    let start = Instant::now();
    let a = pipeline_hashes(11);
    let b = pipeline_hashes(11);
    for ((stage, ha), (_, hb)) in a.iter().zip(&b) {
        ensure(ha == hb, || format!("stage {stage}: {ha} vs {hb}"))?;
    }
    let c = pipeline_hashes(12);
    ensure(a[0].1 != c[0].1, || "different seeds gave the same corpus".into())?;
    within_time(start, Duration::from_secs(60), "determinism")?;
    Ok(format!("{} stages byte-identical, {:.1?}", a.len(), start.elapsed()))
}

/// Finite doubles from random bit patterns, so subnormals, signed zeros and
/// extreme exponents all occur.
pub fn random_finite(r: &mut impl Rng) -> f64 {
    loop {
        let v = match r.random_range(0..4) {
            0 => f64::from_bits(r.random::<u64>() & 0x800F_FFFF_FFFF_FFFF),
            1 => r.random_range(-1.0..1.0),
            _ => f64::from_bits(r.random()),
        };
        if v.is_finite() {
            return v;
        }
    }
}

pub fn random_matrix(r: &mut impl Rng, rows: usize, dim: usize) -> EmbeddingMatrix {
    let ids = (0..rows)
        .map(|i| {
            let tag: String = (0..r.random_range(0..6)).map(|_| r.random_range('a'..='ω')).collect();
            format!("{i}{tag}")
        })
        .collect();
    let values = (0..rows * dim).map(|_| random_finite(r)).collect();
    EmbeddingMatrix::new(ids, dim, values).unwrap()
}

pub const FORMAT_CASES: usize = 200;

pub fn format_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(5);
    for case in 0..FORMAT_CASES {
        let (rows, dim) = match case {
            0 => (0, 1),
            1 => (0, 7),
            2 => (1, 1),
            3 => (25, 1),
            _ => (r.random_range(0..=20), r.random_range(1..=16)),
        };
        let m = random_matrix(&mut r, rows, dim);
        let path = dir.path().join(format!("m{case}.mev"));
        write_store(&m, &path).map_err(|e| e.to_string())?;
        let back = read_store(&path).map_err(|e| e.to_string())?;
        let bits = |x: &EmbeddingMatrix| x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        ensure(back.ids() == m.ids() && back.dim() == m.dim() && bits(&back) == bits(&m), || {
            format!("case {case} ({rows}x{dim}) differs after round trip")
        })?;
    }
    Ok(format!("{FORMAT_CASES} matrices bit-exact, including 0 rows and dim 1"))
}

pub fn inertia_non_increasing(res: &KMeansResult) -> bool {
    res.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs())
}

pub fn kmeans_sanity() -> Outcome {
    let mut runs = 0;
    for seed in 0..10 {
        let (m, truth) = blobs(seed, &[vec![0.0, 0.0, 0.0], vec![20.0, 0.0, 0.0]], 50, 1.0);
        for init in [KMeansInit::KMeansPP, KMeansInit::Random] {
            let res =
                kmeans(&m, &KMeansConfig { k: 2, seed, init, ..KMeansConfig::default() }).map_err(|e| e.to_string())?;
            runs += 1;
            ensure(inertia_non_increasing(&res), || format!("seed {seed}: trace {:?}", res.inertia_trace))?;
            let p = metrics::purity(&res.assignments, &truth).unwrap();
            ensure(p == 1.0, || format!("seed {seed} {init:?}: purity {p}"))?;
        }
    }
    let mut r = rng(8);
    for seed in 0..20 {
        let m = random_matrix_gaussian(&mut r, 60, 4);
        for k in [1, 3, 7, 20] {
            let res = kmeans(&m, &KMeansConfig { k, seed, ..KMeansConfig::default() }).map_err(|e| e.to_string())?;
            runs += 1;
            ensure(inertia_non_increasing(&res), || format!("random data k={k}: trace {:?}", res.inertia_trace))?;
        }
    }
    Ok(format!("20σ blobs purity 1.0 at k=2; inertia non-increasing on {runs} runs"))
}

pub fn random_matrix_gaussian(r: &mut impl Rng, rows: usize, dim: usize) -> EmbeddingMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let values: Vec<f64> = (0..rows * dim).map(|_| StandardNormal.sample(r)).collect();
    EmbeddingMatrix::new((0..rows).map(|i| format!("r{i:04}")).collect(), dim, values).unwrap()
}
