use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scidoc_core::embedstore::write_store;
use scidoc_core::EmbeddingMatrix;

fn scidoc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scidoc")).args(args).current_dir(dir).output().expect("spawn scidoc")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = scidoc(dir, args);
    assert!(out.status.success(), "scidoc {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

const SMALL: [&str; 6] = ["--fields", "3", "--journals-per-field", "4", "--docs-per-journal", "30"];

fn pipeline(dir: &Path) {
    let mut synth = vec!["synth", "--seed", "7", "--output", "corpus.jsonl"];
    synth.extend(SMALL);
    ok(dir, &synth);
    ok(dir, &["train-toy", "--input", "corpus.jsonl", "--output", "toy.mtp", "--features", "512", "--hidden", "16"]);
    ok(dir, &["extract", "--model", "toy.mtp", "--input", "corpus.jsonl", "--output", "toy.mev"]);
    ok(dir, &["probe", "--input", "toy.mev", "--corpus", "corpus.jsonl", "--output", "probe.json"]);
}

#[test]
fn synth_train_extract_probe_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    let r = json(&d.join("probe.json"));
    assert_eq!(r["kind"], "probe");
    assert_eq!(r["method"], "toy");
    assert_eq!(r["dataset"], "field");
    let acc = r["result"]["mean_acc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert_eq!(r["result"]["per_fold"].as_array().unwrap().len(), 12);
    assert!(d.join("probe.csv").exists() && d.join("probe.md").exists());

    let m = json(&d.join("probe.manifest.json"));
    assert_eq!(m["subcommand"], "probe");
    assert_eq!(m["config"]["lr"], 0.0005);
    let store_bytes = std::fs::read(d.join("toy.mev")).unwrap();
    use sha2::Digest;
    assert_eq!(m["inputs"][0]["sha256"], hex::encode(sha2::Sha256::digest(&store_bytes)));
    for name in ["corpus", "toy", "toy"] {
        assert!(d.join(format!("{name}.manifest.json")).exists());
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (name, bytes) in &sa {
        assert!(bytes == &sb[name], "{name} differs between runs");
    }
}

#[test]
fn report_has_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    for (seed, method) in [("1", "alpha"), ("2", "beta")] {
        ok(
            d,
            &[
                "train-toy",
                "--input",
                "corpus.jsonl",
                "--output",
                "m.mtp",
                "--features",
                "512",
                "--hidden",
                "16",
                "--seed",
                seed,
            ],
        );
        ok(d, &["extract", "--model", "m.mtp", "--input", "corpus.jsonl", "--output", "m.mev"]);
        let out = format!("{method}.json");
        ok(d, &["probe", "--input", "m.mev", "--corpus", "corpus.jsonl", "--method", method, "--output", &out]);
    }
    ok(d, &["report", "--input", "probe.json", "--input", "alpha.json", "--input", "beta.json", "--output", "rep"]);
    let md = std::fs::read_to_string(d.join("rep/report.md")).unwrap();
    let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Method")).collect();
    assert_eq!(rows.len(), 3, "{md}");
    for m in ["toy", "alpha", "beta"] {
        assert!(rows.iter().any(|r| r.starts_with(&format!("| {m} |"))), "{m} missing:\n{md}");
    }
    let csv = std::fs::read_to_string(d.join("rep/table1_probe.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("method,field F1,field F1 std,field Acc,field Acc std\n"));
    assert!(d.join("rep/manifest.json").exists());

    ok(d, &["compare", "--input", "alpha.json", "--input", "beta.json", "--output", "cmp.json"]);
    let c = json(&d.join("cmp.json"));
    assert_eq!(c["kind"], "compare");
    let p = c["test"]["p"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(!scidoc(d, &["compare", "--input", "alpha.json", "--output", "x.json"]).status.success());
}

#[test]
fn cluster_and_retrieve_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    ok(d, &["cluster", "--input", "toy.mev", "--corpus", "corpus.jsonl", "--ks", "2,5", "--output", "cl.json"]);
    let c = json(&d.join("cl.json"));
    assert_eq!(c["rows"].as_array().unwrap().len(), 2);
    ok(d, &["retrieve", "--input", "toy.mev", "--corpus", "corpus.jsonl", "--output", "rt.json"]);
    let r = json(&d.join("rt.json"));
    assert_eq!(r["fields"].as_array().unwrap().len(), 6);
    assert!(d.join("rt.auc.csv").exists());
    ok(d, &["report", "--input", "cl.json", "--input", "rt.json", "--output", "rep"]);
    for f in ["table2_purity.csv", "table3_ap.csv", "table3_auc.csv", "report.md"] {
        assert!(d.join("rep").join(f).exists(), "{f}");
    }
    let ap = std::fs::read_to_string(d.join("rep/table3_ap.csv")).unwrap();
    assert!(ap.starts_with("method,CS,Math,Phys,EESS,Econ,Stat,mean\n"), "{ap}");
}

#[test]
fn unknown_subcommand_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = scidoc(dir.path(), &["frobnicate"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_input_and_overwrite_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = scidoc(d, &["probe", "--input", "absent.mev", "--corpus", "absent.jsonl", "--output", "p.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    ok(d, &["synth", "--output", "c.jsonl", "--fields", "1", "--journals-per-field", "1", "--docs-per-journal", "3"]);
    let before = std::fs::read(d.join("c.jsonl")).unwrap();
    assert!(!scidoc(d, &["export-input", "--input", "c.jsonl", "--output", "c.jsonl"]).status.success());
    assert_eq!(std::fs::read(d.join("c.jsonl")).unwrap(), before);
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    std::fs::write(d.join("cfg.toml"), "[probe]\nruns = 2\nfolds = 3\n").unwrap();
    ok(d, &["--config", "cfg.toml", "probe", "--input", "toy.mev", "--corpus", "corpus.jsonl", "--output", "a.json"]);
    assert_eq!(json(&d.join("a.json"))["result"]["per_fold"].as_array().unwrap().len(), 6);
    ok(
        d,
        &[
            "--config",
            "cfg.toml",
            "probe",
            "--runs",
            "1",
            "--input",
            "toy.mev",
            "--corpus",
            "corpus.jsonl",
            "--output",
            "b.json",
        ],
    );
    assert_eq!(json(&d.join("b.json"))["result"]["per_fold"].as_array().unwrap().len(), 3);
    std::fs::write(d.join("bad.toml"), "[probe]\nlearning_rate = 1\n").unwrap();
    assert!(!scidoc(d, &["--config", "bad.toml", "synth", "--output", "x.jsonl"]).status.success());
}

#[test]
fn external_store_with_label_file() {
    // Stands in for a file produced by an external encoder.
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let rows: Vec<Vec<f64>> = (0..100)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            vec![s + 0.01 * (i as f64).sin(), 0.5 * (i as f64).cos(), 0.1]
        })
        .collect();
    let ids: Vec<String> = (0..100).map(|i| format!("doc{i:03}")).collect();
    write_store(&EmbeddingMatrix::from_rows(ids.clone(), &rows).unwrap(), &d.join("ext.mev")).unwrap();
    let labels: String = ids
        .iter()
        .enumerate()
        .map(|(i, id)| format!("{{\"id\":\"{id}\",\"label\":\"{}\"}}\n", if i % 2 == 0 { "pos" } else { "neg" }))
        .collect();
    std::fs::write(d.join("labels.jsonl"), labels).unwrap();
    ok(d, &["probe", "--input", "ext.mev", "--labels", "labels.jsonl", "--output", "p.json"]);
    let r = json(&d.join("p.json"));
    assert_eq!(r["classes"], serde_json::json!(["neg", "pos"]));
    assert!(r["result"]["mean_acc"].as_f64().unwrap() > 0.95);

    let splits = serde_json::json!([{ "train": ids[..80], "validation": ids[80..] }]);
    std::fs::write(d.join("splits.json"), splits.to_string()).unwrap();
    ok(
        d,
        &[
            "probe",
            "--input",
            "ext.mev",
            "--labels",
            "labels.jsonl",
            "--splits",
            "splits.json",
            "--runs",
            "1",
            "--output",
            "s.json",
        ],
    );
    assert_eq!(json(&d.join("s.json"))["result"]["per_fold"].as_array().unwrap().len(), 1);

    ok(d, &["knn", "--input", "ext.mev", "--query", "doc000", "--k", "3", "--output", "k.json"]);
    let hits = json(&d.join("k.json"));
    assert_eq!(hits.as_array().unwrap().len(), 3);
    assert!(hits.as_array().unwrap().iter().all(|h| h["id"] != "doc000"));

    std::fs::write(d.join("bad.mev"), b"NOPE").unwrap();
    assert!(!scidoc(d, &["probe", "--input", "bad.mev", "--labels", "labels.jsonl", "--output", "x.json"])
        .status
        .success());
}

#[test]
fn ingest_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let f = fixtures();
    let xml = f.join("pubmed_single.xml");
    ok(d, &["ingest-pubmed", "--input", xml.to_str().unwrap(), "--output", "pm.jsonl"]);
    let line = std::fs::read_to_string(d.join("pm.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert_eq!(rec["id"], "34567890");
    assert_eq!(rec["date"], "2021-03-15");

    let ax = f.join("arxiv_sample.jsonl");
    ok(d, &["ingest-arxiv", "--input", ax.to_str().unwrap(), "--output", "ax.jsonl"]);
    assert_eq!(std::fs::read_to_string(d.join("ax.jsonl")).unwrap().lines().count(), 3);
    let rejects = std::fs::read_to_string(d.join("ax.rejects.jsonl")).unwrap();
    assert_eq!(rejects.lines().count(), 1);
    assert!(rejects.contains("\"location\":3"));
}

#[test]
fn fetch_pubmed_replay_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let replay = fixtures().join("replay_two_pages.json");
    let args = [
        "fetch-pubmed",
        "--issn",
        "1234-5678",
        "--issn",
        "0000-0000",
        "--batch",
        "2",
        "--replay",
        replay.to_str().unwrap(),
        "--output",
        "pm.jsonl",
    ];
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_scidoc"))
            .args(args)
            .env("SCIDOC_PUBMED_URL", "http://replay.invalid/eutils")
            .current_dir(d)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(d.join("pm.jsonl")).unwrap()
    };
    let first = run();
    let ids: Vec<String> = String::from_utf8(first.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["9001", "9002", "9003"]);
    assert!(d.join("pm.pages/1234-5678_2021_00001.xml").exists());
    // Completed queries are not fetched again.
    assert_eq!(run(), first);
}
