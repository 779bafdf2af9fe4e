use std::path::PathBuf;

use anyhow::bail;

use crate::manifest::{guard_output, ManifestBuilder};
use crate::results::{csv_line, md_table, pct, pct_opt, ResultFile};
use crate::Ctx;

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

fn num(x: f64) -> String {
    format!("{:.4}", 100.0 * x)
}

/// Linear-probe table: one row per method, F1 and accuracy per dataset.
pub fn table1(results: &[&ResultFile]) -> (String, String) {
    let probes: Vec<_> = results
        .iter()
        .filter_map(|r| match r {
            ResultFile::Probe { method, dataset, result, .. } => Some((method.as_str(), dataset.as_str(), result)),
            _ => None,
        })
        .collect();
    let methods = first_seen(probes.iter().map(|p| p.0));
    let datasets = first_seen(probes.iter().map(|p| p.1));

    let mut csv_head = vec!["method".to_string()];
    let mut md_head = vec!["Method".to_string()];
    for d in &datasets {
        csv_head.extend([format!("{d} F1"), format!("{d} F1 std"), format!("{d} Acc"), format!("{d} Acc std")]);
        md_head.extend([format!("{d} F1"), format!("{d} Acc")]);
    }
    let mut csv = csv_line(&csv_head);
    let mut md_rows = Vec::new();
    for m in &methods {
        let mut c = vec![m.clone()];
        let mut r = vec![m.clone()];
        for d in &datasets {
            // Last file wins when a (method, dataset) pair repeats.
            match probes.iter().rev().find(|p| p.0 == m && p.1 == d) {
                Some((_, _, res)) => {
                    c.extend([num(res.mean_f1), num(res.std_f1), num(res.mean_acc), num(res.std_acc)]);
                    r.push(format!("{} ± {}", pct(res.mean_f1), pct(res.std_f1)));
                    r.push(format!("{} ± {}", pct(res.mean_acc), pct(res.std_acc)));
                }
                None => {
                    c.extend(std::iter::repeat_n(String::new(), 4));
                    r.extend(["-".to_string(), "-".to_string()]);
                }
            }
        }
        csv.push_str(&csv_line(&c));
        md_rows.push(r);
    }
    (csv, md_table(&md_head, &md_rows))
}

/// Clustering purity: method × number of clusters, one block per dataset.
pub fn table2(results: &[&ResultFile]) -> (String, String) {
    let clusters: Vec<_> = results
        .iter()
        .filter_map(|r| match r {
            ResultFile::Cluster { method, dataset, rows, .. } => Some((method.as_str(), dataset.as_str(), rows)),
            _ => None,
        })
        .collect();
    let mut ks: Vec<usize> = clusters.iter().flat_map(|c| c.2.iter().map(|r| r.k)).collect();
    ks.sort_unstable();
    ks.dedup();
    let datasets = first_seen(clusters.iter().map(|c| c.1));

    let mut head = vec!["method".to_string(), "dataset".to_string()];
    head.extend(ks.iter().map(usize::to_string));
    let mut csv = csv_line(&head);
    let mut md = String::new();
    for d in &datasets {
        let mine: Vec<_> = clusters.iter().filter(|c| c.1 == d).collect();
        let mut md_head = vec!["Method".to_string()];
        md_head.extend(ks.iter().map(usize::to_string));
        let mut md_rows = Vec::new();
        for m in first_seen(mine.iter().map(|c| c.0)) {
            let rows = mine.iter().rev().find(|c| c.0 == m).map(|c| c.2).unwrap();
            let cell = |k: usize| rows.iter().find(|r| r.k == k).map(|r| r.purity);
            let mut c = vec![m.clone(), d.clone()];
            c.extend(ks.iter().map(|&k| cell(k).map_or_else(String::new, num)));
            csv.push_str(&csv_line(&c));
            let mut r = vec![m.clone()];
            r.extend(ks.iter().map(|&k| pct_opt(cell(k))));
            md_rows.push(r);
        }
        md.push_str(&format!("Purity on {d}\n\n"));
        md.push_str(&md_table(&md_head, &md_rows));
        md.push('\n');
    }
    (csv, md)
}

pub struct Table3 {
    pub ap_csv: String,
    pub auc_csv: String,
    pub ap_md: String,
    pub auc_md: String,
}

impl Table3 {
    pub fn markdown(&self) -> String {
        format!("Average precision\n\n{}\nAUC\n\n{}", self.ap_md, self.auc_md)
    }
}

/// Retrieval: method × field AP with a mean column, plus the AUC companion.
pub fn table3(results: &[&ResultFile]) -> Table3 {
    let rets: Vec<_> = results
        .iter()
        .filter_map(|r| match r {
            ResultFile::Retrieve { method, fields, mean_ap } => Some((method.as_str(), fields, *mean_ap)),
            _ => None,
        })
        .collect();
    let fields = first_seen(rets.iter().flat_map(|r| r.1.iter().map(|f| f.field.as_str())));
    let methods = first_seen(rets.iter().map(|r| r.0));

    let build = |auc: bool| {
        let mut head = vec!["method".to_string()];
        head.extend(fields.iter().cloned());
        if !auc {
            head.push("mean".into());
        }
        let mut md_head = head.clone();
        md_head[0] = "Method".into();
        let mut csv = csv_line(&head);
        let mut md_rows = Vec::new();
        for m in &methods {
            let (_, fs, mean_ap) = rets.iter().rev().find(|r| r.0 == m).unwrap();
            let value =
                |f: &str| fs.iter().find(|x| x.field == f).and_then(|x| if auc { x.auc } else { x.average_precision });
            let mut c = vec![m.clone()];
            let mut r = vec![m.clone()];
            for f in &fields {
                c.push(value(f).map_or_else(String::new, num));
                r.push(pct_opt(value(f)));
            }
            if !auc {
                c.push(mean_ap.map_or_else(String::new, num));
                r.push(pct_opt(*mean_ap));
            }
            csv.push_str(&csv_line(&c));
            md_rows.push(r);
        }
        (csv, md_table(&md_head, &md_rows))
    };
    let (ap_csv, ap_md) = build(false);
    let (auc_csv, auc_md) = build(true);
    Table3 { ap_csv, auc_csv, ap_md, auc_md }
}

fn compare_section(results: &[&ResultFile]) -> String {
    let rows: Vec<Vec<String>> = results
        .iter()
        .filter_map(|r| match r {
            ResultFile::Compare { a, b, metric, mean_a, mean_b, test } => Some(vec![
                a.clone(),
                b.clone(),
                metric.clone(),
                pct(*mean_a),
                pct(*mean_b),
                format!("{:.3}", test.t),
                format!("{:.3e}", test.p),
            ]),
            _ => None,
        })
        .collect();
    let head = ["A", "B", "Metric", "Mean A", "Mean B", "t", "p"].map(String::from);
    md_table(&head, &rows)
}

/// Reads result files (`--input`, repeatable) and writes `report.md` plus
/// one CSV per table kind present into the `--output` directory.
pub fn report(ctx: &Ctx) -> anyhow::Result<()> {
    let out_dir = ctx.output()?;
    if ctx.inputs.is_empty() {
        bail!("report needs at least one --input result file");
    }
    guard_output(out_dir, &ctx.inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    std::fs::create_dir_all(out_dir)?;
    let mut mb = ManifestBuilder::new(ctx, "report");
    let mut loaded = Vec::new();
    for p in &ctx.inputs {
        mb.input(p)?;
        loaded.push(ResultFile::load(p)?);
    }
    let refs: Vec<&ResultFile> = loaded.iter().collect();
    let has = |kind: &str| refs.iter().any(|r| crate::eval_cmds::kind_name(r) == kind);

    let mut md = String::from("# Embedding evaluation report\n\n");
    let mut files: Vec<(&str, String)> = Vec::new();
    if has("probe") {
        let (csv, t) = table1(&refs);
        md.push_str(&format!("## Linear probe (F1 / accuracy, mean ± std)\n\n{t}\n"));
        files.push(("table1_probe.csv", csv));
    }
    if has("cluster") {
        let (csv, t) = table2(&refs);
        md.push_str(&format!("## Clustering purity\n\n{t}"));
        files.push(("table2_purity.csv", csv));
    }
    if has("retrieve") {
        let t = table3(&refs);
        md.push_str(&format!("## Retrieval\n\n{}\n", t.markdown()));
        files.push(("table3_ap.csv", t.ap_csv));
        files.push(("table3_auc.csv", t.auc_csv));
    }
    if has("compare") {
        md.push_str(&format!("## Significance (unpaired t-test)\n\n{}\n", compare_section(&refs)));
    }
    files.push(("report.md", md));
    for (name, text) in &files {
        let p = out_dir.join(name);
        scidoc_core::binfmt::write_atomic(&p, text.as_bytes())?;
        mb.output(&p);
    }
    eprintln!("report: {} result files -> {}", loaded.len(), out_dir.display());
    mb.config(&serde_json::json!({ "methods": first_seen(refs.iter().map(|r| r.method())) }))?;
    mb.write(out_dir)
}
