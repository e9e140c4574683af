//! Result emission: CSV tables, dominance reports, plot-ready data files,
//! and the run manifest. All output is deterministic — no timestamps, no
//! environment-dependent content — so identical runs produce identical
//! bytes.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::couple::DominanceRow;
use crate::sweep::SweepTable;

/// Sweep CSV with the exact header
/// `lambda,policy,node,metric,mean,ci_low,ci_high,reps`.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("lambda,policy,node,metric,mean,ci_low,ci_high,reps\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{:.9},{:.9},{:.9},{}",
            fmt_num(r.lambda),
            r.policy,
            r.node,
            r.metric,
            r.mean,
            r.ci_low,
            r.ci_high,
            r.reps
        )
        .expect("string write");
    }
    out
}

/// Dominance CSV with header `seed,pair,holds,first_violation_t`.
pub fn dominance_csv(rows: &[DominanceRow]) -> String {
    let mut out = String::from("seed,pair,holds,first_violation_t\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.seed,
            r.pair,
            r.holds,
            r.first_violation_t
                .map(|t| format!("{t:.9}"))
                .unwrap_or_default()
        )
        .expect("string write");
    }
    out
}

/// Plot-ready whitespace-separated data, one file per (node, metric):
/// blocks per policy separated by blank lines, rows `lambda mean ci_low
/// ci_high`. Returns `(file name, contents)` pairs.
pub fn plot_files(table: &SweepTable) -> Vec<(String, String)> {
    let mut keys: Vec<(u32, &'static str)> = table
        .rows
        .iter()
        .map(|r| (r.node, r.metric))
        .collect();
    keys.sort();
    keys.dedup();
    let mut policies: Vec<&str> = table.rows.iter().map(|r| r.policy.as_str()).collect();
    policies.sort();
    policies.dedup();
    keys.into_iter()
        .map(|(node, metric)| {
            let mut out = String::new();
            for (bi, policy) in policies.iter().enumerate() {
                if bi > 0 {
                    out.push('\n');
                }
                writeln!(out, "# policy: {policy}").expect("string write");
                for r in table
                    .rows
                    .iter()
                    .filter(|r| r.node == node && r.metric == metric && r.policy == *policy)
                {
                    writeln!(
                        out,
                        "{} {:.9} {:.9} {:.9}",
                        fmt_num(r.lambda),
                        r.mean,
                        r.ci_low,
                        r.ci_high
                    )
                    .expect("string write");
                }
            }
            (format!("node{node}_{metric}.dat"), out)
        })
        .collect()
}

/// The audit manifest: config hash, master seed, tool version, resolved
/// defaults. Content is stable across reruns of the same inputs.
pub fn manifest(config_text: &str, master_seed: u64, extra: &[(String, String)]) -> String {
    let digest = hex::encode(Sha256::digest(config_text.as_bytes()));
    let mut out = String::new();
    writeln!(out, "tool = agesim {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "config_sha256 = {digest}").unwrap();
    writeln!(out, "master_seed = {master_seed}").unwrap();
    writeln!(
        out,
        "seed_derivation = splitmix64 chain over (master, lambda-index, replication); policy variants of one replication share randomness (common random numbers)"
    )
    .unwrap();
    writeln!(out, "ci_method = normal-approximation 95%").unwrap();
    for (k, v) in extra {
        writeln!(out, "{k} = {v}").unwrap();
    }
    out
}

fn fmt_num(x: f64) -> String {
    // Trim trailing zeros from sweep grid values: 0.5, 1, 1.5 ...
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Writes named files under `dir`, creating it if needed.
pub fn emit(dir: &Path, files: &[(String, String)]) -> io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{SweepRow, SweepTable};

    fn table() -> SweepTable {
        SweepTable {
            rows: vec![
                SweepRow {
                    lambda: 0.5,
                    policy: "fcfs[B=1]".into(),
                    node: 2,
                    metric: "peak-age",
                    mean: 3.25,
                    ci_low: 3.0,
                    ci_high: 3.5,
                    reps: 200,
                },
                SweepRow {
                    lambda: 1.0,
                    policy: "fcfs[B=1]".into(),
                    node: 2,
                    metric: "peak-age",
                    mean: 4.5,
                    ci_low: 4.0,
                    ci_high: 5.0,
                    reps: 200,
                },
            ],
        }
    }

    #[test]
    fn sweep_csv_header_is_exact() {
        let csv = sweep_csv(&SweepTable::default());
        assert_eq!(csv, "lambda,policy,node,metric,mean,ci_low,ci_high,reps\n");
        let csv = sweep_csv(&table());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "lambda,policy,node,metric,mean,ci_low,ci_high,reps"
        );
        assert_eq!(
            lines.next().unwrap(),
            "0.5,fcfs[B=1],2,peak-age,3.250000000,3.000000000,3.500000000,200"
        );
    }

    #[test]
    fn dominance_csv_header_is_exact() {
        let rows = vec![
            DominanceRow {
                seed: 42,
                pair: "prmp-lgfs>fcfs".into(),
                holds: true,
                first_violation_t: None,
            },
            DominanceRow {
                seed: 43,
                pair: "fcfs>prmp-lgfs".into(),
                holds: false,
                first_violation_t: Some(1.25),
            },
        ];
        let csv = dominance_csv(&rows);
        let expect = "seed,pair,holds,first_violation_t\n\
                      42,prmp-lgfs>fcfs,true,\n\
                      43,fcfs>prmp-lgfs,false,1.250000000\n";
        assert_eq!(csv, expect);
    }

    #[test]
    fn plot_files_group_by_node_and_metric() {
        let files = plot_files(&table());
        assert_eq!(files.len(), 1);
        assert_eq!(files[0].0, "node2_peak-age.dat");
        assert!(files[0].1.starts_with("# policy: fcfs[B=1]\n0.5 "));
    }

    #[test]
    fn manifest_mentions_seed_and_hash() {
        let m = manifest("[graph]\n", 777, &[("horizon".into(), "100".into())]);
        assert!(m.contains("master_seed = 777"));
        assert!(m.contains("config_sha256 = "));
        assert!(m.contains("horizon = 100"));
        assert!(!m.to_lowercase().contains("time:"), "no timestamps");
    }
}
