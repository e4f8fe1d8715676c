use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{MotifCensus, MotifKey, Role};
use crate::error::{Error, Result};

pub const DEFAULT_TOP_K: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    pub key: MotifKey,
    /// Mean per-graph ratio over every graph of the key's role.
    pub overall_mean: f64,
    /// Same mean restricted to each cluster, in cluster order.
    pub cluster_means: Vec<f64>,
    pub cluster_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub clusters: Vec<String>,
    /// Top rows by overall mean ratio (ties by key).
    pub rows: Vec<CensusRow>,
    pub distinct_keys: usize,
    pub total_instances: u64,
}

#[derive(Default)]
struct Acc {
    ratio_sum: f64,
    count: u64,
}

/// Ranks motifs across clustered censuses. Graphs without motifs still count
/// in the denominators of their role.
pub fn census_report(groups: &[(String, Vec<MotifCensus>)], top_k: usize) -> Result<CensusReport> {
    if groups.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some((name, _)) = groups.iter().find(|(_, g)| g.is_empty()) {
        return Err(Error::InvalidConfig(format!("cluster {name} has no graphs")));
    }
    let k = groups.len();
    let mut per_key: BTreeMap<MotifKey, Vec<Acc>> = BTreeMap::new();
    let mut graphs: BTreeMap<Role, Vec<usize>> = BTreeMap::new();
    for (ci, (_, censuses)) in groups.iter().enumerate() {
        for c in censuses {
            if let Some(role) = c.role {
                graphs.entry(role).or_insert_with(|| vec![0; k])[ci] += 1;
            }
            for (key, r) in c.ratios() {
                let accs = per_key.entry(key.clone()).or_insert_with(|| (0..k).map(|_| Acc::default()).collect());
                accs[ci].ratio_sum += r;
                accs[ci].count += c.counts[key];
            }
        }
    }
    let total_instances = per_key.values().flatten().map(|a| a.count).sum();
    let distinct_keys = per_key.len();
    let mut rows: Vec<CensusRow> = per_key
        .into_iter()
        .map(|(key, accs)| {
            let n = graphs.get(&key.role).cloned().unwrap_or_else(|| vec![0; k]);
            let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
            let overall = mean(accs.iter().map(|a| a.ratio_sum).sum(), n.iter().sum());
            CensusRow {
                cluster_means: accs.iter().zip(&n).map(|(a, &n)| mean(a.ratio_sum, n)).collect(),
                cluster_counts: accs.iter().map(|a| a.count).collect(),
                overall_mean: overall,
                key,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.overall_mean.total_cmp(&a.overall_mean).then_with(|| a.key.cmp(&b.key)));
    rows.truncate(top_k);
    Ok(CensusReport {
        clusters: groups.iter().map(|(n, _)| n.clone()).collect(),
        rows,
        distinct_keys,
        total_instances,
    })
}

/// `role,shape,labels,cluster,mean_ratio,instance_count`, one line per row
/// and cluster.
pub fn write_census_csv<W: Write>(w: W, report: &CensusReport) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["role", "shape", "labels", "cluster", "mean_ratio", "instance_count"])?;
    for row in &report.rows {
        for (ci, name) in report.clusters.iter().enumerate() {
            wr.write_record([
                row.key.role.to_string(),
                row.key.shape.to_string(),
                row.key.labels.join(" "),
                name.clone(),
                row.cluster_means[ci].to_string(),
                row.cluster_counts[ci].to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}
