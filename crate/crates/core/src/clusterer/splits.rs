use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::CentroidModel;
use crate::error::{Error, Result, Shortfall};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub name: String,
    pub sample_ids: Vec<String>,
}

/// Member indices of every cluster, nearest first (ties by sample id).
fn members_by_distance(model: &CentroidModel, ids: &[String]) -> Result<Vec<Vec<usize>>> {
    if ids.len() != model.assignments.len() {
        return Err(Error::DimMismatch {
            expected: model.assignments.len(),
            found: ids.len(),
        });
    }
    let mut seen = HashSet::with_capacity(ids.len());
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::DuplicateId(dup.clone()));
    }
    let mut members = vec![Vec::new(); model.k()];
    for (i, a) in model.assignments.iter().enumerate() {
        members[a.cluster].push(i);
    }
    for m in &mut members {
        m.sort_by(|&a, &b| {
            let (da, db) = (model.assignments[a].sq_dist, model.assignments[b].sq_dist);
            da.total_cmp(&db).then_with(|| ids[a].cmp(&ids[b]))
        });
    }
    Ok(members)
}

fn check_quotas(members: &[Vec<usize>], quotas: &[usize]) -> Result<()> {
    let short: Vec<Shortfall> = members
        .iter()
        .zip(quotas)
        .enumerate()
        .filter(|(_, (m, &q))| m.len() < q)
        .map(|(c, (m, &q))| Shortfall {
            cluster: c,
            available: m.len(),
            required: q,
        })
        .collect();
    if short.is_empty() {
        Ok(())
    } else {
        Err(Error::Shortfall(short))
    }
}

/// `cluster_i`: the `n_per_cluster` members closest to centroid `i`.
pub fn make_cluster_splits(model: &CentroidModel, ids: &[String], n_per_cluster: usize) -> Result<Vec<SplitSpec>> {
    let members = members_by_distance(model, ids)?;
    check_quotas(&members, &vec![n_per_cluster; model.k()])?;
    Ok(members
        .iter()
        .enumerate()
        .map(|(c, m)| SplitSpec {
            name: format!("cluster_{c}"),
            sample_ids: m[..n_per_cluster].iter().map(|&i| ids[i].clone()).collect(),
        })
        .collect())
}

fn largest(weights: &[f64]) -> usize {
    let mut best = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > weights[best] {
            best = i;
        }
    }
    best
}

/// `total / k` each; the remainder goes to the largest cluster.
pub fn equal_quotas(sizes: &[usize], total: usize) -> Vec<usize> {
    let k = sizes.len();
    let mut q = vec![total / k; k];
    let weights: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    q[largest(&weights)] += total % k;
    q
}

/// `round(total × p_i)` after normalizing `proportions` to sum to one,
/// rounding half away from zero; the rounding residue goes to the largest
/// proportion so the quotas sum to `total` exactly.
pub fn baseline_quotas(proportions: &[f64], total: usize) -> Result<Vec<usize>> {
    let sum: f64 = proportions.iter().sum();
    if proportions.is_empty() || !(sum > 0.0) || proportions.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidConfig("proportions must be non-negative with a positive sum".into()));
    }
    let mut q: Vec<i64> = proportions
        .iter()
        .map(|p| (total as f64 * p / sum).round() as i64)
        .collect();
    let residue = total as i64 - q.iter().sum::<i64>();
    let big = largest(proportions);
    q[big] += residue;
    if q[big] < 0 {
        return Err(Error::InvalidConfig("quota residue exceeds the largest cluster".into()));
    }
    Ok(q.into_iter().map(|x| x as usize).collect())
}

/// `baseline_0`: equal quotas of nearest members; `baseline_1`: quotas in
/// proportion to cluster sizes, nearest members; `baseline_2`: equal quotas
/// of farthest members.
pub fn make_baselines(model: &CentroidModel, ids: &[String], total: usize) -> Result<Vec<SplitSpec>> {
    let members = members_by_distance(model, ids)?;
    let sizes = model.cluster_sizes();
    let equal = equal_quotas(&sizes, total);
    let props: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let proportional = baseline_quotas(&props, total)?;
    check_quotas(&members, &equal)?;
    check_quotas(&members, &proportional)?;

    let take = |quotas: &[usize], farthest: bool| -> Vec<String> {
        members
            .iter()
            .zip(quotas)
            .flat_map(|(m, &q)| {
                let picked: Vec<usize> = if farthest {
                    m.iter().rev().take(q).copied().collect()
                } else {
                    m[..q].to_vec()
                };
                picked.into_iter().map(|i| ids[i].clone())
            })
            .collect()
    };
    Ok(vec![
        SplitSpec {
            name: "baseline_0".into(),
            sample_ids: take(&equal, false),
        },
        SplitSpec {
            name: "baseline_1".into(),
            sample_ids: take(&proportional, false),
        },
        SplitSpec {
            name: "baseline_2".into(),
            sample_ids: take(&equal, true),
        },
    ])
}
