use std::collections::HashMap;
use std::path::Path;

use anyhow::Result;
use ndarray::{Array2, ArrayView1};
use serde::Serialize;
use serde_json::json;
use stylecluster::clusterer::{
    adjusted_rand_index, assign_nearest, best_of_restarts, encode_centroids, make_baselines, make_cluster_splits, project_2d,
    read_centroids, silhouette, to_matrix, write_clusters_csv, write_projection_csv, write_split, Assignment,
    CentroidModel, ClusterReport, KMeansConfig,
};
use stylecluster::corpus::synth::read_labels_csv;
use stylecluster::ltrs::read_embeddings;
use tracing::warn;

use super::{create, read_clusters, write_json, ClusterArgs, SplitArgs};
use crate::{CliError, Context};

#[derive(Serialize)]
struct ClusterSummary {
    #[serde(flatten)]
    report: ClusterReport,
    /// Agreement with planted labels, when the corpus has them.
    ari: Option<f64>,
}

pub fn cluster(ctx: &Context, args: &ClusterArgs) -> Result<()> {
    let embed = ctx.workdir.require("embed")?;
    let embs = read_embeddings(&embed.path("embeddings.sse1"))?;
    let ids: Vec<String> = embs.iter().map(|e| e.sample_id.clone()).collect();
    let rows: Vec<&[f64]> = embs.iter().map(|e| e.vector.as_slice()).collect();
    let points = to_matrix(&rows)?;
    let c = &ctx.config.cluster;
    let cfg = KMeansConfig {
        k: args.k.unwrap_or(c.k),
        n_init: c.n_init,
        max_iter: c.max_iter,
        tol: c.tol,
        seed: ctx.seed(),
    };
    let model = best_of_restarts(points.view(), &cfg)?;
    let labels: Vec<usize> = model.assignments.iter().map(|a| a.cluster).collect();

    let mut report = ClusterReport::new(&model);
    match silhouette(points.view(), &labels, c.silhouette_cap, ctx.seed()) {
        Ok(s) => report.silhouette = Some(s),
        Err(e) => report.notes.push(e.to_string()),
    }
    let ari = if embed.path("labels.csv").is_file() {
        let planted: HashMap<String, String> = read_labels_csv(embed.path("labels.csv"))?.into_iter().collect();
        let (a, b): (Vec<&str>, Vec<usize>) = ids
            .iter()
            .zip(&labels)
            .filter_map(|(id, &l)| planted.get(id).map(|p| (p.as_str(), l)))
            .unzip();
        Some(adjusted_rand_index(&a, &b))
    } else {
        None
    };
    let xy = project_2d(points.view())?;

    let mut run = ctx.workdir.begin("cluster")?;
    run.upstream(&embed);
    std::fs::write(run.path("centroids.ssc1"), encode_centroids(model.centroids.view()))?;
    write_clusters_csv(create(&run.path("clusters.csv"))?, &ids, &model)?;
    write_projection_csv(create(&run.path("projection.csv"))?, &ids, xy.view())?;
    let summary = ClusterSummary { report, ari };
    write_json(&run.path("report.json"), &summary)?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({ "kmeans": cfg, "silhouette_cap": c.silhouette_cap }))?;
    println!(
        "{label}: k = {}, sizes {:?}, inertia {:.4}{}",
        cfg.k,
        summary.report.sizes,
        summary.report.inertia,
        ari.map(|a| format!(", ARI vs planted labels {a:.4}")).unwrap_or_default()
    );
    Ok(())
}

fn model_from(centroids: Array2<f64>, assignments: Vec<Assignment>) -> CentroidModel {
    let inertia = assignments.iter().map(|a| a.sq_dist).sum();
    CentroidModel {
        centroids,
        assignments,
        inertia,
        inertia_history: Vec::new(),
        iterations: 0,
    }
}

/// Assigns embeddings to the latest centroids.
pub fn assign(ctx: &Context, path: &Path) -> Result<()> {
    let file = if path.is_dir() { path.join("embeddings.sse1") } else { path.to_path_buf() };
    if !file.is_file() {
        return Err(CliError::Config(format!("no embeddings at {}", file.display())).into());
    }
    let clustered = ctx.workdir.require("cluster")?;
    let centroids = read_centroids(&clustered.path("centroids.ssc1"))?;
    let embs = read_embeddings(&file)?;
    let mut model = model_from(centroids, Vec::new());
    let mut assignments = Vec::with_capacity(embs.len());
    for e in &embs {
        let (cluster, d) = assign_nearest(&model, ArrayView1::from(e.vector.as_slice()))?;
        assignments.push(Assignment { cluster, sq_dist: d * d });
    }
    model.assignments = assignments;
    let ids: Vec<String> = embs.iter().map(|e| e.sample_id.clone()).collect();

    let mut run = ctx.workdir.begin("assign")?;
    run.upstream(&clustered);
    run.input(&file)?;
    write_clusters_csv(create(&run.path("assignments.csv"))?, &ids, &model)?;
    write_json(&run.path("report.json"), &json!({ "n": ids.len(), "sizes": model.cluster_sizes() }))?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({}))?;
    println!("{label}: {} samples assigned, sizes {:?}", ids.len(), model.cluster_sizes());
    Ok(())
}

pub fn split(ctx: &Context, args: &SplitArgs) -> Result<()> {
    let clustered = ctx.workdir.require("cluster")?;
    let centroids = read_centroids(&clustered.path("centroids.ssc1"))?;
    let (ids, assignments) = read_clusters(&clustered.path("clusters.csv"))?;
    let model = model_from(centroids, assignments);
    let sizes = model.cluster_sizes();
    let size = args
        .size
        .or(ctx.config.cluster.split_size)
        .unwrap_or_else(|| sizes.iter().copied().min().unwrap_or(0));
    let total = args.baseline_total.or(ctx.config.cluster.baseline_total).unwrap_or(size * model.k());
    if size == 0 || total == 0 {
        return Err(CliError::Validation(format!("split sizes must be positive (cluster sizes {sizes:?})")).into());
    }
    if total > ids.len() {
        warn!(total, n = ids.len(), "baseline total exceeds the number of samples");
    }
    let mut splits = make_cluster_splits(&model, &ids, size)?;
    splits.extend(make_baselines(&model, &ids, total)?);

    let mut run = ctx.workdir.begin("split")?;
    run.upstream(&clustered);
    for s in &splits {
        write_split(&run.dir, s)?;
    }
    let counts: Vec<_> = splits.iter().map(|s| json!({ "name": s.name, "n": s.sample_ids.len() })).collect();
    write_json(&run.path("report.json"), &json!({ "size": size, "baseline_total": total, "splits": counts }))?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({ "size": size, "baseline_total": total }))?;
    println!("{label}: {} splits ({size} per cluster, {total} per baseline)", splits.len());
    Ok(())
}
