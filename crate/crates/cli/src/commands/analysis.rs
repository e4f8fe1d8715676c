use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;

use anyhow::{Context as _, Result};
use serde_json::{json, Value};
use stylecluster::corpus::{select_oracle, DocumentSample};
use stylecluster::evalmetrics::{
    choice_counts, cluster_best, evaluate_run, gold_run, read_run, write_run, EvalOptions, GeneratedRun,
    MetricReport, Selector,
};
use stylecluster::ltrs::TripletGraphs;
use stylecluster::styleinfo::{
    build_summary_oracle_graph, census_report, compression_stats, count_motifs, write_census_csv, Role,
};
use tracing::warn;

use super::model::{load_graphs, upstream};
use super::{create, load_corpus, read_clusters, read_id_list, resolve_corpus, write_json, EvalArgs, MotifsArgs, SographArgs};
use crate::workdir::PendingRun;
use crate::{CliError, Context};

/// Sample ids grouped by cluster, in cluster order.
fn cluster_members(ids: &[String], clusters: &[usize]) -> Vec<Vec<String>> {
    let k = clusters.iter().max().map_or(0, |&m| m + 1);
    let mut out = vec![Vec::new(); k];
    for (id, &c) in ids.iter().zip(clusters) {
        out[c].push(id.clone());
    }
    out
}

pub fn motifs(ctx: &Context, args: &MotifsArgs) -> Result<()> {
    let clustered = ctx.workdir.require("cluster")?;
    let embed = upstream(ctx, &clustered, "embed")?;
    let graphs = upstream(ctx, &embed, "graphs")?;
    let (vocab, triplets) = load_graphs(&graphs)?;
    let by_id: HashMap<&str, &TripletGraphs> = triplets.iter().map(|t| (t.sample_id.as_str(), t)).collect();
    let (ids, assignments) = read_clusters(&clustered.path("clusters.csv"))?;
    let clusters: Vec<usize> = assignments.iter().map(|a| a.cluster).collect();

    let mut missing = 0;
    let groups: Vec<(String, Vec<_>)> = cluster_members(&ids, &clusters)
        .into_iter()
        .enumerate()
        .map(|(c, members)| {
            let mut censuses = Vec::with_capacity(2 * members.len());
            for id in &members {
                match by_id.get(id.as_str()) {
                    Some(t) => {
                        censuses.push(count_motifs(&t.user, Role::S, &vocab));
                        censuses.push(count_motifs(&t.pos, Role::O, &vocab));
                    }
                    None => missing += 1,
                }
            }
            (format!("cluster_{c}"), censuses)
        })
        .collect();
    if missing > 0 {
        warn!(missing, "clustered samples without graphs were left out");
    }
    let top_k = args.top_k.unwrap_or(ctx.config.motifs.top_k);
    let report = census_report(&groups, top_k)?;

    let mut run = ctx.workdir.begin("motifs")?;
    run.upstream(&clustered);
    run.upstream(&graphs);
    write_census_csv(create(&run.path("census.csv"))?, &report)?;
    write_json(&run.path("report.json"), &report)?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({ "top_k": top_k }))?;
    println!("{label}: {} distinct motifs, {} instances", report.distinct_keys, report.total_instances);
    for row in report.rows.iter().take(5) {
        let means: Vec<String> = row.cluster_means.iter().map(|m| format!("{m:.4}")).collect();
        println!("  {}  [{}]", row.key, means.join(", "));
    }
    Ok(())
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

pub fn sograph(ctx: &Context, args: &SographArgs) -> Result<()> {
    let src = resolve_corpus(ctx, &args.corpus)?;
    let samples = load_corpus(&src.path)?;
    let index: HashMap<&str, &DocumentSample> = samples.iter().map(|s| (s.id.as_str(), s)).collect();
    let clustered = ctx.workdir.latest("cluster")?;
    let members = match &clustered {
        Some(c) => {
            let (ids, a) = read_clusters(&c.path("clusters.csv"))?;
            let clusters: Vec<usize> = a.iter().map(|a| a.cluster).collect();
            let mut nearest: Vec<Option<(f64, &String)>> = vec![None; clusters.iter().max().map_or(0, |m| m + 1)];
            for (id, a) in ids.iter().zip(&a) {
                let cur = &mut nearest[a.cluster];
                if cur.is_none_or(|(d, _)| a.sq_dist < d) {
                    *cur = Some((a.sq_dist, id));
                }
            }
            let nearest: Vec<String> = nearest.into_iter().flatten().map(|(_, id)| id.clone()).collect();
            Some((cluster_members(&ids, &clusters), nearest))
        }
        None => None,
    };
    let ids: Vec<String> = if !args.ids.is_empty() {
        args.ids.clone()
    } else if let Some((_, nearest)) = &members {
        nearest.clone()
    } else {
        vec![samples[0].id.clone()]
    };

    let mut run = ctx.workdir.begin("sograph")?;
    src.record(&mut run)?;
    let mut seen = HashSet::new();
    for id in &ids {
        let sample = index
            .get(id.as_str())
            .ok_or_else(|| CliError::Validation(format!("sample {id:?} is not in the corpus")))?;
        let Some(user) = sample.summary.first() else {
            warn!(id, "sample has no summary");
            continue;
        };
        let Some((oi, _)) = select_oracle(user, &sample.article) else { continue };
        let g = build_summary_oracle_graph(user, &sample.article[oi]);
        let mut name = file_stem(id);
        while !seen.insert(name.clone()) {
            name.push('_');
        }
        fs::write(run.path(&format!("{name}.dot")), g.to_dot(id))?;
    }
    if let Some((groups, _)) = &members {
        run.upstream(clustered.as_ref().expect("clustered"));
        let stats: Vec<_> = groups
            .iter()
            .enumerate()
            .map(|(c, ids)| compression_stats(&format!("cluster_{c}"), ids, &index))
            .collect();
        for s in &stats {
            println!("  {}: n = {}, compression {:.3}, alignment {:.3}", s.name, s.n, s.mean_ratio, s.mean_alignment);
        }
        write_json(&run.path("compression.json"), &stats)?;
    }
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({ "ids": ids }))?;
    println!("{label}: {} graph(s)", ids.len());
    Ok(())
}

fn save_report(run: &PendingRun, report: &MetricReport) -> Result<()> {
    let stem = file_stem(&report.system);
    write_json(&run.path(&format!("report_{stem}.json")), report)?;
    fs::write(run.path(&format!("report_{stem}.txt")), report.to_table())?;
    println!("{}", report.to_table());
    Ok(())
}

pub fn eval(ctx: &Context, args: &EvalArgs) -> Result<()> {
    if args.runs.is_empty() && !args.gold {
        return Err(CliError::Config("nothing to evaluate: pass --run FILE or --gold".into()).into());
    }
    if args.best && args.runs.len() < 2 {
        return Err(CliError::Config("--best needs at least two --run files".into()).into());
    }
    let selector: Selector = match &args.selector {
        Some(s) => s.parse().map_err(|e: stylecluster::Error| CliError::Config(e.to_string()))?,
        None => ctx.config.metrics.selector,
    };
    let src = resolve_corpus(ctx, &args.corpus)?;
    let mut samples = load_corpus(&src.path)?;
    if let Some(p) = &args.ids {
        let keep: HashSet<String> = read_id_list(p)?.into_iter().collect();
        samples.retain(|s| keep.contains(&s.id));
        if samples.is_empty() {
            return Err(CliError::Validation(format!("no corpus sample is listed in {}", p.display())).into());
        }
    }
    let mut runs: Vec<GeneratedRun> = Vec::new();
    for p in &args.runs {
        if !p.is_file() {
            return Err(CliError::Config(format!("run file {} does not exist", p.display())).into());
        }
        let name = p.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        runs.push(read_run(p, &name).with_context(|| format!("reading {}", p.display()))?);
    }
    let opts = EvalOptions {
        tokenizer: ctx.config.metrics.tokenizer,
        min_coverage: ctx.config.metrics.min_coverage,
        per_sample: args.per_sample,
    };

    let mut run = ctx.workdir.begin("eval")?;
    src.record(&mut run)?;
    for p in args.runs.iter().chain(&args.ids) {
        run.input(p)?;
    }
    if args.gold {
        save_report(&run, &evaluate_run(&gold_run(&samples), &samples, &opts)?)?;
    }
    for r in &runs {
        save_report(&run, &evaluate_run(r, &samples, &opts)?)?;
    }
    if args.best {
        let best = cluster_best(&runs, &samples, selector, &opts)?;
        write_run(&run.path("cluster_best.jsonl"), &best.run)?;
        let mut w = csv::Writer::from_writer(create(&run.path("choices.csv"))?);
        w.write_record(["sample_id", "system"])?;
        for (id, &r) in &best.choices {
            w.write_record([id.as_str(), runs[r].system.as_str()])?;
        }
        w.flush()?;
        let counts = choice_counts(&best, runs.len());
        for (r, n) in runs.iter().zip(counts) {
            println!("  {} chosen for {n} sample(s)", r.system);
        }
        save_report(&run, &best.report)?;
    }
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({ "metrics": ctx.config.metrics, "selector": selector }))?;
    println!("{label}: reports written");
    Ok(())
}

const STAGES: [&str; 11] = [
    "synth", "validate", "graphs", "train", "embed", "cluster", "assign", "split", "motifs", "sograph", "eval",
];

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if !n.is_i64() && !n.is_u64() => format!("{f:.4}"),
            _ => n.to_string(),
        },
        other => {
            let s = other.to_string();
            if s.len() > 120 {
                format!("{}...", &s[..s.floor_char_boundary(117)])
            } else {
                s
            }
        }
    }
}

pub fn report(ctx: &Context) -> Result<()> {
    let mut doc = String::from("# stylecluster report\n");
    let _ = writeln!(doc, "\nworkdir: {}\n", ctx.workdir.root().display());
    let mut found = 0;
    let mut upstream = BTreeMap::new();
    for stage in STAGES {
        let Some(r) = ctx.workdir.latest(stage)? else { continue };
        found += 1;
        upstream.insert(stage.to_string(), r.label());
        let _ = writeln!(doc, "## {}\n", r.label());
        let _ = writeln!(doc, "- seed: {}", r.manifest.seed);
        let _ = writeln!(doc, "- config: {}", &r.manifest.config_hash[..12]);
        for (s, l) in &r.manifest.upstream {
            let _ = writeln!(doc, "- {s}: {l}");
        }
        let report = r.path("report.json");
        if report.is_file() {
            let v: Value = super::read_json(&report)?;
            if let Value::Object(map) = v {
                for (k, v) in map.iter().filter(|(k, _)| k.as_str() != "rejects") {
                    let _ = writeln!(doc, "- {k}: {}", render_value(v));
                }
            }
        }
        let mut tables: Vec<_> = fs::read_dir(&r.dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "txt") && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("report_")))
            .collect();
        tables.sort();
        for t in tables {
            let _ = writeln!(doc, "\n```\n{}```", fs::read_to_string(&t)?);
        }
        doc.push('\n');
    }
    if found == 0 {
        return Err(CliError::Prerequisite(format!(
            "nothing to report in {}: run synth or graphs first",
            ctx.workdir.root().display()
        ))
        .into());
    }
    let mut run = ctx.workdir.begin("report")?;
    for l in upstream.values() {
        let r = ctx.workdir.open_label(l)?;
        run.upstream(&r);
    }
    fs::write(run.path("report.md"), &doc)?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({}))?;
    print!("{doc}");
    eprintln!("{label}: report written");
    Ok(())
}
