//! End-to-end run: ingest, network, walks, features, join, fit, communities
//! and tracking, with every artifact staged as `<name>.partial` until the run
//! succeeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use super::config::PipelineConfig;
use crate::community::{
    communities_geojson, detect_communities_with, partition_csv, track_communities, CommunityParams,
    CommunityPartition, EventKind,
};
use crate::error::{Error, Result};
use crate::features::step_expectation_features_with;
use crate::fmt::short;
use crate::gravity::{build_gravity_network, GravityNetwork};
use crate::raster::{
    aggregate_points, aggregate_to_grid_with, average_rasters, load_ascii_grid, load_point_csv, CoarseGrid,
};
use crate::regress::{split_harness, Dataset};
use crate::survey::{bin_households, join_to_nodes, joined_csv, load_survey_csv};
use crate::walk::simulate_walks;

/// Files written under the output directory, in order.
#[derive(Debug, Default)]
struct Staging {
    dir: PathBuf,
    files: Vec<String>,
}

impl Staging {
    fn partial(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}.partial"))
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.partial(name);
        fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn commit(&self) -> Result<()> {
        for name in &self.files {
            let (from, to) = (self.partial(name), self.dir.join(name));
            fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub model: String,
    pub median_test_r2: f64,
    pub undefined_splits: usize,
    pub rank_deficient_fits: usize,
    pub unconverged_fits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSummary {
    pub label: String,
    pub communities: usize,
    pub modularity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSummary {
    pub from: String,
    pub to: String,
    /// Event counts in `EventKind` order: continue, merge, split, disappear, appear.
    pub counts: [usize; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveySummary {
    pub households: usize,
    pub households_dropped: usize,
    pub clusters: usize,
    pub joined: usize,
    pub join_dropped: usize,
}

/// Counts and headline numbers of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub rewired_edges: usize,
    pub walks: usize,
    pub feature_columns: usize,
    pub survey: Option<SurveySummary>,
    pub models: Vec<ModelSummary>,
    pub communities: usize,
    pub modularity: f64,
    pub snapshots: Vec<SnapshotSummary>,
    pub transitions: Vec<TransitionSummary>,
    pub files: Vec<String>,
}

const EVENT_KINDS: [EventKind; 5] =
    [EventKind::Continue, EventKind::Merge, EventKind::Split, EventKind::Disappear, EventKind::Appear];

fn num(x: f64) -> serde_json::Value {
    // JSON has no NaN; undefined values are written as null.
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run `{}` (seed {})", self.label, self.seed);
        let _ = writeln!(out, "network: {} nodes, {} edges ({} rewired)", self.nodes, self.edges, self.rewired_edges);
        let _ = writeln!(out, "walks: {} ({} feature columns)", self.walks, self.feature_columns);
        match &self.survey {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "survey: {} households ({} dropped), {} clusters, {} joined ({} dropped)",
                    s.households, s.households_dropped, s.clusters, s.joined, s.join_dropped
                );
            }
            None => out.push_str("survey: none\n"),
        }
        for m in &self.models {
            let _ = write!(out, "model {}: median test R2 {}", m.model, short(m.median_test_r2));
            if m.undefined_splits > 0 {
                let _ = write!(out, ", {} undefined splits", m.undefined_splits);
            }
            if m.rank_deficient_fits > 0 {
                let _ = write!(out, ", {} rank-deficient fits", m.rank_deficient_fits);
            }
            if m.unconverged_fits > 0 {
                let _ = write!(out, ", {} unconverged fits", m.unconverged_fits);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "communities: {} (modularity {})", self.communities, short(self.modularity));
        for s in &self.snapshots {
            let _ = writeln!(
                out,
                "snapshot {}: {} communities (modularity {})",
                s.label,
                s.communities,
                short(s.modularity)
            );
        }
        for t in &self.transitions {
            let counts: Vec<String> =
                EVENT_KINDS.iter().zip(t.counts).map(|(k, c)| format!("{} {c}", k.as_str())).collect();
            let _ = writeln!(out, "transition {} -> {}: {}", t.from, t.to, counts.join(", "));
        }
        out
    }

    /// One JSON object on a single line.
    pub fn to_json_line(&self) -> String {
        let value = json!({
            "label": self.label,
            "seed": self.seed,
            "nodes": self.nodes,
            "edges": self.edges,
            "rewired_edges": self.rewired_edges,
            "walks": self.walks,
            "feature_columns": self.feature_columns,
            "survey": self.survey.as_ref().map(|s| json!({
                "households": s.households,
                "households_dropped": s.households_dropped,
                "clusters": s.clusters,
                "joined": s.joined,
                "join_dropped": s.join_dropped,
            })),
            "models": self.models.iter().map(|m| json!({
                "model": m.model,
                "median_test_r2": num(m.median_test_r2),
                "undefined_splits": m.undefined_splits,
                "rank_deficient_fits": m.rank_deficient_fits,
                "unconverged_fits": m.unconverged_fits,
            })).collect::<Vec<_>>(),
            "communities": self.communities,
            "modularity": num(self.modularity),
            "snapshots": self.snapshots.iter().map(|s| json!({
                "label": s.label,
                "communities": s.communities,
                "modularity": num(s.modularity),
            })).collect::<Vec<_>>(),
            "transitions": self.transitions.iter().map(|t| {
                let mut o = serde_json::Map::new();
                o.insert("from".into(), json!(t.from));
                o.insert("to".into(), json!(t.to));
                for (k, c) in EVENT_KINDS.iter().zip(t.counts) {
                    o.insert(k.as_str().into(), json!(c));
                }
                serde_json::Value::Object(o)
            }).collect::<Vec<_>>(),
            "files": self.files,
        });
        let mut line = value.to_string();
        line.push('\n');
        line
    }

    pub fn median_r2(&self, model: &str) -> Option<f64> {
        self.models.iter().find(|m| m.model == model).map(|m| m.median_test_r2)
    }
}

/// Builds the coarse grid from the configured points or averaged rasters.
pub fn ingest(cfg: &PipelineConfig, rasters: &[PathBuf]) -> Result<CoarseGrid> {
    let (rows, cols) = cfg.grid_shape()?;
    if let Some(points) = &cfg.points {
        return aggregate_points(&load_point_csv(points)?, rows, cols, cfg.bbox, &cfg.aggregate);
    }
    let images = rasters.iter().map(load_ascii_grid).collect::<Result<Vec<_>>>()?;
    aggregate_to_grid_with(&average_rasters(&images)?, rows, cols, cfg.bbox, &cfg.aggregate)
}

fn detect(cfg: &PipelineConfig, net: &GravityNetwork, label: &str) -> Result<CommunityPartition> {
    detect_communities_with(
        net,
        &CommunityParams {
            resolution: cfg.resolution,
            seed: cfg.seed()?,
            label: label.to_string(),
            ..CommunityParams::default()
        },
    )
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

fn safe_name(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' }).collect()
}

/// Runs every stage. On failure the artifacts written so far keep their
/// `.partial` suffix and the error names the failing stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut out = Staging { dir, files: Vec::new() };

    let grid = stage("ingest", ingest(cfg, &cfg.rasters))?;
    out.write("nodes.csv", &grid.node_table_csv())?;

    let net = stage("build-net", build_gravity_network(&grid, &cfg.gravity))?;
    out.write("edges.tsv", &net.edge_list_tsv())?;

    let params = cfg.walk_params()?;
    let walks = stage("walk", simulate_walks(&net, &params))?;
    if cfg.write_walks {
        out.write("walks.txt", &walks.to_text(&params))?;
    }

    let features = stage("features", step_expectation_features_with(&walks, &grid, &cfg.features))?;
    out.write("features.csv", &features.to_csv())?;

    let mut survey_summary = None;
    let mut models = Vec::new();
    if let Some(path) = &cfg.survey {
        let joined = stage(
            "join",
            (|| {
                let load = load_survey_csv(path)?;
                let clusters = bin_households(&load.samples, cfg.bin_precision)?;
                let joined = join_to_nodes(&clusters, &grid, &features, cfg.radius, cfg.target)?;
                survey_summary = Some(SurveySummary {
                    households: load.samples.len(),
                    households_dropped: load.dropped,
                    clusters: clusters.len(),
                    joined: joined.samples.len(),
                    join_dropped: joined.dropped,
                });
                Ok(joined)
            })(),
        )?;
        out.write("joined.csv", &joined_csv(features.columns(), &joined.samples))?;

        let data = stage("fit", Dataset::from_joined(&joined.samples))?;
        let opts = cfg.harness_options()?;
        for spec in cfg.model_specs()? {
            let report = stage("fit", split_harness(&data, &spec, &opts))?;
            out.write(&format!("fit_{}.csv", report.model), &report.to_csv())?;
            out.write(&format!("predictions_{}.csv", report.model), &report.predictions_csv())?;
            models.push(ModelSummary {
                model: report.model.clone(),
                median_test_r2: report.median_test_r2,
                undefined_splits: report.undefined_splits,
                rank_deficient_fits: report.rank_deficient_fits,
                unconverged_fits: report.unconverged_fits,
            });
        }
    }

    let part = stage("communities", detect(cfg, &net, &cfg.label))?;
    let tag = safe_name(&cfg.label);
    out.write(&format!("partition_{tag}.csv"), &partition_csv(&part))?;
    out.write(&format!("communities_{tag}.geojson"), &stage("communities", communities_geojson(&grid, &part))?)?;

    // Snapshots are independent until tracking, so they run concurrently.
    let snaps = stage(
        "track",
        cfg.snapshots
            .par_iter()
            .map(|s| -> Result<(CoarseGrid, CommunityPartition)> {
                let g = ingest(cfg, &s.rasters)?;
                let n = build_gravity_network(&g, &cfg.gravity)?;
                let p = detect(cfg, &n, &s.label)?;
                Ok((g, p))
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    let mut snapshots = Vec::new();
    for (g, p) in &snaps {
        let t = safe_name(&p.label);
        out.write(&format!("partition_{t}.csv"), &partition_csv(p))?;
        out.write(&format!("communities_{t}.geojson"), &stage("track", communities_geojson(g, p))?)?;
        snapshots.push(SnapshotSummary {
            label: p.label.clone(),
            communities: p.community_count(),
            modularity: p.modularity,
        });
    }
    let mut transitions = Vec::new();
    for pair in snaps.windows(2) {
        let (a, b) = (&pair[0].1, &pair[1].1);
        let report = stage("track", track_communities(a, b, cfg.overlap_threshold))?;
        let name = format!("transitions_{}_{}", safe_name(&a.label), safe_name(&b.label));
        out.write(&format!("{name}.csv"), &report.to_csv())?;
        out.write(&format!("{name}.txt"), &report.to_table())?;
        let mut counts = [0; 5];
        for (slot, k) in counts.iter_mut().zip(EVENT_KINDS) {
            *slot = report.count(k);
        }
        transitions.push(TransitionSummary { from: a.label.clone(), to: b.label.clone(), counts });
    }

    let mut summary = RunSummary {
        label: cfg.label.clone(),
        seed,
        nodes: grid.node_count(),
        edges: net.edges().len(),
        rewired_edges: net.edges().iter().filter(|e| e.rewired).count(),
        walks: walks.node_count() * walks.walks_per_node(),
        feature_columns: features.n_cols(),
        survey: survey_summary,
        models,
        communities: part.community_count(),
        modularity: part.modularity,
        snapshots,
        transitions,
        files: Vec::new(),
    };
    let mut files = out.files.clone();
    files.push("summary.txt".into());
    files.push("summary.jsonl".into());
    summary.files = files;
    out.write("summary.txt", &summary.to_text())?;
    out.write("summary.jsonl", &summary.to_json_line())?;
    out.commit()?;
    Ok(summary)
}

/// Names of the artifacts a finished run leaves in `dir`.
pub fn list_outputs(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    v.sort();
    Ok(v)
}
