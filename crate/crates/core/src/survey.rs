//! Household survey ingestion, binning into clusters, and the spatial join of
//! clusters onto grid nodes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::fmt::real;
use crate::raster::CoarseGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurveySample {
    pub lon: f64,
    pub lat: f64,
    pub consumption: f64,
    pub year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurveyLoad {
    pub samples: Vec<SurveySample>,
    /// Rows discarded for missing/negative consumption or bad coordinates.
    pub dropped: usize,
}

/// Reads a survey CSV with header `lon,lat,consumption[,year]`.
pub fn load_survey_csv(path: impl AsRef<Path>) -> Result<SurveyLoad> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(lon_c), Some(lat_c), Some(cons_c)) = (col("lon"), col("lat"), col("consumption")) else {
        return Err(Error::parse(path, 1, "survey CSV header must contain `lon,lat,consumption`"));
    };
    let year_c = col("year");

    let mut out = SurveyLoad::default();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let num = |c: usize| rec.get(c).and_then(|t| t.trim().parse::<f64>().ok());
        let (Some(lon), Some(lat), Some(consumption)) = (num(lon_c), num(lat_c), num(cons_c)) else {
            out.dropped += 1;
            continue;
        };
        if !lon.is_finite() || !lat.is_finite() || !(consumption >= 0.0) || !consumption.is_finite() {
            out.dropped += 1;
            continue;
        }
        let year = year_c
            .and_then(|c| rec.get(c))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .and_then(|t| t.parse::<i32>().ok());
        out.samples.push(SurveySample { lon, lat, consumption, year });
    }
    Ok(out)
}

pub fn survey_csv(samples: &[SurveySample]) -> String {
    let mut out = String::from("lon,lat,consumption,year\n");
    for s in samples {
        let year = s.year.map(|y| y.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", real(s.lon), real(s.lat), real(s.consumption), year);
    }
    out
}

/// A group of co-located households.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub cluster_id: usize,
    pub lon: f64,
    pub lat: f64,
    /// Mean member consumption.
    pub consumption: f64,
    pub members: usize,
    pub year: Option<i32>,
}

/// Groups samples whose coordinates round to the same lattice point at
/// `bin_precision` degrees (and share a survey year). Cluster ids follow the
/// sorted `(year, lon, lat)` lattice key.
pub fn bin_households(samples: &[SurveySample], bin_precision: f64) -> Result<Vec<Cluster>> {
    if !(bin_precision > 0.0) || !bin_precision.is_finite() {
        return Err(Error::validation(format!("bin precision must be > 0, got {bin_precision}")));
    }
    let mut bins: BTreeMap<(Option<i32>, i64, i64), Vec<&SurveySample>> = BTreeMap::new();
    for s in samples {
        let key = (s.year, (s.lon / bin_precision).round() as i64, (s.lat / bin_precision).round() as i64);
        bins.entry(key).or_default().push(s);
    }
    Ok(bins
        .into_iter()
        .enumerate()
        .map(|(cluster_id, ((year, _, _), members))| {
            let n = members.len() as f64;
            let mean = |f: fn(&SurveySample) -> f64| members.iter().map(|s| f(s)).sum::<f64>() / n;
            Cluster {
                cluster_id,
                lon: mean(|s| s.lon),
                lat: mean(|s| s.lat),
                consumption: mean(|s| s.consumption),
                members: members.len(),
                year,
            }
        })
        .collect())
}

/// Optional transform applied to the cluster consumption before regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetTransform {
    #[default]
    Raw,
    /// `ln(1 + consumption)`.
    Log,
}

impl TargetTransform {
    pub fn apply(&self, consumption: f64) -> f64 {
        match self {
            TargetTransform::Raw => consumption,
            TargetTransform::Log => consumption.ln_1p(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinedSample {
    pub cluster_id: usize,
    pub node_id: usize,
    pub features: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JoinResult {
    pub samples: Vec<JoinedSample>,
    /// Clusters with no node center within the radius.
    pub dropped: usize,
}

fn manhattan(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

/// Nearest node (Manhattan distance on degrees) within `radius`; distances
/// equal within 1e-12 resolve to the lower node id.
pub fn nearest_node(grid: &CoarseGrid, lon: f64, lat: f64, radius: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for cell in grid.cells() {
        let d = manhattan((lon, lat), cell.center);
        if d > radius {
            continue;
        }
        match best {
            Some((_, bd)) if d >= bd - 1e-12 => {}
            _ => best = Some((cell.node_id, d)),
        }
    }
    best.map(|(id, _)| id)
}

/// Joins each cluster to its nearest node within `radius` degrees.
pub fn join_to_nodes(
    clusters: &[Cluster],
    grid: &CoarseGrid,
    features: &FeatureMatrix,
    radius: f64,
    transform: TargetTransform,
) -> Result<JoinResult> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::validation(format!("join radius must be > 0, got {radius}")));
    }
    if features.n_rows() != grid.node_count() {
        return Err(Error::validation(format!(
            "feature matrix has {} rows but the grid has {} nodes",
            features.n_rows(),
            grid.node_count()
        )));
    }
    let mut out = JoinResult::default();
    for c in clusters {
        match nearest_node(grid, c.lon, c.lat, radius) {
            Some(node_id) => out.samples.push(JoinedSample {
                cluster_id: c.cluster_id,
                node_id,
                features: features.row(node_id).to_vec(),
                target: transform.apply(c.consumption),
            }),
            None => out.dropped += 1,
        }
    }
    Ok(out)
}

/// Joined dataset CSV: `cluster_id,node_id,target,<feature columns>`.
pub fn joined_csv(columns: &[String], samples: &[JoinedSample]) -> String {
    let mut out = String::from("cluster_id,node_id,target");
    for c in columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for s in samples {
        let _ = write!(out, "{},{},{}", s.cluster_id, s.node_id, real(s.target));
        for &v in &s.features {
            let _ = write!(out, ",{}", real(v));
        }
        out.push('\n');
    }
    out
}

pub fn read_joined_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<JoinedSample>)> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().take(3).collect::<Vec<_>>() != ["cluster_id", "node_id", "target"] {
        return Err(Error::parse(path, 1, "joined CSV header must start with `cluster_id,node_id,target`"));
    }
    let columns: Vec<String> = headers.iter().skip(3).map(str::to_string).collect();
    let mut samples = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let lineno = i + 2;
        let bad = |what: &str| Error::parse(path, lineno, format!("bad {what}"));
        let cluster_id = rec[0].parse().map_err(|_| bad("cluster_id"))?;
        let node_id = rec[1].parse().map_err(|_| bad("node_id"))?;
        let target = rec[2].parse().map_err(|_| bad("target"))?;
        let features = rec
            .iter()
            .skip(3)
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("feature value"))?;
        samples.push(JoinedSample { cluster_id, node_id, features, target });
    }
    Ok((columns, samples))
}
