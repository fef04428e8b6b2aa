//! Step-expectation features: for each start node, the mean intensity seen at
//! each step `1..=L` of its walks.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::real;
use crate::raster::CoarseGrid;
use crate::walk::WalkSet;

/// Which per-cell quantity replaces node ids in the walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntensitySource {
    /// `M = log(I + 1)`.
    #[default]
    Log,
    /// Raw total intensity `I`.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FeatureOptions {
    pub source: IntensitySource,
    /// Prepend the start node's own intensity as an `origin` column.
    pub include_origin: bool,
}

fn lookup(grid: &CoarseGrid, source: IntensitySource) -> Vec<f64> {
    match source {
        IntensitySource::Log => grid.log_intensities(),
        IntensitySource::Raw => grid.total_intensities(),
    }
}

fn check_ids(walks: &WalkSet, grid: &CoarseGrid) -> Result<()> {
    let n = grid.node_count();
    if walks.node_count() > n {
        return Err(Error::validation(format!("walks start from {} nodes but the grid has {n}", walks.node_count())));
    }
    if let Some(bad) = walks.iter().flatten().find(|&&v| v >= n) {
        return Err(Error::validation(format!("walk visits unknown node {bad}")));
    }
    Ok(())
}

/// Replaces each node id with its intensity, positionally.
pub fn intensity_walks(walks: &WalkSet, grid: &CoarseGrid, source: IntensitySource) -> Result<Vec<Vec<f64>>> {
    check_ids(walks, grid)?;
    let values = lookup(grid, source);
    Ok(walks.iter().map(|w| w.iter().map(|&v| values[v]).collect()).collect())
}

/// Per-node feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    columns: Vec<String>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(columns: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let width = columns.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::validation(format!("row {k} has {} values, expected {width}", row.len())));
            }
            values.extend_from_slice(row);
        }
        Ok(FeatureMatrix { columns, values })
    }

    pub fn n_rows(&self) -> usize {
        if self.columns.is_empty() {
            0
        } else {
            self.values.len() / self.columns.len()
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.columns.len();
        &self.values[k * w..(k + 1) * w]
    }

    pub fn get(&self, k: usize, col: usize) -> f64 {
        self.row(k)[col]
    }

    /// CSV with header `node_id,<columns>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for k in 0..self.n_rows() {
            let _ = write!(out, "{k}");
            for &v in self.row(k) {
                let _ = write!(out, ",{}", real(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
        if headers.get(0) != Some("node_id") || headers.len() < 2 {
            return Err(Error::parse(path, 1, "feature CSV header must start with `node_id`"));
        }
        let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let lineno = i + 2;
            let id: usize =
                rec[0].parse().map_err(|_| Error::parse(path, lineno, format!("bad node_id `{}`", &rec[0])))?;
            if id != i {
                return Err(Error::parse(path, lineno, format!("expected node_id {i}, got {id}")));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(path, lineno, "bad feature value"))?;
            rows.push(row);
        }
        FeatureMatrix::from_rows(columns, &rows)
    }
}

/// Default features: log-intensity, steps `1..=L`, no origin column.
pub fn step_expectation_features(walks: &WalkSet, grid: &CoarseGrid) -> Result<FeatureMatrix> {
    step_expectation_features_with(walks, grid, &FeatureOptions::default())
}

pub fn step_expectation_features_with(
    walks: &WalkSet,
    grid: &CoarseGrid,
    opts: &FeatureOptions,
) -> Result<FeatureMatrix> {
    check_ids(walks, grid)?;
    let values = lookup(grid, opts.source);
    let steps = walks.walk_length();
    let per_walk = walks.walks_per_node() as f64;

    let rows: Vec<Vec<f64>> = (0..walks.node_count())
        .into_par_iter()
        .map(|k| {
            let mut sums = vec![0.0; steps];
            for walk in walks.walks_from(k) {
                for (slot, &v) in sums.iter_mut().zip(&walk[1..]) {
                    *slot += values[v];
                }
            }
            let means = sums.into_iter().map(|s| s / per_walk);
            if opts.include_origin {
                std::iter::once(values[k]).chain(means).collect()
            } else {
                means.collect()
            }
        })
        .collect();

    let mut columns: Vec<String> = (1..=steps).map(|i| format!("step_{i}")).collect();
    if opts.include_origin {
        columns.insert(0, "origin".to_string());
    }
    FeatureMatrix::from_rows(columns, &rows)
}
