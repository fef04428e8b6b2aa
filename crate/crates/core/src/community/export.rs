use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use super::{canonical_labels, CommunityPartition};
use crate::error::{Error, Result};
use crate::raster::CoarseGrid;

/// `node_id,community_id` rows.
pub fn partition_csv(part: &CommunityPartition) -> String {
    let mut out = String::from("node_id,community_id\n");
    for (node, c) in part.assignment.iter().enumerate() {
        let _ = writeln!(out, "{node},{c}");
    }
    out
}

/// Reads a partition CSV. Ids are canonicalized; modularity is not stored in
/// the file and comes back as `NaN`.
pub fn read_partition_csv(path: impl AsRef<Path>, label: &str) -> Result<CommunityPartition> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["node_id", "community_id"] {
        return Err(Error::parse(path, 1, "partition header must be `node_id,community_id`"));
    }
    let mut assignment = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let lineno = i + 2;
        let node: usize = rec[0].parse().map_err(|_| Error::parse(path, lineno, "bad node_id"))?;
        if node != i {
            return Err(Error::parse(path, lineno, format!("expected node_id {i}, got {node}")));
        }
        assignment.push(rec[1].parse().map_err(|_| Error::parse(path, lineno, "bad community_id"))?);
    }
    Ok(CommunityPartition { label: label.to_string(), assignment: canonical_labels(&assignment), modularity: f64::NAN })
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78",
];

/// One polygon per grid cell, with `node_id`, `community_id` and a `fill` colour.
pub fn communities_geojson(grid: &CoarseGrid, part: &CommunityPartition) -> Result<String> {
    if grid.node_count() != part.assignment.len() {
        return Err(Error::validation(format!(
            "grid has {} cells, partition covers {}",
            grid.node_count(),
            part.assignment.len()
        )));
    }
    let features: Vec<Value> = grid
        .cells()
        .iter()
        .map(|cell| {
            let b = grid.cell_bounds(cell.node_id);
            let c = part.assignment[cell.node_id];
            json!({
                "type": "Feature",
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[
                        [b.min_lon, b.min_lat],
                        [b.max_lon, b.min_lat],
                        [b.max_lon, b.max_lat],
                        [b.min_lon, b.max_lat],
                        [b.min_lon, b.min_lat]
                    ]]
                },
                "properties": {
                    "node_id": cell.node_id,
                    "community_id": c,
                    "fill": PALETTE[c % PALETTE.len()],
                    "M": cell.log_intensity
                }
            })
        })
        .collect();
    let doc = json!({
        "type": "FeatureCollection",
        "properties": { "snapshot": part.label, "modularity": if part.modularity.is_finite() { json!(part.modularity) } else { Value::Null } },
        "features": features
    });
    Ok(serde_json::to_string(&doc).expect("GeoJSON value serializes"))
}
