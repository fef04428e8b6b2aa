//! Modularity communities on gravity networks and their evolution across
//! yearly snapshots.

mod detect;
mod export;
mod tracking;

pub use detect::{detect_communities, detect_communities_with, CommunityParams};
pub use export::{communities_geojson, partition_csv, read_partition_csv};
pub use tracking::{track_communities, EventKind, TransitionEvent, TransitionReport, DEFAULT_OVERLAP_THRESHOLD};

use crate::error::{Error, Result};
use crate::gravity::GravityNetwork;

/// Node-to-community labeling for one snapshot. Community ids are contiguous
/// from 0 and numbered by first appearance in node order.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityPartition {
    pub label: String,
    pub assignment: Vec<usize>,
    /// Standard (resolution 1) modularity of the assignment.
    pub modularity: f64,
}

impl CommunityPartition {
    pub fn community_count(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    /// Members of every community, in node order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

/// Relabels to contiguous ids by order of first appearance.
pub fn canonical_labels(assignment: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    assignment
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

/// Weighted Newman modularity at resolution 1.
pub fn modularity(net: &GravityNetwork, assignment: &[usize]) -> Result<f64> {
    modularity_at(net, assignment, 1.0)
}

/// `Q = (1/2m) sum_ij [W_ij - gamma k_i k_j / 2m] delta(c_i, c_j)`, where `k`
/// is weighted degree, `m` total edge weight and `gamma` the resolution.
pub fn modularity_at(net: &GravityNetwork, assignment: &[usize], resolution: f64) -> Result<f64> {
    let n = net.node_count();
    if assignment.len() != n {
        return Err(Error::validation(format!("assignment covers {} nodes, network has {n}", assignment.len())));
    }
    let m = net.total_weight();
    if !(m > 0.0) {
        return Err(Error::domain("modularity is undefined for a network with zero total weight"));
    }
    let n_comm = assignment.iter().max().map_or(0, |c| c + 1);
    let mut internal = vec![0.0; n_comm];
    let mut total = vec![0.0; n_comm];
    for e in net.edges() {
        if assignment[e.src] == assignment[e.dst] {
            internal[assignment[e.src]] += e.weight;
        }
    }
    for v in 0..n {
        total[assignment[v]] += net.strength(v);
    }
    let two_m = 2.0 * m;
    let q: f64 = internal
        .iter()
        .zip(&total)
        .map(|(&inside, &tot)| 2.0 * inside / two_m - resolution * (tot / two_m).powi(2))
        .sum();
    Ok(q)
}
