//! Gravity network construction.
//!
//! Every pair of coarse cells `(i, j)` interacts with weight
//! `W = M_i * M_j / R^P`, where `M` is the cell log-intensity and `R` the
//! center distance normalized by the largest pairwise center distance. The
//! complete graph is sparsified by dropping edges below `tau`; any node left
//! with fewer than `k_rewire` links is then reconnected to its `k_rewire`
//! geographically nearest nodes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::real;
use crate::raster::CoarseGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityParams {
    /// Distance-decay exponent `P`.
    pub exponent: f64,
    /// Absolute weight threshold.
    pub tau: f64,
    /// Minimum degree restored by rewiring.
    pub k_rewire: usize,
}

impl Default for GravityParams {
    fn default() -> Self {
        GravityParams { exponent: 1.0, tau: 5.0, k_rewire: 3 }
    }
}

impl GravityParams {
    /// Checks the parameter invariants; `node_count` bounds `k_rewire`.
    pub fn validate(&self, node_count: usize) -> Result<()> {
        if !(self.exponent >= 0.0) || !self.exponent.is_finite() {
            return Err(Error::validation(format!("exponent P must be >= 0, got {}", self.exponent)));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::validation(format!("tau must be >= 0, got {}", self.tau)));
        }
        if self.k_rewire < 1 || self.k_rewire >= node_count {
            return Err(Error::validation(format!(
                "k_rewire must satisfy 1 <= K < node count ({node_count}), got {}",
                self.k_rewire
            )));
        }
        Ok(())
    }
}

/// Dense symmetric matrix with an unused diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    n: usize,
    values: Vec<f64>,
}

impl PairMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

fn euclid(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Pairwise center distances divided by the maximum pairwise distance.
pub fn normalized_distance(grid: &CoarseGrid) -> Result<PairMatrix> {
    let centers: Vec<(f64, f64)> = grid.cells().iter().map(|c| c.center).collect();
    normalized_distance_of(&centers)
}

fn normalized_distance_of(centers: &[(f64, f64)]) -> Result<PairMatrix> {
    let n = centers.len();
    if n < 2 {
        return Err(Error::validation("normalized distance needs at least two nodes"));
    }
    let mut values: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            if i == j {
                0.0
            } else {
                euclid(centers[i], centers[j])
            }
        })
        .collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::domain("all node centers coincide; distance normalization is undefined"));
    }
    values.par_iter_mut().for_each(|v| *v /= max);
    Ok(PairMatrix { n, values })
}

/// `M_i * M_j / R^P`.
pub fn gravity_weight(m_i: f64, m_j: f64, r: f64, exponent: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("normalized distance must be positive, got {r}")));
    }
    Ok(m_i * m_j / r.powf(exponent))
}

/// Complete pre-threshold weight matrix (diagonal zero).
pub fn gravity_weight_matrix(grid: &CoarseGrid, exponent: f64) -> Result<PairMatrix> {
    let r = normalized_distance(grid)?;
    let m = grid.log_intensities();
    weights_from(&r, &m, exponent)
}

fn weights_from(r: &PairMatrix, m: &[f64], exponent: f64) -> Result<PairMatrix> {
    let n = r.n;
    let values = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            if i == j {
                Ok(0.0)
            } else {
                gravity_weight(m[i], m[j], r.get(i, j), exponent)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PairMatrix { n, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkNode {
    pub node_id: usize,
    pub center: (f64, f64),
    pub log_intensity: f64,
}

/// Undirected edge stored once with `src < dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
    pub rewired: bool,
}

/// Undirected weighted graph over the coarse-grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityNetwork {
    nodes: Vec<NetworkNode>,
    edges: Vec<Edge>,
    // Neighbor lists sorted by node id.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl GravityNetwork {
    /// Assembles a network from explicit parts. Endpoints are normalized to
    /// `src < dst`; self-edges, duplicates and negative weights are rejected.
    pub fn from_parts(nodes: Vec<NetworkNode>, edges: Vec<Edge>) -> Result<Self> {
        for (i, n) in nodes.iter().enumerate() {
            if n.node_id != i {
                return Err(Error::validation(format!("node at position {i} has id {}", n.node_id)));
            }
        }
        let n = nodes.len();
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| {
                let (src, dst) = if e.src <= e.dst { (e.src, e.dst) } else { (e.dst, e.src) };
                Edge { src, dst, ..e }
            })
            .collect();
        edges.sort_by_key(|e| (e.src, e.dst));
        let mut adjacency = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            if e.src == e.dst {
                return Err(Error::validation(format!("self-edge on node {}", e.src)));
            }
            if e.dst >= n {
                return Err(Error::validation(format!("edge references unknown node {}", e.dst)));
            }
            if idx > 0 && (edges[idx - 1].src, edges[idx - 1].dst) == (e.src, e.dst) {
                return Err(Error::validation(format!("duplicate edge {}-{}", e.src, e.dst)));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::validation(format!("edge {}-{} has invalid weight {}", e.src, e.dst, e.weight)));
            }
            adjacency[e.src].push((e.dst, e.weight));
            adjacency[e.dst].push((e.src, e.weight));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(GravityNetwork { nodes, edges, adjacency })
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |&(v, _)| v).ok().map(|i| list[i].1)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_weight(a, b).is_some()
    }

    /// Sum of incident edge weights.
    pub fn strength(&self, v: usize) -> f64 {
        self.adjacency[v].iter().map(|&(_, w)| w).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// TSV edge list: `src\tdst\tweight\trewired`, one row per unordered pair.
    pub fn edge_list_tsv(&self) -> String {
        let mut out = String::from("src\tdst\tweight\trewired\n");
        for e in &self.edges {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", e.src, e.dst, real(e.weight), u8::from(e.rewired));
        }
        out
    }

    /// Rebuilds a network from a node table grid and an edge-list file.
    pub fn read_edge_list(grid: &CoarseGrid, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some("src\tdst\tweight\trewired") {
            return Err(Error::parse(path, 1, "edge list header must be `src\\tdst\\tweight\\trewired`"));
        }
        let mut edges = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(path, lineno, format!("expected 4 fields, got {}", fields.len())));
            }
            let bad = |what: &str| Error::parse(path, lineno, format!("bad {what}"));
            let src: usize = fields[0].parse().map_err(|_| bad("src"))?;
            let dst: usize = fields[1].parse().map_err(|_| bad("dst"))?;
            let weight: f64 = fields[2].parse().map_err(|_| bad("weight"))?;
            let rewired = match fields[3].trim() {
                "0" => false,
                "1" => true,
                _ => return Err(bad("rewired flag")),
            };
            edges.push(Edge { src, dst, weight, rewired });
        }
        GravityNetwork::from_parts(nodes_of(grid), edges)
    }
}

fn nodes_of(grid: &CoarseGrid) -> Vec<NetworkNode> {
    grid.cells()
        .iter()
        .map(|c| NetworkNode { node_id: c.node_id, center: c.center, log_intensity: c.log_intensity })
        .collect()
}

/// Builds the sparsified, rewired gravity network.
pub fn build_gravity_network(grid: &CoarseGrid, params: &GravityParams) -> Result<GravityNetwork> {
    let n = grid.node_count();
    params.validate(n)?;
    let distances = normalized_distance(grid)?;
    let weights = weights_from(&distances, &grid.log_intensities(), params.exponent)?;

    let mut edges: Vec<Edge> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let row = weights.row(i);
            (i + 1..n).filter(move |&j| row[j] >= params.tau).map(move |j| Edge {
                src: i,
                dst: j,
                weight: row[j],
                rewired: false,
            })
        })
        .collect();

    let mut degree = vec![0usize; n];
    let mut connected = std::collections::HashSet::with_capacity(edges.len());
    for e in &edges {
        degree[e.src] += 1;
        degree[e.dst] += 1;
        connected.insert((e.src, e.dst));
    }

    // Under-connected set is fixed after thresholding, so the result does not
    // depend on the order in which nodes are rewired.
    let under: Vec<usize> = (0..n).filter(|&v| degree[v] < params.k_rewire).collect();
    for v in under {
        let row = distances.row(v);
        let mut others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
        others.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        for &u in others.iter().take(params.k_rewire) {
            let key = (v.min(u), v.max(u));
            if connected.insert(key) {
                edges.push(Edge { src: key.0, dst: key.1, weight: weights.get(key.0, key.1), rewired: true });
            }
        }
    }

    GravityNetwork::from_parts(nodes_of(grid), edges)
}
