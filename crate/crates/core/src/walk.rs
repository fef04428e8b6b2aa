//! Second-order biased random walks (node2vec scheme).
//!
//! The first step from a start node is weight-proportional. Every later step
//! from `cur`, having arrived from `prev`, scores neighbor `x` with
//! `alpha * W(cur, x)` where `alpha` is `1/p` for `x == prev`, `1` when `x` is
//! also adjacent to `prev`, and `1/q` otherwise.
//!
//! When every candidate weight is zero (dark nodes joined only by rewired
//! edges) the weights are treated as uniform so the walk can still leave.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gravity::GravityNetwork;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    /// Return parameter `p`.
    pub return_p: f64,
    /// In-out parameter `q`.
    pub in_out_q: f64,
    /// Steps per walk, `L`.
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams { return_p: 1.0, in_out_q: 0.5, walk_length: 20, walks_per_node: 100, seed: 0 }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.return_p > 0.0) || !self.return_p.is_finite() {
            return Err(Error::validation(format!("p must be > 0, got {}", self.return_p)));
        }
        if !(self.in_out_q > 0.0) || !self.in_out_q.is_finite() {
            return Err(Error::validation(format!("q must be > 0, got {}", self.in_out_q)));
        }
        if self.walk_length < 1 {
            return Err(Error::validation("walk length must be >= 1"));
        }
        if self.walks_per_node < 1 {
            return Err(Error::validation("walks per node must be >= 1"));
        }
        Ok(())
    }
}

fn neighbors_checked(net: &GravityNetwork, v: usize) -> Result<&[(usize, f64)]> {
    if v >= net.node_count() {
        return Err(Error::validation(format!("unknown node {v}")));
    }
    let nbrs = net.neighbors(v);
    if nbrs.is_empty() {
        return Err(Error::domain(format!("node {v} is isolated; the network violates the degree floor")));
    }
    Ok(nbrs)
}

/// Unnormalized first-step scores aligned with `net.neighbors(v)`.
fn first_scores(nbrs: &[(usize, f64)], out: &mut Vec<f64>) {
    out.clear();
    out.extend(nbrs.iter().map(|&(_, w)| w));
    if out.iter().all(|&w| w == 0.0) {
        out.iter_mut().for_each(|w| *w = 1.0);
    }
}

/// Unnormalized second-step scores aligned with `net.neighbors(cur)`.
fn second_scores(net: &GravityNetwork, prev: usize, cur: usize, inv_p: f64, inv_q: f64, out: &mut Vec<f64>) {
    let nbrs = net.neighbors(cur);
    let prev_nbrs = net.neighbors(prev);
    let uniform = nbrs.iter().all(|&(_, w)| w == 0.0);
    out.clear();
    // Both lists are sorted by id, so adjacency to `prev` is a merge walk.
    let mut j = 0;
    for &(x, w) in nbrs {
        let w = if uniform { 1.0 } else { w };
        let alpha = if x == prev {
            inv_p
        } else {
            while j < prev_nbrs.len() && prev_nbrs[j].0 < x {
                j += 1;
            }
            if j < prev_nbrs.len() && prev_nbrs[j].0 == x {
                1.0
            } else {
                inv_q
            }
        };
        out.push(alpha * w);
    }
}

fn normalized(nbrs: &[(usize, f64)], scores: &[f64]) -> Vec<(usize, f64)> {
    let total: f64 = scores.iter().sum();
    nbrs.iter().zip(scores).map(|(&(x, _), &s)| (x, s / total)).collect()
}

/// Weight-proportional distribution over the neighbors of `v`.
pub fn first_step_distribution(net: &GravityNetwork, v: usize) -> Result<Vec<(usize, f64)>> {
    let nbrs = neighbors_checked(net, v)?;
    let mut scores = Vec::with_capacity(nbrs.len());
    first_scores(nbrs, &mut scores);
    Ok(normalized(nbrs, &scores))
}

/// Biased distribution over the neighbors of `cur` after arriving from `prev`.
pub fn second_step_distribution(
    net: &GravityNetwork,
    prev: usize,
    cur: usize,
    params: &WalkParams,
) -> Result<Vec<(usize, f64)>> {
    let nbrs = neighbors_checked(net, cur)?;
    if prev >= net.node_count() || !net.has_edge(prev, cur) {
        return Err(Error::domain(format!("({prev}, {cur}) is not an edge of the network")));
    }
    let mut scores = Vec::with_capacity(nbrs.len());
    second_scores(net, prev, cur, 1.0 / params.return_p, 1.0 / params.in_out_q, &mut scores);
    Ok(normalized(nbrs, &scores))
}

fn sample_index<R: Rng>(rng: &mut R, scores: &[f64]) -> usize {
    let total: f64 = scores.iter().sum();
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > 0.0 {
            acc += s;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// All walks, grouped by start node then walk index. Each walk holds the
/// origin followed by `walk_length` steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkSet {
    node_count: usize,
    walk_length: usize,
    walks_per_node: usize,
    steps: Vec<usize>,
}

impl WalkSet {
    pub fn from_walks(walk_length: usize, walks_per_node: usize, walks: Vec<Vec<usize>>) -> Result<Self> {
        if walk_length == 0 || walks_per_node == 0 {
            return Err(Error::validation("walk length and walks per node must be >= 1"));
        }
        if !walks.len().is_multiple_of(walks_per_node) {
            return Err(Error::validation(format!(
                "{} walks is not a multiple of {walks_per_node} walks per node",
                walks.len()
            )));
        }
        let node_count = walks.len() / walks_per_node;
        let mut steps = Vec::with_capacity(walks.len() * (walk_length + 1));
        for (i, w) in walks.iter().enumerate() {
            if w.len() != walk_length + 1 {
                return Err(Error::validation(format!(
                    "walk {i} has {} positions, expected {}",
                    w.len(),
                    walk_length + 1
                )));
            }
            let start = i / walks_per_node;
            if w[0] != start {
                return Err(Error::validation(format!("walk {i} starts at {} instead of {start}", w[0])));
            }
            steps.extend_from_slice(w);
        }
        Ok(WalkSet { node_count, walk_length, walks_per_node, steps })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn walk_length(&self) -> usize {
        self.walk_length
    }

    pub fn walks_per_node(&self) -> usize {
        self.walks_per_node
    }

    /// Walk `w` from start node `k`.
    pub fn walk(&self, k: usize, w: usize) -> &[usize] {
        let stride = self.walk_length + 1;
        let idx = k * self.walks_per_node + w;
        &self.steps[idx * stride..(idx + 1) * stride]
    }

    pub fn walks_from(&self, k: usize) -> impl Iterator<Item = &[usize]> {
        (0..self.walks_per_node).map(move |w| self.walk(k, w))
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.steps.chunks(self.walk_length + 1)
    }

    /// Walk dump with a `#params` header line.
    pub fn to_text(&self, params: &WalkParams) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#params p={} q={} L={} n={} seed={}",
            params.return_p, params.in_out_q, self.walk_length, self.walks_per_node, params.seed
        );
        for walk in self.iter() {
            let line: Vec<String> = walk.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<(WalkParams, WalkSet)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let body = header
            .strip_prefix("#params")
            .ok_or_else(|| Error::parse(path, 1, "walk dump must start with a `#params` line"))?;
        let mut params = WalkParams::default();
        for kv in body.split_whitespace() {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| Error::parse(path, 1, format!("malformed parameter `{kv}`")))?;
            let bad = || Error::parse(path, 1, format!("bad value for `{k}`"));
            match k {
                "p" => params.return_p = v.parse().map_err(|_| bad())?,
                "q" => params.in_out_q = v.parse().map_err(|_| bad())?,
                "L" => params.walk_length = v.parse().map_err(|_| bad())?,
                "n" => params.walks_per_node = v.parse().map_err(|_| bad())?,
                "seed" => params.seed = v.parse().map_err(|_| bad())?,
                _ => return Err(Error::parse(path, 1, format!("unknown parameter `{k}`"))),
            }
        }
        let mut walks = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let walk = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(path, i + 2, "bad node id"))?;
            walks.push(walk);
        }
        let set = WalkSet::from_walks(params.walk_length, params.walks_per_node, walks)
            .map_err(|e| Error::parse(path, 1, e.to_string()))?;
        Ok((params, set))
    }
}

/// Simulates `walks_per_node` walks from every node. Walk `w` from node `k`
/// draws from its own stream keyed by `(seed, k, w)`, so the result is
/// identical however the work is scheduled.
pub fn simulate_walks(net: &GravityNetwork, params: &WalkParams) -> Result<WalkSet> {
    params.validate()?;
    for v in 0..net.node_count() {
        neighbors_checked(net, v)?;
    }
    let inv_p = 1.0 / params.return_p;
    let inv_q = 1.0 / params.in_out_q;
    let stride = params.walk_length + 1;

    let per_node: Vec<Vec<usize>> = (0..net.node_count())
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::with_capacity(params.walks_per_node * stride);
            let mut scores = Vec::new();
            for w in 0..params.walks_per_node {
                let mut rng = stream(params.seed, k as u64, w as u64);
                out.push(k);
                let nbrs = net.neighbors(k);
                first_scores(nbrs, &mut scores);
                let mut prev = k;
                let mut cur = nbrs[sample_index(&mut rng, &scores)].0;
                out.push(cur);
                for _ in 1..params.walk_length {
                    second_scores(net, prev, cur, inv_p, inv_q, &mut scores);
                    let next = net.neighbors(cur)[sample_index(&mut rng, &scores)].0;
                    prev = cur;
                    cur = next;
                    out.push(cur);
                }
            }
            out
        })
        .collect();

    Ok(WalkSet {
        node_count: net.node_count(),
        walk_length: params.walk_length,
        walks_per_node: params.walks_per_node,
        steps: per_node.concat(),
    })
}
