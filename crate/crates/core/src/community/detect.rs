//! Greedy modularity maximization: single-node local moves followed by
//! aggregation of communities into super-nodes, repeated until no move helps.
//! The result is then polished on the original graph by alternating
//! whole-community merges with single-node moves, so the returned partition
//! cannot be improved by moving any one node, and short sequences of moves
//! that dip before climbing are tried as well. Several runs with different
//! visit orders are made and the best one kept.

use std::collections::HashMap;

use rand::seq::SliceRandom;

use super::{canonical_labels, modularity, modularity_at, CommunityPartition};
use crate::error::{Error, Result};
use crate::gravity::GravityNetwork;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityParams {
    /// Multiplier on the null-model term; values above 1 favour smaller communities.
    pub resolution: f64,
    pub seed: u64,
    /// Independent runs; the first visits nodes in id order, the rest in
    /// seeded random orders. The highest-modularity result is kept.
    pub restarts: usize,
    pub label: String,
}

impl Default for CommunityParams {
    fn default() -> Self {
        CommunityParams { resolution: 1.0, seed: 0, restarts: 8, label: String::new() }
    }
}

/// Undirected weighted graph with explicit self-loop mass. `self_loop[i]`
/// counts the loop in both directions, so `degree[i]` is the row sum.
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
}

impl LevelGraph {
    fn from_network(net: &GravityNetwork) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = (0..net.node_count()).map(|v| net.neighbors(v).to_vec()).collect();
        let degree = (0..net.node_count()).map(|v| net.strength(v)).collect();
        LevelGraph { adj, degree }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn aggregate(&self, comm: &[usize], n_comm: usize) -> LevelGraph {
        let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n_comm];
        let mut self_loop = vec![0.0; n_comm];
        for (i, nbrs) in self.adj.iter().enumerate() {
            let ci = comm[i];
            let loop_here = self.degree[i] - nbrs.iter().map(|&(_, w)| w).sum::<f64>();
            self_loop[ci] += loop_here;
            for &(j, w) in nbrs {
                let cj = comm[j];
                if ci == cj {
                    self_loop[ci] += w;
                } else {
                    *maps[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj: Vec<Vec<(usize, f64)>> = maps
            .into_iter()
            .map(|m| {
                let mut v: Vec<(usize, f64)> = m.into_iter().collect();
                v.sort_by_key(|&(c, _)| c);
                v
            })
            .collect();
        let degree =
            adj.iter().zip(&self_loop).map(|(nbrs, &l)| l + nbrs.iter().map(|&(_, w)| w).sum::<f64>()).collect();
        LevelGraph { adj, degree }
    }
}

/// Moves nodes one at a time to the neighbouring (or a fresh) community with
/// the largest strictly positive modularity gain. Returns whether anything moved.
fn local_moves(g: &LevelGraph, comm: &mut [usize], resolution: f64, order: &[usize]) -> bool {
    let n = g.len();
    let two_m: f64 = g.degree.iter().sum();
    if two_m <= 0.0 {
        return false;
    }
    let eps = 1e-12 * two_m.max(1.0);
    let mut tot = vec![0.0; n];
    let mut size = vec![0usize; n];
    for i in 0..n {
        tot[comm[i]] += g.degree[i];
        size[comm[i]] += 1;
    }
    let mut free: Vec<usize> = (0..n).rev().filter(|&c| size[c] == 0).collect();
    let mut link = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;

    loop {
        let mut moved = false;
        for &i in order {
            let ci = comm[i];
            let ki = g.degree[i];
            for &(j, w) in &g.adj[i] {
                let cj = comm[j];
                if !seen[cj] {
                    seen[cj] = true;
                    touched.push(cj);
                }
                link[cj] += w;
            }
            tot[ci] -= ki;
            size[ci] -= 1;

            let gain = |c: usize, link_c: f64| link_c - resolution * tot[c] * ki / two_m;
            let stay = gain(ci, link[ci]);
            let mut best = ci;
            let mut best_gain = stay;
            touched.sort_unstable();
            for &c in &touched {
                if c == ci {
                    continue;
                }
                let gc = gain(c, link[c]);
                if gc > best_gain + eps {
                    best = c;
                    best_gain = gc;
                }
            }
            // A fresh singleton has gain 0.
            if size[ci] > 0 && 0.0 > best_gain + eps {
                while let Some(&c) = free.last() {
                    if size[c] == 0 && c != ci {
                        break;
                    }
                    free.pop();
                }
                if let Some(c) = free.pop() {
                    best = c;
                }
            }

            tot[best] += ki;
            size[best] += 1;
            if size[ci] == 0 {
                free.push(ci);
            }
            if best != ci {
                comm[i] = best;
                moved = true;
            }
            for &c in &touched {
                link[c] = 0.0;
                seen[c] = false;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        any_move = true;
    }
    any_move
}

fn visit_order(n: usize, params: &CommunityParams, restart: u64, level: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if restart > 0 {
        order.shuffle(&mut stream(params.seed, restart, level));
    }
    order
}

/// Merges the pair of communities with the largest positive gain until no
/// merge helps. Returns whether anything merged.
fn merge_pass(g: &LevelGraph, comm: &mut [usize], resolution: f64) -> bool {
    let two_m: f64 = g.degree.iter().sum();
    let eps = 1e-12 * two_m.max(1.0);
    let mut any = false;
    loop {
        let labels = canonical_labels(comm);
        comm.copy_from_slice(&labels);
        let c = labels.iter().max().map_or(0, |m| m + 1);
        let mut tot = vec![0.0; c];
        let mut links: HashMap<(usize, usize), f64> = HashMap::new();
        for (i, nbrs) in g.adj.iter().enumerate() {
            tot[comm[i]] += g.degree[i];
            for &(j, w) in nbrs {
                let (a, b) = (comm[i], comm[j]);
                if a < b {
                    *links.entry((a, b)).or_insert(0.0) += w;
                }
            }
        }
        let mut pairs: Vec<((usize, usize), f64)> = links.into_iter().collect();
        pairs.sort_by_key(|&(k, _)| k);
        let mut best: Option<((usize, usize), f64)> = None;
        for ((a, b), l) in pairs {
            let gain = 2.0 * l - 2.0 * resolution * tot[a] * tot[b] / two_m;
            if gain > best.map_or(eps, |(_, g)| g + eps) {
                best = Some(((a, b), gain));
            }
        }
        let Some(((a, b), _)) = best else { return any };
        for x in comm.iter_mut() {
            if *x == b {
                *x = a;
            }
        }
        any = true;
    }
}

/// Longest move sequence tried by one vertex-mover pass.
const MOVER_STEPS: usize = 32;

/// Kernighan-Lin style pass: repeatedly applies the best single-node move
/// among nodes not yet moved, even when it lowers modularity, then keeps the
/// best prefix of the sequence. Lets the search leave a local maximum.
/// Returns whether the partition improved.
fn vertex_mover(g: &LevelGraph, comm: &mut [usize], resolution: f64) -> bool {
    let n = g.len();
    let two_m: f64 = g.degree.iter().sum();
    if two_m <= 0.0 || n < 2 {
        return false;
    }
    let eps = 1e-12 * two_m.max(1.0);
    let start = comm.to_vec();
    let mut tot = vec![0.0; n];
    let mut size = vec![0usize; n];
    for i in 0..n {
        tot[comm[i]] += g.degree[i];
        size[comm[i]] += 1;
    }
    let mut moved = vec![false; n];
    let mut history: Vec<(usize, usize)> = Vec::new();
    let (mut acc, mut best_acc, mut best_len) = (0.0, 0.0, 0);
    let mut link: HashMap<usize, f64> = HashMap::new();

    for _ in 0..MOVER_STEPS.min(n) {
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in (0..n).filter(|&i| !moved[i]) {
            let ci = comm[i];
            let ki = g.degree[i];
            link.clear();
            for &(j, w) in &g.adj[i] {
                if j != i {
                    *link.entry(comm[j]).or_insert(0.0) += w;
                }
            }
            let gain = |l: f64, t: f64| l - resolution * t * ki / two_m;
            let stay = gain(link.get(&ci).copied().unwrap_or(0.0), tot[ci] - ki);
            let mut targets: Vec<(usize, f64)> =
                link.iter().filter(|&(&c, _)| c != ci).map(|(&c, &l)| (c, l)).collect();
            targets.sort_by_key(|&(c, _)| c);
            let mut cands: Vec<(usize, f64)> = targets.into_iter().map(|(c, l)| (c, gain(l, tot[c]) - stay)).collect();
            if size[ci] > 1 {
                cands.push((usize::MAX, -stay));
            }
            for (c, d) in cands {
                if pick.is_none_or(|(bd, _, _)| d > bd + eps) {
                    pick = Some((d, i, c));
                }
            }
        }
        let Some((d, i, mut c)) = pick else { break };
        if c == usize::MAX {
            c = (0..n).find(|&x| size[x] == 0).expect("a free label exists");
        }
        let ci = comm[i];
        tot[ci] -= g.degree[i];
        size[ci] -= 1;
        tot[c] += g.degree[i];
        size[c] += 1;
        comm[i] = c;
        moved[i] = true;
        history.push((i, ci));
        acc += d;
        if acc > best_acc + eps {
            best_acc = acc;
            best_len = history.len();
        }
    }
    for &(i, from) in history[best_len..].iter().rev() {
        comm[i] = from;
    }
    if best_len == 0 {
        comm.copy_from_slice(&start);
        return false;
    }
    true
}

fn single_run(net: &GravityNetwork, base: &LevelGraph, params: &CommunityParams, restart: u64) -> Vec<usize> {
    let n = base.len();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut graph = LevelGraph::from_network(net);
    let mut level = 0u64;

    loop {
        let mut comm: Vec<usize> = (0..graph.len()).collect();
        let order = visit_order(graph.len(), params, restart, level);
        let moved = local_moves(&graph, &mut comm, params.resolution, &order);
        let comm = canonical_labels(&comm);
        let n_comm = comm.iter().max().map_or(0, |c| c + 1);
        for m in membership.iter_mut() {
            *m = comm[*m];
        }
        if !moved || n_comm == graph.len() {
            break;
        }
        graph = graph.aggregate(&comm, n_comm);
        level += 1;
    }

    // Alternate whole-community merges with single-node moves on the
    // original graph until neither changes the partition.
    let order = visit_order(n, params, restart, level + 1);
    local_moves(base, &mut membership, params.resolution, &order);
    loop {
        while merge_pass(base, &mut membership, params.resolution) {
            if !local_moves(base, &mut membership, params.resolution, &order) {
                break;
            }
        }
        if !vertex_mover(base, &mut membership, params.resolution) {
            break;
        }
        local_moves(base, &mut membership, params.resolution, &order);
    }
    canonical_labels(&membership)
}

/// Detects communities at the given resolution with node-id visit order.
pub fn detect_communities(net: &GravityNetwork, resolution: f64, seed: u64) -> Result<CommunityPartition> {
    detect_communities_with(net, &CommunityParams { resolution, seed, ..CommunityParams::default() })
}

pub fn detect_communities_with(net: &GravityNetwork, params: &CommunityParams) -> Result<CommunityPartition> {
    if !(params.resolution > 0.0) || !params.resolution.is_finite() {
        return Err(Error::validation(format!("resolution must be > 0, got {}", params.resolution)));
    }
    if !(net.total_weight() > 0.0) {
        return Err(Error::domain("community detection needs a network with positive total weight"));
    }
    let base = LevelGraph::from_network(net);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for restart in 0..params.restarts.max(1) as u64 {
        let assignment = single_run(net, &base, params, restart);
        let q = modularity_at(net, &assignment, params.resolution)?;
        if best.as_ref().is_none_or(|(_, bq)| q > bq + 1e-12) {
            best = Some((assignment, q));
        }
    }
    let (assignment, _) = best.expect("at least one run");
    let q = modularity(net, &assignment)?;
    Ok(CommunityPartition { label: params.label.clone(), assignment, modularity: q })
}
