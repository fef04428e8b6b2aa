//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use gravnet::gravity::{Edge, GravityNetwork, NetworkNode};
use gravnet::raster::{AggregateOptions, BBox, CoarseGrid};
use gravnet::regress::Dataset;
use rand::Rng;

/// Grid whose cells carry the given log-intensities (natural log).
pub fn grid_with_m(rows: usize, cols: usize, m: &[f64]) -> CoarseGrid {
    let totals: Vec<f64> = m.iter().map(|&x| x.exp_m1()).collect();
    let bbox = BBox::new(0.0, 0.0, cols as f64, rows as f64).unwrap();
    CoarseGrid::from_intensities(rows, cols, bbox, &totals, &AggregateOptions::default()).unwrap()
}

/// Network with given log-intensities on a 1×n row and explicit weighted edges.
pub fn network(m: &[f64], edges: &[(usize, usize, f64)]) -> GravityNetwork {
    let nodes = m
        .iter()
        .enumerate()
        .map(|(i, &mi)| NetworkNode { node_id: i, center: (i as f64 + 0.5, 0.5), log_intensity: mi })
        .collect();
    let edges = edges.iter().map(|&(src, dst, weight)| Edge { src, dst, weight, rewired: false }).collect();
    GravityNetwork::from_parts(nodes, edges).unwrap()
}

/// Random connected weighted graph: a random spanning tree plus extra edges.
pub fn random_graph(rng: &mut impl Rng, n: usize, extra: f64) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        seen.insert((u, v));
        edges.push((u, v, rng.gen_range(0.1..5.0)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !seen.contains(&(i, j)) && rng.gen_bool(extra) {
                edges.push((i, j, rng.gen_range(0.1..5.0)));
            }
        }
    }
    edges
}

/// Dense weight matrix of a network.
pub fn weight_matrix(net: &GravityNetwork) -> Vec<Vec<f64>> {
    let n = net.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for e in net.edges() {
        a[e.src][e.dst] = e.weight;
        a[e.dst][e.src] = e.weight;
    }
    a
}

/// Q by the literal double sum over all ordered pairs.
pub fn modularity_double_sum(net: &GravityNetwork, assignment: &[usize], resolution: f64) -> f64 {
    let a = weight_matrix(net);
    let n = a.len();
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                q += a[i][j] - resolution * k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as a restricted growth string.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(pos: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            cur[pos] = c;
            rec(pos + 1, max.max(c), cur, out);
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        let mut cur = vec![0; n];
        rec(1, 0, &mut cur, &mut out);
    }
    out
}

/// Best modularity over every partition.
pub fn exhaustive_optimum(net: &GravityNetwork) -> f64 {
    all_partitions(net.node_count())
        .iter()
        .map(|p| modularity_double_sum(net, p, 1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn normalize(scores: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let t: f64 = scores.iter().map(|&(_, s)| s).sum();
    scores.into_iter().map(|(x, s)| (x, s / t)).collect()
}

/// Dense weights plus an adjacency mask (zero-weight edges are still edges).
pub struct Dense {
    pub w: Vec<Vec<f64>>,
    pub adj: Vec<Vec<bool>>,
}

pub fn dense(net: &GravityNetwork) -> Dense {
    let n = net.node_count();
    let mut w = vec![vec![0.0; n]; n];
    let mut adj = vec![vec![false; n]; n];
    for e in net.edges() {
        w[e.src][e.dst] = e.weight;
        w[e.dst][e.src] = e.weight;
        adj[e.src][e.dst] = true;
        adj[e.dst][e.src] = true;
    }
    Dense { w, adj }
}

/// Transition law written directly from the bias rules over the dense matrix.
pub fn oracle_transition(g: &Dense, prev: Option<usize>, cur: usize, p: f64, q: f64) -> Vec<(usize, f64)> {
    let nbrs: Vec<usize> = (0..g.w.len()).filter(|&x| g.adj[cur][x]).collect();
    // All-zero neighbourhoods walk as if every weight were 1, bias included.
    let dark = nbrs.iter().all(|&x| g.w[cur][x] == 0.0);
    let scores = nbrs
        .into_iter()
        .map(|x| {
            let alpha = match prev {
                None => 1.0,
                Some(pv) if x == pv => 1.0 / p,
                Some(pv) if g.adj[x][pv] => 1.0,
                Some(_) => 1.0 / q,
            };
            (x, alpha * if dark { 1.0 } else { g.w[cur][x] })
        })
        .collect();
    normalize(scores)
}

/// Exact distribution of `(prev, cur)` after each step, propagated from `start`.
/// Returns, for steps 1..=steps, the probability of standing at each node.
pub fn exact_step_marginals(net: &GravityNetwork, start: usize, steps: usize, p: f64, q: f64) -> Vec<Vec<f64>> {
    let a = dense(net);
    let n = a.w.len();
    let mut state = vec![vec![0.0; n]; n]; // state[prev][cur]
    for (x, pr) in oracle_transition(&a, None, start, p, q) {
        state[start][x] += pr;
    }
    let mut out = Vec::with_capacity(steps);
    for step in 1..=steps {
        let mut marg = vec![0.0; n];
        for row in &state {
            for (c, &pr) in row.iter().enumerate() {
                marg[c] += pr;
            }
        }
        out.push(marg);
        if step == steps {
            break;
        }
        let mut next = vec![vec![0.0; n]; n];
        for prev in 0..n {
            for cur in 0..n {
                let pr = state[prev][cur];
                if pr == 0.0 {
                    continue;
                }
                for (x, t) in oracle_transition(&a, Some(prev), cur, p, q) {
                    next[cur][x] += pr * t;
                }
            }
        }
        state = next;
    }
    out
}

/// Brute-force k-nearest-neighbour prediction: full distance scan, stable
/// sort by (distance, row index), mean over the first k in that order.
pub fn knn_oracle(train: &Dataset, k: usize, x: &[f64]) -> f64 {
    let mut d: Vec<(f64, usize)> = train
        .rows()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut s = 0.0;
    for &(_, i) in &d[..k] {
        s += train.targets()[i];
    }
    s / k as f64
}

/// Random grid with `rows × cols` cells, some dark.
pub fn random_grid(rng: &mut impl Rng, rows: usize, cols: usize) -> CoarseGrid {
    let totals: Vec<f64> =
        (0..rows * cols).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..5000.0) }).collect();
    let lon0 = rng.gen_range(-20.0..20.0);
    let lat0 = rng.gen_range(-20.0..20.0);
    let cell = rng.gen_range(0.1..1.0);
    let bbox = BBox::new(lon0, lat0, lon0 + cols as f64 * cell, lat0 + rows as f64 * cell).unwrap();
    CoarseGrid::from_intensities(rows, cols, bbox, &totals, &AggregateOptions::default()).unwrap()
}
