//! End-to-end capacities on a bound-annotated network.
//!
//! Single-path routing is limited by the widest path between the users,
//! flooding by the minimum cut. Both are computed for either annotation and
//! come with exhaustive oracles for small graphs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{min_neighbourhood_capacity, BoundedGraph, Cut, Selector};

/// Largest graph accepted by [`brute_force_min_cut`].
pub const MIN_CUT_LIMIT: usize = 22;
/// Largest graph accepted by [`brute_force_widest_path`].
pub const PATH_ENUM_LIMIT: usize = 12;
/// Residual capacity treated as zero, relative to the largest edge value.
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathResult {
    pub value: f64,
    pub path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeFlow {
    pub from: String,
    pub to: String,
    pub flow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowResult {
    pub value: f64,
    pub mincut: Cut,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flows: Vec<EdgeFlow>,
}

/// Node ranks in lexicographic id order.
fn ranks(bg: &BoundedGraph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..bg.node_count()).collect();
    order.sort_by(|&a, &b| bg.nodes()[a].cmp(&bg.nodes()[b]));
    let mut rank = vec![0; order.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Adjacency lists `(neighbour, edge)`, neighbours in lexicographic order.
fn adjacency(bg: &BoundedGraph) -> Vec<Vec<(usize, usize)>> {
    let rank = ranks(bg);
    let mut adj = vec![Vec::new(); bg.node_count()];
    for (e, &(a, b)) in bg.endpoints().iter().enumerate() {
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    for list in &mut adj {
        list.sort_by_key(|&(v, _)| rank[v]);
    }
    adj
}

#[derive(PartialEq)]
struct Frontier {
    width: f64,
    rank: usize,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Widest first; among equals the lexicographically smallest id.
        self.width.total_cmp(&other.width).then_with(|| other.rank.cmp(&self.rank))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Path between the users maximising its smallest edge value.
pub fn widest_path(bg: &BoundedGraph, selector: Selector) -> PathResult {
    let (alpha, beta) = bg.user_indices();
    let n = bg.node_count();
    let rank = ranks(bg);
    let adj = adjacency(bg);
    let mut width = vec![f64::NEG_INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    width[alpha] = f64::INFINITY;
    heap.push(Frontier { width: f64::INFINITY, rank: rank[alpha], node: alpha });
    while let Some(Frontier { width: w, node: u, .. }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == beta {
            break;
        }
        for &(v, e) in &adj[u] {
            let cand = w.min(bg.value(e, selector));
            if !done[v] && cand > width[v] {
                width[v] = cand;
                prev[v] = u;
                heap.push(Frontier { width: cand, rank: rank[v], node: v });
            }
        }
    }
    if !done[beta] {
        return PathResult { value: 0.0, path: Vec::new() };
    }
    let mut path = vec![beta];
    while *path.last().unwrap() != alpha {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    PathResult { value: width[beta], path: path.into_iter().map(|i| bg.nodes()[i].clone()).collect() }
}

/// Exhaustive widest path over every simple path between the users.
pub fn brute_force_widest_path(bg: &BoundedGraph, selector: Selector) -> Result<f64> {
    let n = bg.node_count();
    if n > PATH_ENUM_LIMIT {
        return Err(Error::Size { nodes: n, limit: PATH_ENUM_LIMIT });
    }
    let (alpha, beta) = bg.user_indices();
    let adj = adjacency(bg);
    let mut on_path = vec![false; n];
    let mut best = 0.0;

    fn walk(
        u: usize,
        w: f64,
        target: usize,
        adj: &[Vec<(usize, usize)>],
        bg: &BoundedGraph,
        selector: Selector,
        on_path: &mut [bool],
        best: &mut f64,
    ) {
        if u == target {
            *best = f64::max(*best, w);
            return;
        }
        on_path[u] = true;
        for &(v, e) in &adj[u] {
            if !on_path[v] {
                walk(v, w.min(bg.value(e, selector)), target, adj, bg, selector, on_path, best);
            }
        }
        on_path[u] = false;
    }

    walk(alpha, f64::INFINITY, beta, &adj, bg, selector, &mut on_path, &mut best);
    Ok(best)
}

struct Arc {
    to: usize,
    cap: f64,
}

/// Level-graph blocking-flow solver on paired arcs.
struct Dinic {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    level: Vec<i64>,
    next: Vec<usize>,
    eps: f64,
}

impl Dinic {
    fn new(n: usize, eps: f64) -> Self {
        Dinic { arcs: Vec::new(), out: vec![Vec::new(); n], level: vec![-1; n], next: vec![0; n], eps }
    }

    /// Undirected edge as two arcs that are each other's reverse.
    fn add_edge(&mut self, a: usize, b: usize, cap: f64) {
        self.out[a].push(self.arcs.len());
        self.arcs.push(Arc { to: b, cap });
        self.out[b].push(self.arcs.len());
        self.arcs.push(Arc { to: a, cap });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &id in &self.out[u] {
                let arc = &self.arcs[id];
                if arc.cap > self.eps && self.level[arc.to] < 0 {
                    self.level[arc.to] = self.level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
    }

    fn push(&mut self, u: usize, t: usize, limit: f64) -> f64 {
        if u == t {
            return limit;
        }
        while self.next[u] < self.out[u].len() {
            let id = self.out[u][self.next[u]];
            let (to, cap) = (self.arcs[id].to, self.arcs[id].cap);
            if cap > self.eps && self.level[to] == self.level[u] + 1 {
                let pushed = self.push(to, t, limit.min(cap));
                if pushed > 0.0 {
                    self.arcs[id].cap -= pushed;
                    self.arcs[id ^ 1].cap += pushed;
                    return pushed;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    fn run(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.next.iter_mut().for_each(|p| *p = 0);
            loop {
                let pushed = self.push(s, t, f64::INFINITY);
                if pushed <= 0.0 {
                    break;
                }
                total += pushed;
            }
        }
    }

    /// Nodes reachable from `s` through arcs with residual capacity.
    fn reachable(&mut self, s: usize) -> Vec<bool> {
        self.bfs(s);
        self.level.iter().map(|&l| l >= 0).collect()
    }
}

/// Nodes reachable from `alpha` using only edges of infinite value.
fn infinite_component(bg: &BoundedGraph, selector: Selector, alpha: usize) -> Vec<bool> {
    let adj = adjacency(bg);
    let mut seen = vec![false; bg.node_count()];
    seen[alpha] = true;
    let mut stack = vec![alpha];
    while let Some(u) = stack.pop() {
        for &(v, e) in &adj[u] {
            if !seen[v] && bg.value(e, selector).is_infinite() {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Undirected maximum flow between the users, with the residual minimum cut.
pub fn max_flow(bg: &BoundedGraph, selector: Selector) -> FlowResult {
    let (alpha, beta) = bg.user_indices();
    let n = bg.node_count();
    let caps: Vec<f64> = (0..bg.edges().len()).map(|e| bg.value(e, selector)).collect();

    let lossless = infinite_component(bg, selector, alpha);
    if lossless[beta] {
        // Users joined by lossless links; no finite cut exists.
        return FlowResult {
            value: f64::INFINITY,
            mincut: Cut::from_side(bg, &(0..n).map(|i| i != beta).collect::<Vec<_>>()),
            flows: Vec::new(),
        };
    }
    // Infinite edges never sit in a minimum cut, so any value above the sum
    // of the finite ones behaves identically.
    let finite: f64 = caps.iter().filter(|c| c.is_finite()).sum();
    let big = 2.0 * finite + 1.0;
    let largest = caps.iter().filter(|c| c.is_finite()).fold(0.0f64, |m, &c| m.max(c));
    let mut dinic = Dinic::new(n, RESIDUAL_TOL * largest.max(f64::MIN_POSITIVE));
    for (e, &(a, b)) in bg.endpoints().iter().enumerate() {
        dinic.add_edge(a, b, if caps[e].is_finite() { caps[e] } else { big });
    }
    let value = dinic.run(alpha, beta);
    let side = dinic.reachable(alpha);

    let flows = bg
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            // Net flow a -> b; the forward arc of edge e sits at index 2e.
            let cap = if caps[e].is_finite() { caps[e] } else { big };
            let net = cap - dinic.arcs[2 * e].cap;
            if net >= 0.0 {
                EdgeFlow { from: edge.a.clone(), to: edge.b.clone(), flow: net }
            } else {
                EdgeFlow { from: edge.b.clone(), to: edge.a.clone(), flow: -net }
            }
        })
        .collect();
    FlowResult { value, mincut: Cut::from_side(bg, &side), flows }
}

/// Exact minimum cut by scanning every bipartition.
pub fn brute_force_min_cut(bg: &BoundedGraph, selector: Selector) -> Result<(f64, Cut)> {
    let n = bg.node_count();
    if n > MIN_CUT_LIMIT {
        return Err(Error::Size { nodes: n, limit: MIN_CUT_LIMIT });
    }
    let (alpha, beta) = bg.user_indices();
    let free: Vec<usize> = (0..n).filter(|&i| i != alpha && i != beta).collect();
    let caps: Vec<f64> = (0..bg.edges().len()).map(|e| bg.value(e, selector)).collect();
    let mut side = vec![false; n];
    let mut best: Option<(f64, u64)> = None;
    for mask in 0..(1u64 << free.len()) {
        side.iter_mut().for_each(|s| *s = false);
        side[alpha] = true;
        for (bit, &i) in free.iter().enumerate() {
            side[i] = mask >> bit & 1 == 1;
        }
        let value: f64 = bg
            .endpoints()
            .iter()
            .zip(&caps)
            .filter(|((a, b), _)| side[*a] != side[*b])
            .map(|(_, c)| c)
            .sum();
        if best.is_none_or(|(v, _)| value < v) {
            best = Some((value, mask));
        }
    }
    let (value, mask) = best.expect("at least one bipartition");
    side.iter_mut().for_each(|s| *s = false);
    side[alpha] = true;
    for (bit, &i) in free.iter().enumerate() {
        side[i] = mask >> bit & 1 == 1;
    }
    Ok((value, Cut::from_side(bg, &side)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// The six end-to-end numbers of a network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityReport {
    pub single_path: Interval,
    pub flooding: Interval,
    pub min_neighbourhood: Interval,
}

impl CapacityReport {
    /// Ordering violations, empty when the report is consistent to `tol`.
    pub fn ordering_violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut le = |a: f64, b: f64, what: &str| {
            if a > b + tol * b.abs().max(1.0) {
                out.push(format!("{what}: {a} > {b}"));
            }
        };
        for (name, i) in [
            ("single-path", self.single_path),
            ("flooding", self.flooding),
            ("min-neighbourhood", self.min_neighbourhood),
        ] {
            le(i.lower, i.upper, &format!("{name} lower exceeds upper"));
        }
        le(self.single_path.lower, self.flooding.lower, "single-path exceeds flooding (lower)");
        le(self.single_path.upper, self.flooding.upper, "single-path exceeds flooding (upper)");
        le(self.flooding.lower, self.min_neighbourhood.lower, "flooding exceeds min-neighbourhood (lower)");
        le(self.flooding.upper, self.min_neighbourhood.upper, "flooding exceeds min-neighbourhood (upper)");
        out
    }
}

pub fn capacity_report(bg: &BoundedGraph) -> CapacityReport {
    let both = |f: &dyn Fn(Selector) -> f64| Interval { lower: f(Selector::Lower), upper: f(Selector::Upper) };
    CapacityReport {
        single_path: both(&|s| widest_path(bg, s).value),
        flooding: both(&|s| max_flow(bg, s).value),
        min_neighbourhood: both(&|s| min_neighbourhood_capacity(bg, s)),
    }
}
