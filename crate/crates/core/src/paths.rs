//! Shortest paths and construction of each flow's diverse action space.
//!
//! The action space of a flow is grown one path at a time: after a path is
//! selected, every link's weight is raised by the inverse distance to the
//! nearest link of that path, so the next shortest path is pushed away from it.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use crate::alloc::{ActionSpace, Path};
use crate::error::NetError;
use crate::graph::{FlowDemand, LinkId, NetworkGraph, NodeId};

/// Inverse-distance increments are capped at `1 / DISTANCE_FLOOR_M`.
pub const DISTANCE_FLOOR_M: f64 = 1.0;

/// Default number of candidate paths per flow.
pub const DEFAULT_K: usize = 4;

/// Per-link weights `W(e) >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkWeights(Vec<f64>);

impl LinkWeights {
    pub fn unit(num_links: usize) -> Self {
        LinkWeights(vec![1.0; num_links])
    }

    pub fn from_vec(w: Vec<f64>) -> Self {
        LinkWeights(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, link: LinkId) -> f64 {
        self.0[link]
    }

    pub fn path_cost(&self, path: &[LinkId]) -> f64 {
        path.iter().map(|&l| self.0[l]).sum()
    }
}

/// Euclidean distance between link midpoints.
pub fn link_distance(graph: &NetworkGraph, a: LinkId, b: LinkId) -> f64 {
    let (ax, ay) = graph.link_midpoint(a);
    let (bx, by) = graph.link_midpoint(b);
    (ax - bx).hypot(ay - by)
}

fn tolerance(cost: f64) -> f64 {
    1e-9 * cost.abs().max(1.0)
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    node: NodeId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Links and nodes excluded from a search.
#[derive(Debug, Default, Clone)]
struct Bans {
    links: BTreeSet<LinkId>,
    nodes: BTreeSet<NodeId>,
}

fn dijkstra(
    graph: &NetworkGraph,
    weights: &LinkWeights,
    origin: NodeId,
    reverse: bool,
    bans: &Bans,
) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.num_nodes()];
    let mut heap = BinaryHeap::new();
    dist[origin] = 0.0;
    heap.push(HeapItem {
        cost: 0.0,
        node: origin,
    });
    while let Some(HeapItem { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        let adj = if reverse {
            graph.incoming(node)
        } else {
            graph.outgoing(node)
        };
        for &l in adj {
            if bans.links.contains(&l) {
                continue;
            }
            let link = &graph.links()[l];
            let next = if reverse { link.tx } else { link.rx };
            if bans.nodes.contains(&next) {
                continue;
            }
            let c = cost + weights.get(l);
            if c < dist[next] {
                dist[next] = c;
                heap.push(HeapItem { cost: c, node: next });
            }
        }
    }
    dist
}

fn restricted_shortest_path(
    graph: &NetworkGraph,
    weights: &LinkWeights,
    src: NodeId,
    dst: NodeId,
    bans: &Bans,
) -> Option<Path> {
    if bans.nodes.contains(&src) || bans.nodes.contains(&dst) {
        return None;
    }
    let to_dst = dijkstra(graph, weights, dst, true, bans);
    let total = to_dst[src];
    if !total.is_finite() {
        return None;
    }
    let tol = tolerance(total);
    // Walk the tight subgraph choosing the smallest next node id; every tight
    // prefix extends to a minimum-cost path, so this yields the
    // lexicographically smallest node sequence.
    let mut path = Vec::new();
    let mut visited = vec![false; graph.num_nodes()];
    let (mut node, mut spent) = (src, 0.0);
    visited[src] = true;
    while node != dst {
        let mut best: Option<(NodeId, f64, LinkId)> = None;
        for &l in graph.outgoing(node) {
            if bans.links.contains(&l) {
                continue;
            }
            let next = graph.links()[l].rx;
            if visited[next] || bans.nodes.contains(&next) {
                continue;
            }
            let w = weights.get(l);
            if spent + w + to_dst[next] > total + tol {
                continue;
            }
            let better = match best {
                None => true,
                Some((bn, bw, bl)) => {
                    next < bn || (next == bn && (w < bw || (w == bw && l < bl)))
                }
            };
            if better {
                best = Some((next, w, l));
            }
        }
        let (next, w, l) = best?;
        path.push(l);
        visited[next] = true;
        spent += w;
        node = next;
    }
    Some(path)
}

/// Minimum-weight simple path from `src` to `dst`; ties go to the
/// lexicographically smallest node sequence, then to lower link ids.
pub fn shortest_path(
    graph: &NetworkGraph,
    src: NodeId,
    dst: NodeId,
    weights: &LinkWeights,
) -> Result<Path, NetError> {
    if src >= graph.num_nodes() || dst >= graph.num_nodes() || src == dst {
        return Err(NetError::InvalidParameter(format!(
            "bad endpoints {src} -> {dst}"
        )));
    }
    restricted_shortest_path(graph, weights, src, dst, &Bans::default())
        .ok_or(NetError::Unreachable { src, dst })
}

#[derive(Clone)]
struct Candidate {
    cost: f64,
    nodes: Vec<NodeId>,
    path: Path,
}

impl Candidate {
    fn new(graph: &NetworkGraph, weights: &LinkWeights, path: Path) -> Self {
        Candidate {
            cost: weights.path_cost(&path),
            nodes: graph.path_nodes(&path),
            path,
        }
    }

    fn precedes(&self, other: &Candidate) -> bool {
        let tol = tolerance(self.cost.max(other.cost));
        if (self.cost - other.cost).abs() > tol {
            return self.cost < other.cost;
        }
        (&self.nodes, &self.path) < (&other.nodes, &other.path)
    }
}

/// Yen-style enumeration of simple paths in nondecreasing weight.
struct RankedPaths<'a> {
    graph: &'a NetworkGraph,
    weights: &'a LinkWeights,
    dst: NodeId,
    accepted: Vec<Candidate>,
    pending: Vec<Candidate>,
    first: Option<Candidate>,
}

impl<'a> RankedPaths<'a> {
    fn new(graph: &'a NetworkGraph, weights: &'a LinkWeights, src: NodeId, dst: NodeId) -> Self {
        let first = restricted_shortest_path(graph, weights, src, dst, &Bans::default())
            .map(|p| Candidate::new(graph, weights, p));
        RankedPaths {
            graph,
            weights,
            dst,
            accepted: Vec::new(),
            pending: Vec::new(),
            first,
        }
    }

    fn spur_from_last(&mut self) {
        let last = self.accepted.last().unwrap().clone();
        for i in 0..last.path.len() {
            let spur = last.nodes[i];
            let mut bans = Bans::default();
            for acc in &self.accepted {
                if acc.nodes.len() > i && acc.nodes[..=i] == last.nodes[..=i] {
                    bans.links.insert(acc.path[i]);
                }
            }
            bans.nodes.extend(last.nodes[..i].iter().copied());
            if let Some(tail) =
                restricted_shortest_path(self.graph, self.weights, spur, self.dst, &bans)
            {
                let mut path = last.path[..i].to_vec();
                path.extend(tail);
                let known = self.accepted.iter().chain(&self.pending).any(|c| c.path == path);
                if !known {
                    self.pending.push(Candidate::new(self.graph, self.weights, path));
                }
            }
        }
    }
}

impl Iterator for RankedPaths<'_> {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        if let Some(first) = self.first.take() {
            self.accepted.push(first.clone());
            return Some(first.path);
        }
        if self.accepted.is_empty() {
            return None;
        }
        self.spur_from_last();
        let best = (0..self.pending.len()).reduce(|a, b| {
            if self.pending[b].precedes(&self.pending[a]) {
                b
            } else {
                a
            }
        })?;
        let cand = self.pending.swap_remove(best);
        self.accepted.push(cand.clone());
        Some(cand.path)
    }
}

/// Raises every link weight `e` by `1 / max(min over l in path of d(l, e), floor)`.
pub fn penalize_near(graph: &NetworkGraph, weights: &mut LinkWeights, path: &[LinkId]) {
    for (e, w) in weights.0.iter_mut().enumerate() {
        let inc = path
            .iter()
            .map(|&l| 1.0 / link_distance(graph, l, e).max(DISTANCE_FLOOR_M))
            .fold(0.0, f64::max);
        *w += inc;
    }
}

/// Builds `k` mutually distant short paths for `flow`.
///
/// If the reweighted shortest path repeats an earlier selection, the cheapest
/// not-yet-selected simple path under the current weights is taken instead.
/// When the topology has fewer than `k` simple routes the list is padded with
/// the last distinct path and flagged.
pub fn build_action_space(
    graph: &NetworkGraph,
    flow: &FlowDemand,
    k: usize,
) -> Result<ActionSpace, NetError> {
    if k == 0 {
        return Err(NetError::InvalidParameter("k must be at least 1".into()));
    }
    graph.validate_flow(flow)?;
    let mut weights = LinkWeights::unit(graph.num_links());
    let mut selected: Vec<Path> = Vec::with_capacity(k);
    let mut exhausted = false;
    for _ in 0..k {
        let mut path = shortest_path(graph, flow.src, flow.dst, &weights)?;
        if selected.contains(&path) && !exhausted {
            match RankedPaths::new(graph, &weights, flow.src, flow.dst)
                .find(|p| !selected.contains(p))
            {
                Some(p) => path = p,
                None => exhausted = true,
            }
        }
        if exhausted {
            path = selected.last().cloned().expect("first selection always succeeds");
        }
        penalize_near(graph, &mut weights, &path);
        selected.push(path);
    }
    if exhausted {
        log::warn!(
            "flow {} ({} -> {}): fewer than {k} simple paths, action space padded",
            flow.id,
            flow.src,
            flow.dst
        );
    }
    Ok(ActionSpace::new(selected, exhausted))
}

/// Action spaces for every flow, in flow order.
pub fn build_action_spaces(
    graph: &NetworkGraph,
    flows: &[FlowDemand],
    k: usize,
) -> Result<Vec<ActionSpace>, NetError> {
    flows.iter().map(|f| build_action_space(graph, f, k)).collect()
}
