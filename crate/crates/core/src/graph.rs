//! Directed network graph, links and flow demands.

use serde::{Deserialize, Serialize};

use crate::error::NetError;

pub type NodeId = usize;
pub type LinkId = usize;
pub type FlowId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

/// A directed wireless link `tx -> rx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub tx: NodeId,
    pub rx: NodeId,
    /// MHz.
    pub bandwidth: f64,
    /// mW at the transmitter.
    pub tx_power: f64,
    /// Additive noise power at the receiver, mW.
    pub noise_psd: f64,
}

/// A source/destination demand carrying `payload` Mbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDemand {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: f64,
}

/// Directed, connected graph with node positions in meters.
///
/// Node ids are `0..V` and link ids are `0..E` in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    nodes: Vec<Node>,
    links: Vec<Link>,
    outgoing: Vec<Vec<LinkId>>,
    incoming: Vec<Vec<LinkId>>,
}

impl NetworkGraph {
    /// Builds a graph from node positions and `(tx, rx, bandwidth, tx_power, noise)` links.
    ///
    /// Validates id contiguity, link attributes, self-loops and strong connectivity.
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Self, NetError> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(NetError::InvalidGraph(format!(
                    "node ids must be contiguous from 0, found {} at position {i}",
                    n.id
                )));
            }
            if !n.x.is_finite() || !n.y.is_finite() {
                return Err(NetError::InvalidGraph(format!("node {i} has non-finite position")));
            }
        }
        let v = nodes.len();
        let mut outgoing = vec![Vec::new(); v];
        let mut incoming = vec![Vec::new(); v];
        for (i, l) in links.iter().enumerate() {
            if l.id != i {
                return Err(NetError::InvalidGraph(format!(
                    "link ids must follow insertion order, found {} at position {i}",
                    l.id
                )));
            }
            if l.tx >= v || l.rx >= v {
                return Err(NetError::InvalidGraph(format!("link {i} references an unknown node")));
            }
            if l.tx == l.rx {
                return Err(NetError::InvalidGraph(format!("link {i} is a self-loop")));
            }
            let positive = |x: f64| x.is_finite() && x > 0.0;
            if !positive(l.bandwidth) || !positive(l.tx_power) || !positive(l.noise_psd) {
                return Err(NetError::InvalidGraph(format!(
                    "link {i} needs positive bandwidth, tx power and noise"
                )));
            }
            outgoing[l.tx].push(i);
            incoming[l.rx].push(i);
        }
        let graph = NetworkGraph {
            nodes,
            links,
            outgoing,
            incoming,
        };
        if !graph.is_strongly_connected() {
            return Err(NetError::InvalidGraph("graph is not connected".into()));
        }
        Ok(graph)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, id: LinkId) -> Result<&Link, NetError> {
        self.links.get(id).ok_or(NetError::UnknownLink(id))
    }

    /// Links leaving `node`.
    pub fn outgoing(&self, node: NodeId) -> &[LinkId] {
        &self.outgoing[node]
    }

    /// Links entering `node`.
    pub fn incoming(&self, node: NodeId) -> &[LinkId] {
        &self.incoming[node]
    }

    /// Euclidean distance between two nodes.
    pub fn node_distance(&self, a: NodeId, b: NodeId) -> f64 {
        let (p, q) = (&self.nodes[a], &self.nodes[b]);
        (p.x - q.x).hypot(p.y - q.y)
    }

    /// Geometric length of a link (tx to rx).
    pub fn link_length(&self, id: LinkId) -> f64 {
        let l = &self.links[id];
        self.node_distance(l.tx, l.rx)
    }

    pub fn link_midpoint(&self, id: LinkId) -> (f64, f64) {
        let l = &self.links[id];
        let (a, b) = (&self.nodes[l.tx], &self.nodes[l.rx]);
        ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)
    }

    pub fn max_bandwidth(&self) -> f64 {
        self.links.iter().map(|l| l.bandwidth).fold(0.0, f64::max)
    }

    /// Node sequence visited by a link path, starting at the first link's transmitter.
    pub fn path_nodes(&self, path: &[LinkId]) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(path.len() + 1);
        if let Some(&first) = path.first() {
            out.push(self.links[first].tx);
        }
        out.extend(path.iter().map(|&l| self.links[l].rx));
        out
    }

    /// True when `path` is a contiguous simple path from `src` to `dst`.
    pub fn is_simple_path(&self, path: &[LinkId], src: NodeId, dst: NodeId) -> bool {
        if path.is_empty() || path.iter().any(|&l| l >= self.links.len()) {
            return false;
        }
        if self.links[path[0]].tx != src || self.links[*path.last().unwrap()].rx != dst {
            return false;
        }
        if path.windows(2).any(|w| self.links[w[0]].rx != self.links[w[1]].tx) {
            return false;
        }
        let nodes = self.path_nodes(path);
        let mut seen = vec![false; self.nodes.len()];
        nodes.iter().all(|&n| !std::mem::replace(&mut seen[n], true))
    }

    /// Checks that `flow` references valid, distinct nodes and carries a positive payload.
    pub fn validate_flow(&self, flow: &FlowDemand) -> Result<(), NetError> {
        let v = self.nodes.len();
        if flow.src >= v || flow.dst >= v {
            return Err(NetError::InvalidFlow(flow.id, "unknown node".into()));
        }
        if flow.src == flow.dst {
            return Err(NetError::InvalidFlow(flow.id, "source equals destination".into()));
        }
        if !(flow.payload.is_finite() && flow.payload > 0.0) {
            return Err(NetError::InvalidFlow(flow.id, "payload must be positive".into()));
        }
        Ok(())
    }

    fn reaches_all(&self, adjacency: &[Vec<LinkId>], forward: bool) -> bool {
        let v = self.nodes.len();
        if v == 0 {
            return true;
        }
        let mut seen = vec![false; v];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &l in &adjacency[u] {
                let w = if forward { self.links[l].rx } else { self.links[l].tx };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn is_strongly_connected(&self) -> bool {
        self.reaches_all(&self.outgoing, true) && self.reaches_all(&self.incoming, false)
    }
}
