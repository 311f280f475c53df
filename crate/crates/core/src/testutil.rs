//! Small hand-built and random instances shared by the unit tests.

use rand::Rng;

use crate::alloc::{ActionSpace, PathAllocation};
use crate::graph::{FlowDemand, Link, NetworkGraph, Node};
use crate::interference::{InterferenceMap, InterferenceParams};
use crate::paths::build_action_spaces;
use crate::rate::{RateModel, UtilityConfig, UtilityKind};

pub struct TestInstance {
    pub graph: NetworkGraph,
    pub flows: Vec<FlowDemand>,
    pub map: InterferenceMap,
    pub spaces: Vec<ActionSpace>,
}

impl TestInstance {
    pub fn new(
        graph: NetworkGraph,
        flows: Vec<FlowDemand>,
        params: InterferenceParams,
        k: usize,
    ) -> Self {
        let mut map = InterferenceMap::build(&graph, params).unwrap();
        let spaces = build_action_spaces(&graph, &flows, k).unwrap();
        map.set_flow_neighbors(&spaces);
        TestInstance {
            graph,
            flows,
            map,
            spaces,
        }
    }

    pub fn model(&self) -> RateModel<'_> {
        RateModel::new(&self.graph, &self.map)
    }

    pub fn utility(&self) -> UtilityConfig {
        UtilityConfig::for_network(UtilityKind::Rate, &self.model())
    }

    pub fn alloc(&self, chosen: Vec<usize>) -> PathAllocation {
        PathAllocation::new(self.spaces.clone(), chosen).unwrap()
    }
}

fn push_bidi(links: &mut Vec<Link>, a: usize, b: usize, bw: f64) {
    for (tx, rx) in [(a, b), (b, a)] {
        links.push(Link {
            id: links.len(),
            tx,
            rx,
            bandwidth: bw,
            tx_power: 100.0,
            noise_psd: 1.0,
        });
    }
}

/// Diamond clusters `s -> {a, b} -> d` placed every `spacing` meters along x
/// and chained d_i <-> s_{i+1}; flow i runs s_i -> d_i with two candidates.
pub fn clusters(count: usize, spacing: f64, range: f64) -> TestInstance {
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    for c in 0..count {
        let x = spacing * c as f64;
        let base = nodes.len();
        for (dx, dy) in [(0.0, 0.0), (5.0, 5.0), (5.0, -5.0), (10.0, 0.0)] {
            nodes.push(Node {
                id: nodes.len(),
                x: x + dx,
                y: dy,
            });
        }
        // uneven bandwidths so the two routes differ
        push_bidi(&mut links, base, base + 1, 2.0 + c as f64);
        push_bidi(&mut links, base + 1, base + 3, 2.0 + c as f64);
        push_bidi(&mut links, base, base + 2, 1.0);
        push_bidi(&mut links, base + 2, base + 3, 1.0);
        if c > 0 {
            push_bidi(&mut links, base - 1, base, 1.0);
        }
    }
    let graph = NetworkGraph::new(nodes, links).unwrap();
    let flows = (0..count)
        .map(|c| FlowDemand {
            id: c,
            src: 4 * c,
            dst: 4 * c + 3,
            payload: 10.0,
        })
        .collect();
    let params = InterferenceParams {
        range_m: range,
        pathloss_exp: 2.0,
    };
    TestInstance::new(graph, flows, params, 2)
}

pub fn isolated_pair() -> TestInstance {
    clusters(2, 100.0, 8.0)
}

pub fn crossing_pair() -> TestInstance {
    clusters(2, 12.0, 8.0)
}

pub fn chain_of_three() -> TestInstance {
    clusters(3, 12.0, 8.0)
}

pub fn single_path_flow() -> TestInstance {
    let nodes = vec![
        Node { id: 0, x: 0.0, y: 0.0 },
        Node { id: 1, x: 5.0, y: 0.0 },
    ];
    let mut links = Vec::new();
    push_bidi(&mut links, 0, 1, 1.0);
    let graph = NetworkGraph::new(nodes, links).unwrap();
    let flows = vec![FlowDemand {
        id: 0,
        src: 0,
        dst: 1,
        payload: 1.0,
    }];
    TestInstance::new(graph, flows, InterferenceParams::default(), 1)
}

/// Random connected deployment in a 100 m square with `n` random flows.
pub fn random_instance<R: Rng>(rng: &mut R, v: usize, n: usize, k: usize) -> TestInstance {
    let nodes: Vec<Node> = (0..v)
        .map(|id| Node {
            id,
            x: rng.gen_range(0.0..100.0),
            y: rng.gen_range(0.0..100.0),
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = (1..v).map(|i| (rng.gen_range(0..i), i)).collect();
    for _ in 0..v {
        let (a, b) = (rng.gen_range(0..v), rng.gen_range(0..v));
        if a != b && !pairs.contains(&(a, b)) && !pairs.contains(&(b, a)) {
            pairs.push((a, b));
        }
    }
    let mut links = Vec::new();
    for (a, b) in pairs {
        for (tx, rx) in [(a, b), (b, a)] {
            links.push(Link {
                id: links.len(),
                tx,
                rx,
                bandwidth: rng.gen_range(1.0..5.0),
                tx_power: rng.gen_range(10.0..100.0),
                noise_psd: rng.gen_range(0.1..1.0),
            });
        }
    }
    let graph = NetworkGraph::new(nodes, links).unwrap();
    let flows = (0..n)
        .map(|id| {
            let src = rng.gen_range(0..v);
            let dst = (src + rng.gen_range(1..v)) % v;
            FlowDemand {
                id,
                src,
                dst,
                payload: rng.gen_range(1.0..20.0),
            }
        })
        .collect();
    let params = InterferenceParams {
        range_m: 60.0,
        pathloss_exp: 2.5,
    };
    TestInstance::new(graph, flows, params, k)
}
