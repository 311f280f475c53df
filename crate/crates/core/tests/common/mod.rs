#![allow(dead_code)]

use diamond_core::paths::build_action_spaces;
use diamond_core::{
    ActionSpace, FlowDemand, InterferenceMap, InterferenceParams, Link, NetworkGraph, Node, Path,
    PathAllocation, RateModel, UtilityConfig, UtilityKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub graph: NetworkGraph,
    pub flows: Vec<FlowDemand>,
    pub map: InterferenceMap,
    pub spaces: Vec<ActionSpace>,
}

impl Instance {
    pub fn model(&self) -> RateModel<'_> {
        RateModel::new(&self.graph, &self.map)
    }

    pub fn utility(&self, kind: UtilityKind) -> UtilityConfig {
        UtilityConfig::for_network(kind, &self.model())
    }

    pub fn alloc(&self, chosen: Vec<usize>) -> PathAllocation {
        PathAllocation::new(self.spaces.clone(), chosen).unwrap()
    }

    pub fn all_profiles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for s in &self.spaces {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..s.len()).map(move |i| {
                        let mut q = p.clone();
                        q.push(i);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

pub fn bidirectional_links(pairs: &[(usize, usize)], mut attrs: impl FnMut() -> (f64, f64, f64)) -> Vec<Link> {
    let mut links = Vec::new();
    for &(a, b) in pairs {
        for (tx, rx) in [(a, b), (b, a)] {
            let (bandwidth, tx_power, noise_psd) = attrs();
            links.push(Link {
                id: links.len(),
                tx,
                rx,
                bandwidth,
                tx_power,
                noise_psd,
            });
        }
    }
    links
}

/// Connected random deployment on a 100 m square: spanning tree plus extra pairs.
pub fn random_graph(rng: &mut ChaCha8Rng, v: usize) -> NetworkGraph {
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
    let mut attrs = || {
        (
            rng.gen_range(1.0..5.0),
            rng.gen_range(10.0..100.0),
            rng.gen_range(0.1..1.0),
        )
    };
    let links = bidirectional_links(&pairs, &mut attrs);
    NetworkGraph::new(nodes, links).unwrap()
}

pub fn random_instance(seed: u64, v: usize, n: usize, k: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph(&mut rng, v);
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
        .collect::<Vec<_>>();
    let params = InterferenceParams {
        range_m: 60.0,
        pathloss_exp: 2.5,
    };
    let mut map = InterferenceMap::build(&graph, params).unwrap();
    let spaces = build_action_spaces(&graph, &flows, k).unwrap();
    map.set_flow_neighbors(&spaces);
    Instance {
        graph,
        flows,
        map,
        spaces,
    }
}

/// Every simple path from `src` to `dst`, by depth-first search.
pub fn all_simple_paths(g: &NetworkGraph, src: usize, dst: usize) -> Vec<Path> {
    fn dfs(g: &NetworkGraph, at: usize, dst: usize, seen: &mut Vec<bool>, cur: &mut Path, out: &mut Vec<Path>) {
        if at == dst {
            out.push(cur.clone());
            return;
        }
        for &l in g.outgoing(at) {
            let next = g.links()[l].rx;
            if !seen[next] {
                seen[next] = true;
                cur.push(l);
                dfs(g, next, dst, seen, cur, out);
                cur.pop();
                seen[next] = false;
            }
        }
    }
    let mut seen = vec![false; g.num_nodes()];
    seen[src] = true;
    let mut out = Vec::new();
    dfs(g, src, dst, &mut seen, &mut Vec::new(), &mut out);
    out
}
