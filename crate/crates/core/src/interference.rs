//! Geometric interference model: which links disturb which receivers, and how strongly.

use serde::{Deserialize, Serialize};

use crate::alloc::ActionSpace;
use crate::error::NetError;
use crate::graph::{FlowId, LinkId, NetworkGraph};

/// Distances below this are treated as this value in the path-loss law (meters).
pub const DISTANCE_FLOOR_M: f64 = 1.0;

/// Power attenuation `max(d, 1)^-exp`.
pub fn path_gain(distance: f64, pathloss_exp: f64) -> f64 {
    distance.max(DISTANCE_FLOOR_M).powf(-pathloss_exp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceParams {
    pub range_m: f64,
    pub pathloss_exp: f64,
}

impl Default for InterferenceParams {
    fn default() -> Self {
        InterferenceParams {
            range_m: 400.0,
            pathloss_exp: 3.0,
        }
    }
}

/// Per-link interfering neighbor sets `N_l` with pairwise powers, the received
/// signal power of every link, and (once action spaces exist) flow-level neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceMap {
    params: InterferenceParams,
    received_power: Vec<f64>,
    // sorted by interferer id
    neighbors: Vec<Vec<(LinkId, f64)>>,
    flow_neighbors: Vec<Vec<FlowId>>,
}

impl InterferenceMap {
    /// `e` interferes with `l` iff the transmitter of `e` lies within `range_m`
    /// of the receiver of `l` (and `e != l`).
    pub fn build(graph: &NetworkGraph, params: InterferenceParams) -> Result<Self, NetError> {
        if !(params.range_m.is_finite() && params.range_m > 0.0) {
            return Err(NetError::InvalidParameter("interference range must be > 0".into()));
        }
        if !(params.pathloss_exp.is_finite() && params.pathloss_exp >= 1.0) {
            return Err(NetError::InvalidParameter("path-loss exponent must be >= 1".into()));
        }
        let links = graph.links();
        let received_power = links
            .iter()
            .map(|l| l.tx_power * path_gain(graph.link_length(l.id), params.pathloss_exp))
            .collect();
        let neighbors = links
            .iter()
            .map(|victim| {
                links
                    .iter()
                    .filter(|e| e.id != victim.id)
                    .filter_map(|e| {
                        let d = graph.node_distance(e.tx, victim.rx);
                        (d <= params.range_m)
                            .then(|| (e.id, e.tx_power * path_gain(d, params.pathloss_exp)))
                    })
                    .collect()
            })
            .collect();
        Ok(InterferenceMap {
            params,
            received_power,
            neighbors,
            flow_neighbors: Vec::new(),
        })
    }

    pub fn params(&self) -> InterferenceParams {
        self.params
    }

    pub fn num_links(&self) -> usize {
        self.neighbors.len()
    }

    /// `N_l` as `(interferer, power at l's receiver)` pairs.
    pub fn link_neighbors(&self, link: LinkId) -> &[(LinkId, f64)] {
        &self.neighbors[link]
    }

    /// Interference power (mW) at `victim`'s receiver when `interferer` transmits.
    pub fn pair_power(&self, victim: LinkId, interferer: LinkId) -> Option<f64> {
        let row = self.neighbors.get(victim)?;
        row.binary_search_by_key(&interferer, |&(e, _)| e)
            .ok()
            .map(|i| row[i].1)
    }

    /// Signal power (mW) at the link's own receiver.
    pub fn received_power(&self, link: LinkId) -> f64 {
        self.received_power[link]
    }

    /// True if either link lies in the other's neighbor set.
    pub fn links_interact(&self, a: LinkId, b: LinkId) -> bool {
        self.pair_power(a, b).is_some() || self.pair_power(b, a).is_some()
    }

    /// Flow-level neighbors `N_n`; empty until [`Self::set_flow_neighbors`] has run.
    pub fn flow_neighbors(&self, flow: FlowId) -> &[FlowId] {
        self.flow_neighbors.get(flow).map_or(&[], Vec::as_slice)
    }

    pub fn has_flow_neighbors(&self) -> bool {
        !self.flow_neighbors.is_empty()
    }

    /// Derives `N_n` from the action spaces: `m` neighbors `n` when some link
    /// usable by `m` shares, disturbs or is disturbed by some link usable by `n`.
    /// The relation is symmetric by construction.
    pub fn set_flow_neighbors(&mut self, action_spaces: &[ActionSpace]) {
        let e = self.num_links();
        let usable: Vec<Vec<bool>> = action_spaces
            .iter()
            .map(|space| {
                let mut mask = vec![false; e];
                for &l in space.paths().iter().flatten() {
                    mask[l] = true;
                }
                mask
            })
            .collect();
        // links conflicting with any usable link of each flow
        let reach: Vec<Vec<bool>> = usable
            .iter()
            .map(|mask| {
                let mut out = mask.clone();
                for (l, _) in mask.iter().enumerate().filter(|(_, &u)| u) {
                    for &(i, _) in &self.neighbors[l] {
                        out[i] = true;
                    }
                }
                for (victim, row) in self.neighbors.iter().enumerate() {
                    if row.iter().any(|&(i, _)| mask[i]) {
                        out[victim] = true;
                    }
                }
                out
            })
            .collect();
        let n = action_spaces.len();
        self.flow_neighbors = (0..n)
            .map(|a| {
                (0..n)
                    .filter(|&b| b != a && (0..e).any(|l| usable[b][l] && reach[a][l]))
                    .collect()
            })
            .collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{link, node};
    use crate::graph::Link;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn antiparallel_links_ten_meters_apart() {
        // l0: (0,0)->(20,0), l1: (20,10)->(0,10); both tx-to-foreign-rx gaps are 10 m
        let nodes = vec![
            node(0, 0.0, 0.0),
            node(1, 20.0, 0.0),
            node(2, 20.0, 10.0),
            node(3, 0.0, 10.0),
        ];
        let links = vec![link(0, 0, 1), link(1, 2, 3), link(2, 1, 2), link(3, 3, 0)];
        let g = NetworkGraph::new(nodes, links).unwrap();
        let map = InterferenceMap::build(
            &g,
            InterferenceParams {
                range_m: 50.0,
                pathloss_exp: 2.0,
            },
        )
        .unwrap();
        assert!((map.pair_power(0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((map.pair_power(1, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(map.pair_power(0, 0), None);
    }

    #[test]
    fn out_of_range_links_do_not_interact() {
        let nodes = vec![
            node(0, 0.0, 0.0),
            node(1, 1.0, 0.0),
            node(2, 101.0, 0.0),
            node(3, 102.0, 0.0),
        ];
        let links = vec![
            link(0, 0, 1),
            link(1, 2, 3),
            link(2, 1, 2),
            link(3, 3, 0),
        ];
        let g = NetworkGraph::new(nodes, links).unwrap();
        let map = InterferenceMap::build(
            &g,
            InterferenceParams {
                range_m: 50.0,
                pathloss_exp: 2.0,
            },
        )
        .unwrap();
        assert_eq!(map.pair_power(0, 1), None);
        assert_eq!(map.pair_power(1, 0), None);
        assert!(!map.links_interact(0, 1));
    }

    #[test]
    fn rejects_bad_parameters() {
        let nodes = vec![node(0, 0.0, 0.0), node(1, 1.0, 0.0)];
        let g = NetworkGraph::new(nodes, vec![link(0, 0, 1), link(1, 1, 0)]).unwrap();
        let bad_range = InterferenceParams {
            range_m: 0.0,
            pathloss_exp: 2.0,
        };
        assert!(InterferenceMap::build(&g, bad_range).is_err());
        let bad_exp = InterferenceParams {
            range_m: 1.0,
            pathloss_exp: 0.5,
        };
        assert!(InterferenceMap::build(&g, bad_exp).is_err());
    }

    #[test]
    fn six_link_deployment_matches_pairwise_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let nodes: Vec<_> = (0..3)
            .map(|i| node(i, rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0)))
            .collect();
        let pairs = [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)];
        let links: Vec<Link> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| Link {
                tx_power: rng.gen_range(10.0..200.0),
                ..link(i, a, b)
            })
            .collect();
        let g = NetworkGraph::new(nodes.clone(), links.clone()).unwrap();
        let params = InterferenceParams {
            range_m: 40.0,
            pathloss_exp: 2.5,
        };
        let map = InterferenceMap::build(&g, params).unwrap();
        let mut ordered_pairs = 0;
        for victim in &links {
            for e in &links {
                if e.id == victim.id {
                    continue;
                }
                ordered_pairs += 1;
                let (t, r) = (nodes[e.tx], nodes[victim.rx]);
                let d = ((t.x - r.x).powi(2) + (t.y - r.y).powi(2)).sqrt();
                let expected = (d <= 40.0).then(|| e.tx_power * d.max(1.0).powf(-2.5));
                match (map.pair_power(victim.id, e.id), expected) {
                    (None, None) => {}
                    (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12 * b),
                    other => panic!("pair ({}, {}): {other:?}", victim.id, e.id),
                }
            }
        }
        assert_eq!(ordered_pairs, 30);
    }
}
