//! Random deployments, the NSFNET and GEANT2 presets, and random demands.

use diamond_core::{FlowDemand, Link, NetworkGraph, Node};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Ranges link attributes are drawn from, uniformly and per directed link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkAttributeRanges {
    pub bandwidth_mhz: [f64; 2],
    pub tx_power_mw: [f64; 2],
    pub noise_mw: f64,
}

impl Default for LinkAttributeRanges {
    fn default() -> Self {
        LinkAttributeRanges {
            bandwidth_mhz: [5.0, 20.0],
            tx_power_mw: [50.0, 200.0],
            noise_mw: 1e-9,
        }
    }
}

impl LinkAttributeRanges {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = |r: [f64; 2]| r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite();
        if !ok(self.bandwidth_mhz) || !ok(self.tx_power_mw) {
            return Err(SimError::Config("attribute ranges need 0 < lo <= hi".into()));
        }
        if !(self.noise_mw > 0.0 && self.noise_mw.is_finite()) {
            return Err(SimError::Config("noise must be > 0".into()));
        }
        Ok(())
    }
}

fn draw<R: Rng + ?Sized>(r: [f64; 2], rng: &mut R) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..r[1])
    }
}

/// Both directions of every pair, attributes drawn per direction.
pub fn expand_pairs<R: Rng + ?Sized>(
    pairs: &[(usize, usize)],
    attrs: &LinkAttributeRanges,
    rng: &mut R,
) -> Vec<Link> {
    let mut links = Vec::with_capacity(2 * pairs.len());
    for &(a, b) in pairs {
        for (tx, rx) in [(a, b), (b, a)] {
            links.push(Link {
                id: links.len(),
                tx,
                rx,
                bandwidth: draw(attrs.bandwidth_mhz, rng),
                tx_power: draw(attrs.tx_power_mw, rng),
                noise_psd: attrs.noise_mw,
            });
        }
    }
    links
}

/// `v` nodes uniform in an `area x area` square joined by `e` bidirectional
/// pairs: a random spanning tree plus uniformly chosen unused pairs.
pub fn random_topology<R: Rng + ?Sized>(
    v: usize,
    e: usize,
    area: f64,
    attrs: &LinkAttributeRanges,
    rng: &mut R,
) -> Result<NetworkGraph, SimError> {
    attrs.validate()?;
    if v < 2 {
        return Err(SimError::Config("a topology needs at least 2 nodes".into()));
    }
    if e < v - 1 {
        return Err(SimError::Config(format!("{e} pairs cannot connect {v} nodes")));
    }
    if e > v * (v - 1) / 2 {
        return Err(SimError::Config(format!("{e} pairs exceed the {} available", v * (v - 1) / 2)));
    }
    if !(area > 0.0 && area.is_finite()) {
        return Err(SimError::Config("area must be > 0".into()));
    }
    let nodes: Vec<Node> = (0..v)
        .map(|id| Node {
            id,
            x: rng.gen_range(0.0..area),
            y: rng.gen_range(0.0..area),
        })
        .collect();
    let mut perm: Vec<usize> = (0..v).collect();
    perm.shuffle(rng);
    let mut used = vec![vec![false; v]; v];
    let mut pairs = Vec::with_capacity(e);
    for i in 1..v {
        let (a, b) = (perm[rng.gen_range(0..i)], perm[i]);
        used[a][b] = true;
        used[b][a] = true;
        pairs.push((a.min(b), a.max(b)));
    }
    let mut rest: Vec<(usize, usize)> = (0..v)
        .flat_map(|a| (a + 1..v).map(move |b| (a, b)))
        .filter(|&(a, b)| !used[a][b])
        .collect();
    rest.shuffle(rng);
    pairs.extend(rest.into_iter().take(e - (v - 1)));
    let links = expand_pairs(&pairs, attrs, rng);
    Ok(NetworkGraph::new(nodes, links)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Nsfnet,
    Geant2,
}

impl std::str::FromStr for Preset {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s.to_ascii_lowercase().as_str() {
            "nsfnet" => Ok(Preset::Nsfnet),
            "geant2" => Ok(Preset::Geant2),
            other => Err(SimError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Deserialize)]
struct PresetFile {
    nodes: Vec<Node>,
    edges: Vec<(usize, usize)>,
}

impl Preset {
    fn data(self) -> &'static str {
        match self {
            Preset::Nsfnet => include_str!("../data/nsfnet.json"),
            Preset::Geant2 => include_str!("../data/geant2.json"),
        }
    }

    /// Undirected adjacency of the preset.
    pub fn edges(self) -> Vec<(usize, usize)> {
        self.parse().edges
    }

    fn parse(self) -> PresetFile {
        serde_json::from_str(self.data()).expect("embedded preset is valid")
    }
}

/// The preset adjacency with link attributes drawn from `attrs`.
pub fn load_preset<R: Rng + ?Sized>(
    preset: Preset,
    attrs: &LinkAttributeRanges,
    rng: &mut R,
) -> Result<NetworkGraph, SimError> {
    attrs.validate()?;
    let file = preset.parse();
    let links = expand_pairs(&file.edges, attrs, rng);
    Ok(NetworkGraph::new(file.nodes, links)?)
}

/// `n` demands with distinct uniform endpoints and payload uniform in `payload_mbit`.
pub fn random_flows<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    n: usize,
    payload_mbit: [f64; 2],
    rng: &mut R,
) -> Result<Vec<FlowDemand>, SimError> {
    if !(payload_mbit[0] > 0.0 && payload_mbit[0] <= payload_mbit[1]) {
        return Err(SimError::Config("payload range needs 0 < lo <= hi".into()));
    }
    let v = graph.num_nodes();
    Ok((0..n)
        .map(|id| {
            let src = rng.gen_range(0..v);
            let dst = (src + rng.gen_range(1..v)) % v;
            FlowDemand {
                id,
                src,
                dst,
                payload: draw(payload_mbit, rng),
            }
        })
        .collect())
}
