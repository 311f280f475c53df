//! JSON topology files: nodes, links, optional flows and interference settings.
//!
//! Link ids are assigned by position in the `links` array, flow ids by
//! position in `flows`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::NetError;
use crate::graph::{FlowDemand, Link, NetworkGraph, Node};
use crate::interference::InterferenceParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub tx: usize,
    pub rx: usize,
    pub bandwidth_mhz: f64,
    pub tx_power_mw: f64,
    pub noise_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub src: usize,
    pub dst: usize,
    pub payload_mbit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub nodes: Vec<NodeRecord>,
    pub links: Vec<LinkRecord>,
    #[serde(default)]
    pub flows: Vec<FlowRecord>,
    #[serde(default)]
    pub interference: InterferenceParams,
}

impl TopologyFile {
    pub fn from_parts(
        graph: &NetworkGraph,
        flows: &[FlowDemand],
        interference: InterferenceParams,
    ) -> Self {
        TopologyFile {
            nodes: graph
                .nodes()
                .iter()
                .map(|n| NodeRecord { id: n.id, x: n.x, y: n.y })
                .collect(),
            links: graph
                .links()
                .iter()
                .map(|l| LinkRecord {
                    tx: l.tx,
                    rx: l.rx,
                    bandwidth_mhz: l.bandwidth,
                    tx_power_mw: l.tx_power,
                    noise_mw: l.noise_psd,
                })
                .collect(),
            flows: flows
                .iter()
                .map(|f| FlowRecord {
                    src: f.src,
                    dst: f.dst,
                    payload_mbit: f.payload,
                })
                .collect(),
            interference,
        }
    }

    /// Validated graph, flows and interference settings.
    pub fn to_parts(&self) -> Result<(NetworkGraph, Vec<FlowDemand>, InterferenceParams), NetError> {
        let mut nodes: Vec<Node> = self
            .nodes
            .iter()
            .map(|n| Node { id: n.id, x: n.x, y: n.y })
            .collect();
        nodes.sort_by_key(|n| n.id);
        let links = self
            .links
            .iter()
            .enumerate()
            .map(|(id, l)| Link {
                id,
                tx: l.tx,
                rx: l.rx,
                bandwidth: l.bandwidth_mhz,
                tx_power: l.tx_power_mw,
                noise_psd: l.noise_mw,
            })
            .collect();
        let graph = NetworkGraph::new(nodes, links)?;
        let flows: Vec<FlowDemand> = self
            .flows
            .iter()
            .enumerate()
            .map(|(id, f)| FlowDemand {
                id,
                src: f.src,
                dst: f.dst,
                payload: f.payload_mbit,
            })
            .collect();
        for f in &flows {
            graph.validate_flow(f)?;
        }
        Ok((graph, flows, self.interference))
    }

    pub fn from_json(text: &str) -> Result<Self, NetError> {
        serde_json::from_str(text).map_err(|e| NetError::TopologyFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| NetError::TopologyFile(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NetError> {
        let path = path.as_ref();
        fs::write(path, self.to_json())
            .map_err(|e| NetError::TopologyFile(format!("{}: {e}", path.display())))
    }
}
