//! A network together with its flows, interference map and action spaces.

use crate::alloc::{ActionSpace, PathAllocation};
use crate::error::NetError;
use crate::graph::{FlowDemand, NetworkGraph};
use crate::interference::{InterferenceMap, InterferenceParams};
use crate::paths::build_action_spaces;
use crate::rate::{RateModel, UtilityConfig, UtilityKind};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: NetworkGraph,
    pub flows: Vec<FlowDemand>,
    pub map: InterferenceMap,
    pub spaces: Vec<ActionSpace>,
}

impl Scenario {
    /// Builds `k` candidate paths per flow and the flow neighborhoods they induce.
    pub fn new(
        graph: NetworkGraph,
        flows: Vec<FlowDemand>,
        params: InterferenceParams,
        k: usize,
    ) -> Result<Self, NetError> {
        for (i, f) in flows.iter().enumerate() {
            if f.id != i {
                return Err(NetError::InvalidFlow(f.id, format!("expected id {i}")));
            }
        }
        let mut map = InterferenceMap::build(&graph, params)?;
        let spaces = build_action_spaces(&graph, &flows, k)?;
        map.set_flow_neighbors(&spaces);
        Ok(Scenario {
            graph,
            flows,
            map,
            spaces,
        })
    }

    pub fn model(&self) -> RateModel<'_> {
        RateModel::new(&self.graph, &self.map)
    }

    pub fn utility(&self, kind: UtilityKind) -> UtilityConfig {
        UtilityConfig::for_network(kind, &self.model())
    }

    pub fn num_flows(&self) -> usize {
        self.flows.len()
    }

    pub fn allocation(&self, chosen: Vec<usize>) -> Result<PathAllocation, NetError> {
        PathAllocation::new(self.spaces.clone(), chosen)
    }

    /// Largest payload among the flows (1 if there are none).
    pub fn max_payload(&self) -> f64 {
        let m = self.flows.iter().map(|f| f.payload).fold(0.0, f64::max);
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }
}
