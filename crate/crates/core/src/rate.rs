//! SINR, Shannon link rates, bottleneck flow rates and utilities.
//!
//! Rates are `B * log2(1 + SINR)` in Mbps for bandwidth in MHz. A link carrying
//! several flows splits its rate equally between them; a flow's rate is the
//! minimum over the links of its path.

use serde::{Deserialize, Serialize};

use crate::alloc::{LinkActivity, PathAllocation};
use crate::error::NetError;
use crate::graph::{FlowId, LinkId, NetworkGraph};
use crate::interference::InterferenceMap;

/// Lower clamp applied to rates before taking logarithms (Mbps).
pub const RATE_FLOOR_MBPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UtilityKind {
    #[default]
    Rate,
    LogRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityConfig {
    pub kind: UtilityKind,
    /// Upper bound on any single flow utility.
    pub u_max: f64,
}

impl UtilityConfig {
    /// Bound derived from the best interference-free, unshared link in the network.
    pub fn for_network(kind: UtilityKind, model: &RateModel<'_>) -> Self {
        let best = (0..model.graph.num_links())
            .map(|l| model.isolated_rate(l))
            .fold(0.0, f64::max);
        let u_max = match kind {
            UtilityKind::Rate => best,
            UtilityKind::LogRate => best.max(RATE_FLOOR_MBPS).log2(),
        };
        UtilityConfig { kind, u_max }
    }

    /// Utility of a flow achieving `rate` Mbps, never above `u_max`.
    pub fn utility(&self, rate: f64) -> f64 {
        let u = match self.kind {
            UtilityKind::Rate => rate,
            UtilityKind::LogRate => rate.max(RATE_FLOOR_MBPS).log2(),
        };
        u.min(self.u_max)
    }

    /// Width of the range a single flow utility can span.
    pub fn span(&self) -> f64 {
        match self.kind {
            UtilityKind::Rate => self.u_max,
            UtilityKind::LogRate => self.u_max - RATE_FLOOR_MBPS.log2(),
        }
    }
}

/// `bandwidth * log2(1 + sinr) / sharers`, unshared when `sharers == 0`.
pub fn shannon_rate(bandwidth: f64, sinr: f64, sharers: usize) -> f64 {
    bandwidth * (1.0 + sinr).log2() / sharers.max(1) as f64
}

/// Physical-layer evaluator over a graph and its interference map.
#[derive(Debug, Clone, Copy)]
pub struct RateModel<'a> {
    pub graph: &'a NetworkGraph,
    pub map: &'a InterferenceMap,
}

impl<'a> RateModel<'a> {
    pub fn new(graph: &'a NetworkGraph, map: &'a InterferenceMap) -> Self {
        debug_assert_eq!(graph.num_links(), map.num_links());
        RateModel { graph, map }
    }

    fn check_link(&self, link: LinkId) -> Result<(), NetError> {
        if link < self.graph.num_links() {
            Ok(())
        } else {
            Err(NetError::UnknownLink(link))
        }
    }

    /// Cumulative interference power (mW) at `link`'s receiver.
    pub fn interference(&self, link: LinkId, act: &LinkActivity) -> Result<f64, NetError> {
        self.check_link(link)?;
        Ok(self.interference_unchecked(link, act))
    }

    fn interference_unchecked(&self, link: LinkId, act: &LinkActivity) -> f64 {
        self.map
            .link_neighbors(link)
            .iter()
            .filter(|&&(e, _)| act.is_active_against(e, link))
            .map(|&(_, p)| p)
            .sum()
    }

    pub fn sinr(&self, link: LinkId, act: &LinkActivity) -> Result<f64, NetError> {
        self.check_link(link)?;
        Ok(self.sinr_unchecked(link, act))
    }

    fn sinr_unchecked(&self, link: LinkId, act: &LinkActivity) -> f64 {
        let noise = self.graph.links()[link].noise_psd;
        self.map.received_power(link) / (self.interference_unchecked(link, act) + noise)
    }

    /// Per-flow rate (Mbps) on `link` under equal sharing.
    pub fn link_rate(&self, link: LinkId, act: &LinkActivity) -> Result<f64, NetError> {
        self.check_link(link)?;
        Ok(self.link_rate_unchecked(link, act))
    }

    fn link_rate_unchecked(&self, link: LinkId, act: &LinkActivity) -> f64 {
        let bw = self.graph.links()[link].bandwidth;
        shannon_rate(bw, self.sinr_unchecked(link, act), act.load(link))
    }

    /// Rate of `link` with no interference and no sharing.
    pub fn isolated_rate(&self, link: LinkId) -> f64 {
        let l = &self.graph.links()[link];
        shannon_rate(l.bandwidth, self.map.received_power(link) / l.noise_psd, 1)
    }

    /// Bottleneck rate along `path`; link ids must be valid.
    pub fn path_rate(&self, path: &[LinkId], act: &LinkActivity) -> f64 {
        path.iter()
            .map(|&l| self.link_rate_unchecked(l, act))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn flow_rate(&self, alloc: &PathAllocation, flow: FlowId) -> Result<f64, NetError> {
        let act = self.activity(alloc)?;
        self.flow_rate_with(alloc, flow, &act)
    }

    pub fn flow_rate_with(
        &self,
        alloc: &PathAllocation,
        flow: FlowId,
        act: &LinkActivity,
    ) -> Result<f64, NetError> {
        if flow >= alloc.num_flows() {
            return Err(NetError::AllocationMismatch(format!("unknown flow {flow}")));
        }
        Ok(self.path_rate(alloc.path(flow), act))
    }

    pub fn flow_utility(
        &self,
        alloc: &PathAllocation,
        flow: FlowId,
        cfg: &UtilityConfig,
    ) -> Result<f64, NetError> {
        Ok(cfg.utility(self.flow_rate(alloc, flow)?))
    }

    /// Sum of flow utilities: both the optimization objective and the game's potential.
    pub fn network_utility(
        &self,
        alloc: &PathAllocation,
        cfg: &UtilityConfig,
    ) -> Result<f64, NetError> {
        let act = self.activity(alloc)?;
        Ok(self.network_utility_with(alloc, &act, cfg))
    }

    /// As [`Self::network_utility`], reusing an activity consistent with `alloc`.
    pub fn network_utility_with(
        &self,
        alloc: &PathAllocation,
        act: &LinkActivity,
        cfg: &UtilityConfig,
    ) -> f64 {
        (0..alloc.num_flows())
            .map(|n| cfg.utility(self.path_rate(alloc.path(n), act)))
            .sum()
    }

    /// Validates `alloc` against the graph and builds its link activity.
    pub fn activity(&self, alloc: &PathAllocation) -> Result<LinkActivity, NetError> {
        alloc.validate()?;
        let e = self.graph.num_links();
        if let Some(&bad) = alloc
            .action_spaces
            .iter()
            .flat_map(|s| s.paths().iter().flatten())
            .find(|&&l| l >= e)
        {
            return Err(NetError::UnknownLink(bad));
        }
        Ok(LinkActivity::from_allocation(alloc, e))
    }
}
