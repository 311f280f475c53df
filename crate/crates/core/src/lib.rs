//! Multi-flow routing in wireless interference networks.
//!
//! * [`graph`], [`interference`], [`rate`]: the network model, from link
//!   geometry to SINR, Shannon rates and per-flow utilities.
//! * [`paths`]: diverse candidate paths per flow.
//! * [`nb3r`]: distributed noisy best-response refinement of an allocation.
//! * [`oracle`]: comparison allocations and exhaustive references.

pub mod alloc;
pub mod error;
pub mod graph;
pub mod interference;
pub mod nb3r;
pub mod oracle;
pub mod paths;
pub mod rate;
pub mod scenario;
pub mod topology;

#[cfg(test)]
mod testutil;

pub use alloc::{ActionSpace, LinkActivity, Path, PathAllocation};
pub use error::NetError;
pub use graph::{FlowDemand, FlowId, Link, LinkId, NetworkGraph, Node, NodeId};
pub use interference::{InterferenceMap, InterferenceParams};
pub use rate::{RateModel, UtilityConfig, UtilityKind};
pub use scenario::Scenario;
