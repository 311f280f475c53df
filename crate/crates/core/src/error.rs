use thiserror::Error;

use crate::graph::{FlowId, LinkId, NodeId};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid flow {0}: {1}")]
    InvalidFlow(FlowId, String),
    #[error("unknown link id {0}")]
    UnknownLink(LinkId),
    #[error("no path from node {src} to node {dst}")]
    Unreachable { src: NodeId, dst: NodeId },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("allocation does not match the flow set: {0}")]
    AllocationMismatch(String),
    #[error("search space of {size} profiles exceeds the guard of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },
    #[error("topology file: {0}")]
    TopologyFile(String),
}
