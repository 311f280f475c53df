//! Action spaces, strategy profiles and per-link activity bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::NetError;
use crate::graph::{FlowId, LinkId};

/// An ordered list of link ids from a flow's source to its destination.
pub type Path = Vec<LinkId>;

/// The candidate paths `A_n` of one flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    paths: Vec<Path>,
    /// Set when the topology had fewer distinct routes than requested and the
    /// list was padded by repetition.
    padded: bool,
}

impl ActionSpace {
    pub fn new(paths: Vec<Path>, padded: bool) -> Self {
        assert!(!paths.is_empty(), "an action space needs at least one path");
        ActionSpace { paths, padded }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn path(&self, i: usize) -> &[LinkId] {
        &self.paths[i]
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn is_padded(&self) -> bool {
        self.padded
    }

    /// Index of the first occurrence of each distinct path.
    pub fn distinct_indices(&self) -> Vec<usize> {
        (0..self.paths.len())
            .filter(|&i| !self.paths[..i].contains(&self.paths[i]))
            .collect()
    }
}

/// A strategy profile: one chosen path index per flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathAllocation {
    pub action_spaces: Vec<ActionSpace>,
    pub chosen: Vec<usize>,
}

impl PathAllocation {
    pub fn new(action_spaces: Vec<ActionSpace>, chosen: Vec<usize>) -> Result<Self, NetError> {
        let alloc = PathAllocation {
            action_spaces,
            chosen,
        };
        alloc.validate()?;
        Ok(alloc)
    }

    /// Every flow on its first candidate.
    pub fn first_choices(action_spaces: Vec<ActionSpace>) -> Self {
        let chosen = vec![0; action_spaces.len()];
        PathAllocation {
            action_spaces,
            chosen,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.chosen.len() != self.action_spaces.len() {
            return Err(NetError::AllocationMismatch(format!(
                "{} choices for {} flows",
                self.chosen.len(),
                self.action_spaces.len()
            )));
        }
        for (n, (&c, space)) in self.chosen.iter().zip(&self.action_spaces).enumerate() {
            if c >= space.len() {
                return Err(NetError::AllocationMismatch(format!(
                    "flow {n} chose path {c} of {}",
                    space.len()
                )));
            }
        }
        Ok(())
    }

    pub fn num_flows(&self) -> usize {
        self.chosen.len()
    }

    pub fn path(&self, flow: FlowId) -> &[LinkId] {
        self.action_spaces[flow].path(self.chosen[flow])
    }

    /// Size of the joint profile space `prod |A_n|`.
    pub fn profile_count(&self) -> u128 {
        self.action_spaces.iter().map(|s| s.len() as u128).product()
    }
}

/// Which flows currently transmit on each link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkActivity {
    users: Vec<Vec<FlowId>>,
}

impl LinkActivity {
    pub fn new(num_links: usize) -> Self {
        LinkActivity {
            users: vec![Vec::new(); num_links],
        }
    }

    pub fn from_allocation(alloc: &PathAllocation, num_links: usize) -> Self {
        let mut act = Self::new(num_links);
        for n in 0..alloc.num_flows() {
            act.add_path(n, alloc.path(n));
        }
        act
    }

    pub fn num_links(&self) -> usize {
        self.users.len()
    }

    pub fn add_path(&mut self, flow: FlowId, path: &[LinkId]) {
        for &l in path {
            debug_assert!(!self.users[l].contains(&flow), "path revisits link {l}");
            self.users[l].push(flow);
        }
    }

    pub fn remove_path(&mut self, flow: FlowId, path: &[LinkId]) {
        for &l in path {
            let u = &mut self.users[l];
            if let Some(i) = u.iter().position(|&f| f == flow) {
                u.swap_remove(i);
            }
        }
    }

    /// Replaces `flow`'s path `old` by `new`.
    pub fn switch_path(&mut self, flow: FlowId, old: &[LinkId], new: &[LinkId]) {
        self.remove_path(flow, old);
        self.add_path(flow, new);
    }

    pub fn users(&self, link: LinkId) -> &[FlowId] {
        &self.users[link]
    }

    /// Number of flows sharing `link`.
    pub fn load(&self, link: LinkId) -> usize {
        self.users[link].len()
    }

    /// `interferer` radiates toward `victim` when some flow transmits on it
    /// that is not itself carried by `victim`.
    pub fn is_active_against(&self, interferer: LinkId, victim: LinkId) -> bool {
        let own = &self.users[victim];
        self.users[interferer].iter().any(|f| !own.contains(f))
    }

    /// Sorted list of links carrying at least one flow.
    pub fn busy_links(&self) -> Vec<LinkId> {
        (0..self.users.len()).filter(|&l| !self.users[l].is_empty()).collect()
    }
}
