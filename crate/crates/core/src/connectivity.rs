//! The defined fluent `in_contact`: direct radio links and their transitive
//! closure over nodes that are up.
//!
//! `in_contact` is recomputed from scratch on every query state; it is not
//! inertial. A down node can neither relay nor be a chain endpoint.

use crate::error::DomainError;
use crate::world::{dist2, Location, NodeId};

/// A snapshot of everything radio contact depends on: which nodes are up,
/// where every node is, and the radio range.
#[derive(Debug, Clone)]
pub struct LinkView {
    /// Bit i set ⇔ node i is up.
    pub up_mask: u64,
    /// Position of node i; meaningful only for up nodes, but kept total.
    pub positions: Vec<Location>,
    pub range2: i64,
}

impl LinkView {
    pub fn is_up(&self, n: NodeId) -> bool {
        self.up_mask & (1 << n.0) != 0
    }

    fn check_distinct(a: NodeId, b: NodeId) -> Result<(), DomainError> {
        if a == b {
            Err(DomainError::SameNode(format!("node #{}", a.0)))
        } else {
            Ok(())
        }
    }

    /// Direct link: both endpoints up and within radio range.
    pub fn direct_link(&self, a: NodeId, b: NodeId) -> Result<bool, DomainError> {
        Self::check_distinct(a, b)?;
        Ok(self.is_up(a)
            && self.is_up(b)
            && dist2(self.positions[a.0 as usize], self.positions[b.0 as usize]) <= self.range2)
    }

    /// Transitive radio contact through up nodes (closed world: anything not
    /// derivable is false).
    pub fn in_contact(&self, a: NodeId, b: NodeId) -> Result<bool, DomainError> {
        Self::check_distinct(a, b)?;
        Ok(self.component_of(a) & (1 << b.0) != 0)
    }

    /// Every node in radio contact with `a` (excluding `a`). Empty if `a`
    /// is down.
    pub fn reachable_set(&self, a: NodeId) -> Vec<NodeId> {
        let comp = self.component_of(a);
        (0..self.positions.len() as u16)
            .map(NodeId)
            .filter(|&n| n != a && comp & (1 << n.0) != 0)
            .collect()
    }

    /// Bitmask of the connected component containing `a` in the direct-link
    /// graph (including `a` itself). Zero if `a` is down.
    pub fn component_of(&self, a: NodeId) -> u64 {
        if !self.is_up(a) {
            return 0;
        }
        let n = self.positions.len();
        let mut comp: u64 = 1 << a.0;
        let mut stack = vec![a.0 as usize];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let bit = 1u64 << j;
                if comp & bit != 0 || self.up_mask & bit == 0 {
                    continue;
                }
                if dist2(self.positions[i], self.positions[j]) <= self.range2 {
                    comp |= bit;
                    stack.push(j);
                }
            }
        }
        comp
    }

    /// All connected components over up nodes, as bitmasks.
    pub fn components(&self) -> Vec<u64> {
        let n = self.positions.len();
        let mut seen: u64 = 0;
        let mut out = Vec::new();
        for i in 0..n as u16 {
            let bit = 1u64 << i;
            if seen & bit != 0 || self.up_mask & bit == 0 {
                continue;
            }
            let comp = self.component_of(NodeId(i));
            seen |= comp;
            out.push(comp);
        }
        out
    }
}
