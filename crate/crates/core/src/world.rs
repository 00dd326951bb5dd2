//! Static domain description: locations, movement graph, radio nodes, targets.
//!
//! A `WorldMap` is immutable after load and shared read-only by the planner,
//! the agents and the harness. UAV motion is restricted to the adjacency
//! graph; radio contact is a function of euclidean distance and is computed
//! elsewhere (see `connectivity`).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// A waypoint on the integer grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub x: i32,
    pub y: i32,
}

impl Location {
    pub const fn new(x: i32, y: i32) -> Self {
        Location { x, y }
    }
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Squared euclidean distance in grid units².
///
/// Kept squared so range checks (`d ≤ ρ²`) stay in integer arithmetic.
pub fn dist2(a: Location, b: Location) -> i64 {
    let dx = (a.x - b.x) as i64;
    let dy = (a.y - b.y) as i64;
    dx * dx + dy * dy
}

/// What kind of radio node an id refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    HomeBase,
    Relay,
    Uav,
}

/// Index into `WorldMap::nodes`. All radio nodes (home base, relays, UAVs)
/// share one id space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u16);

/// Index into `WorldMap::uavs` (the subset of nodes that move).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UavId(pub u16);

/// Index into `WorldMap::targets`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetId(pub u16);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeInfo {
    pub name: String,
    pub kind: NodeKind,
    /// Fixed position for the home base and relays; `None` for UAVs, whose
    /// position lives in the dynamic state.
    pub fixed_pos: Option<Location>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetInfo {
    pub name: String,
    pub location: Location,
}

/// The static world: waypoints, the movement graph, radio nodes and targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldMap {
    locations: Vec<Location>,
    /// Adjacency lists, parallel to `locations`. Irreflexive and symmetric.
    adjacency: Vec<Vec<usize>>,
    nodes: Vec<NodeInfo>,
    /// Node ids of the UAVs, in declaration order.
    uavs: Vec<NodeId>,
    targets: Vec<TargetInfo>,
    radio_range: i64,
    #[serde(skip)]
    loc_index: BTreeMap<Location, usize>,
}

impl WorldMap {
    /// Builds and validates a map. `edges` are undirected; duplicates are
    /// merged. Exactly one home base is required, node names must be unique,
    /// node and target locations must be waypoints, and the movement graph
    /// must be connected.
    pub fn new(
        locations: Vec<Location>,
        edges: Vec<(Location, Location)>,
        nodes: Vec<NodeInfo>,
        targets: Vec<TargetInfo>,
        radio_range: i64,
    ) -> Result<Self, DomainError> {
        if radio_range <= 0 {
            return Err(DomainError::Validation("radio_range must be positive".into()));
        }
        let mut loc_index = BTreeMap::new();
        for (i, l) in locations.iter().enumerate() {
            if loc_index.insert(*l, i).is_some() {
                return Err(DomainError::Validation(format!("duplicate location {l}")));
            }
        }
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); locations.len()];
        for (a, b) in &edges {
            let (ia, ib) = match (loc_index.get(a), loc_index.get(b)) {
                (Some(&ia), Some(&ib)) => (ia, ib),
                _ => {
                    return Err(DomainError::Validation(format!(
                        "edge endpoint {a} or {b} is not a location"
                    )))
                }
            };
            if ia == ib {
                return Err(DomainError::Validation(format!("self-loop edge at {a}")));
            }
            adj[ia].insert(ib);
            adj[ib].insert(ia);
        }

        let mut names = BTreeSet::new();
        let mut base_count = 0usize;
        let mut uavs = Vec::new();
        for (i, n) in nodes.iter().enumerate() {
            if !names.insert(n.name.clone()) {
                return Err(DomainError::Validation(format!("duplicate node id {}", n.name)));
            }
            match n.kind {
                NodeKind::HomeBase => {
                    base_count += 1;
                    if n.fixed_pos.is_none() {
                        return Err(DomainError::Validation("home base needs a position".into()));
                    }
                }
                NodeKind::Relay => {
                    if n.fixed_pos.is_none() {
                        return Err(DomainError::Validation(format!(
                            "relay {} needs a position",
                            n.name
                        )));
                    }
                }
                NodeKind::Uav => uavs.push(NodeId(i as u16)),
            }
            if let Some(p) = n.fixed_pos {
                if !loc_index.contains_key(&p) {
                    return Err(DomainError::Validation(format!(
                        "node {} at {p} is not on a waypoint",
                        n.name
                    )));
                }
            }
        }
        if base_count != 1 {
            return Err(DomainError::Validation(format!(
                "expected exactly one home base, found {base_count}"
            )));
        }
        for t in &targets {
            if !loc_index.contains_key(&t.location) {
                return Err(DomainError::Validation(format!(
                    "target {} at {} is not on a waypoint",
                    t.name, t.location
                )));
            }
        }
        if nodes.len() > 64 {
            return Err(DomainError::Validation("more than 64 radio nodes".into()));
        }

        // Connectivity of the movement graph.
        if !locations.is_empty() {
            let mut seen = vec![false; locations.len()];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for &j in &adj[i] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(DomainError::Validation("movement graph is not connected".into()));
            }
        }

        Ok(WorldMap {
            locations,
            adjacency: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
            nodes,
            uavs,
            targets,
            radio_range,
            loc_index,
        })
    }


    /// Builds a full `width`×`height` 4-connected grid.
    pub fn four_connected(
        width: i32,
        height: i32,
        nodes: Vec<NodeInfo>,
        targets: Vec<TargetInfo>,
        radio_range: i64,
    ) -> Result<Self, DomainError> {
        let mut locations = Vec::new();
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                let l = Location::new(x, y);
                locations.push(l);
                if x + 1 < width {
                    edges.push((l, Location::new(x + 1, y)));
                }
                if y + 1 < height {
                    edges.push((l, Location::new(x, y + 1)));
                }
            }
        }
        Self::new(locations, edges, nodes, targets, radio_range)
    }

    pub fn radio_range(&self) -> i64 {
        self.radio_range
    }

    /// ρ², the direct-link threshold for squared distances.
    pub fn range2(&self) -> i64 {
        self.radio_range * self.radio_range
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn contains(&self, l: Location) -> bool {
        self.loc_index.contains_key(&l)
    }

    pub fn loc_idx(&self, l: Location) -> Option<usize> {
        self.loc_index.get(&l).copied()
    }

    /// The movement neighbors of `l`. Never contains `l` itself.
    pub fn neighbors(&self, l: Location) -> Result<Vec<Location>, DomainError> {
        let i = self
            .loc_idx(l)
            .ok_or_else(|| DomainError::UnknownLocation(l))?;
        Ok(self.adjacency[i].iter().map(|&j| self.locations[j]).collect())
    }

    pub fn is_adjacent(&self, a: Location, b: Location) -> bool {
        match (self.loc_idx(a), self.loc_idx(b)) {
            (Some(ia), Some(ib)) => self.adjacency[ia].contains(&ib),
            _ => false,
        }
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeInfo {
        &self.nodes[id.0 as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .map(|i| NodeId(i as u16))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(|i| NodeId(i as u16))
    }

    pub fn home_base(&self) -> NodeId {
        NodeId(
            self.nodes
                .iter()
                .position(|n| n.kind == NodeKind::HomeBase)
                .expect("validated: exactly one home base") as u16,
        )
    }

    pub fn relays(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Relay)
            .map(|(i, _)| NodeId(i as u16))
    }

    /// UAV node ids in declaration order; `UavId(k)` is the k-th entry.
    pub fn uavs(&self) -> &[NodeId] {
        &self.uavs
    }

    pub fn uav_count(&self) -> usize {
        self.uavs.len()
    }

    pub fn uav_ids(&self) -> impl Iterator<Item = UavId> + '_ {
        (0..self.uavs.len() as u16).map(UavId)
    }

    pub fn uav_node(&self, u: UavId) -> NodeId {
        self.uavs[u.0 as usize]
    }

    /// Reverse lookup: which UAV a node id is, if any.
    pub fn uav_of_node(&self, n: NodeId) -> Option<UavId> {
        self.uavs.iter().position(|&x| x == n).map(|i| UavId(i as u16))
    }

    pub fn uav_name(&self, u: UavId) -> &str {
        &self.node(self.uav_node(u)).name
    }

    pub fn targets(&self) -> &[TargetInfo] {
        &self.targets
    }

    pub fn target_count(&self) -> usize {
        self.targets.len()
    }

    pub fn target_ids(&self) -> impl Iterator<Item = TargetId> + '_ {
        (0..self.targets.len()).map(|i| TargetId(i as u16))
    }

    pub fn target(&self, t: TargetId) -> &TargetInfo {
        &self.targets[t.0 as usize]
    }

    /// Targets located at `l`, if any.
    pub fn targets_at(&self, l: Location) -> impl Iterator<Item = TargetId> + '_ {
        self.targets
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.location == l)
            .map(|(i, _)| TargetId(i as u16))
    }

    /// All-pairs hop distances over the movement graph (BFS from every
    /// waypoint). Used as an admissible travel bound by the planner.
    pub fn hop_distances(&self) -> Vec<Vec<u32>> {
        let n = self.locations.len();
        let mut out = vec![vec![u32::MAX; n]; n];
        for s in 0..n {
            let dist = &mut out[s];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(i) = queue.pop_front() {
                for &j in &self.adjacency[i] {
                    if dist[j] == u32::MAX {
                        dist[j] = dist[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        out
    }
}
