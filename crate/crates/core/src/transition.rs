//! Dynamic state and the one-step world update.
//!
//! A step applies, in order: exogenous breaks, UAV moves, automatic
//! photography at target locations, picture flooding within radio
//! components, and delivery bookkeeping at the home base.

use serde::{Deserialize, Serialize};

use crate::connectivity::LinkView;
use crate::error::DomainError;
use crate::world::{Location, NodeId, TargetId, UavId, WorldMap};

/// One UAV's action for a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Move(UavId, Location),
    Wait(UavId),
}

impl Action {
    pub fn uav(&self) -> UavId {
        match *self {
            Action::Move(u, _) => u,
            Action::Wait(u) => u,
        }
    }
}

/// Events outside any agent's control. `step` is the step the event occurs
/// at; its effects are visible from `step + 1` on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExoEvent {
    Break { node: NodeId, step: u32 },
    Aborted { uav: UavId, step: u32 },
    Unpredictable { uav: UavId, step: u32 },
}

impl ExoEvent {
    pub fn step(&self) -> u32 {
        match *self {
            ExoEvent::Break { step, .. }
            | ExoEvent::Aborted { step, .. }
            | ExoEvent::Unpredictable { step, .. } => step,
        }
    }
}

/// Per-target dynamic record. `taken_at` is the first capture step and is
/// never refreshed; `holders` is a node bitmask; `delivered` is the step the
/// picture first reached the home base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetState {
    pub taken_at: Option<u32>,
    pub holders: u64,
    pub delivered: Option<u32>,
}

impl TargetState {
    pub const fn untaken() -> Self {
        TargetState {
            taken_at: None,
            holders: 0,
            delivered: None,
        }
    }
}

/// Complete fluent assignment at one step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub step: u32,
    /// UAV positions, indexed by `UavId`.
    pub at: Vec<Location>,
    /// Bit i set ⇔ node i is down.
    pub down: u64,
    pub targets: Vec<TargetState>,
}

impl State {
    pub fn initial(map: &WorldMap, uav_positions: Vec<Location>) -> Result<Self, DomainError> {
        if uav_positions.len() != map.uav_count() {
            return Err(DomainError::Validation(format!(
                "expected {} UAV start positions, got {}",
                map.uav_count(),
                uav_positions.len()
            )));
        }
        for &p in &uav_positions {
            if !map.contains(p) {
                return Err(DomainError::UnknownLocation(p));
            }
        }
        Ok(State {
            step: 0,
            at: uav_positions,
            down: 0,
            targets: vec![TargetState::untaken(); map.target_count()],
        })
    }

    pub fn pos(&self, u: UavId) -> Location {
        self.at[u.0 as usize]
    }

    pub fn is_down(&self, n: NodeId) -> bool {
        self.down & (1 << n.0) != 0
    }

    pub fn holds(&self, n: NodeId, t: TargetId) -> bool {
        self.targets[t.0 as usize].holders & (1 << n.0) != 0
    }

    /// Targets held by node `n`.
    pub fn pics_of(&self, n: NodeId) -> Vec<TargetId> {
        (0..self.targets.len() as u16)
            .map(TargetId)
            .filter(|t| self.holds(n, *t))
            .collect()
    }

    pub fn all_delivered(&self) -> bool {
        self.targets.iter().all(|t| t.delivered.is_some())
    }

    /// Radio view of this state: node positions (fixed for base/relays,
    /// dynamic for UAVs) and the up mask.
    pub fn link_view(&self, map: &WorldMap) -> LinkView {
        let positions = map
            .node_ids()
            .map(|n| match map.node(n).fixed_pos {
                Some(p) => p,
                None => self.pos(map.uav_of_node(n).expect("UAV node")),
            })
            .collect();
        let all = if map.node_count() == 64 {
            u64::MAX
        } else {
            (1u64 << map.node_count()) - 1
        };
        LinkView {
            up_mask: all & !self.down,
            positions,
            range2: map.range2(),
        }
    }
}

/// Whether `a` can be executed in `s`: moves must follow the movement graph
/// and the UAV must be up; waits are always executable.
pub fn executable(s: &State, a: &Action, map: &WorldMap) -> Result<bool, DomainError> {
    let u = a.uav();
    if u.0 as usize >= map.uav_count() {
        return Err(DomainError::UnknownUav(format!("uav #{}", u.0)));
    }
    match a {
        Action::Wait(_) => Ok(true),
        Action::Move(_, l) => {
            if s.is_down(map.uav_node(u)) {
                return Ok(false);
            }
            Ok(map.is_adjacent(s.pos(u), *l))
        }
    }
}

/// One-step world update. Order: breaks, moves, photography, flooding,
/// delivery, step increment. Rejects non-executable actions.
pub fn apply(
    s: &State,
    joint: &[Action],
    exo: &[ExoEvent],
    map: &WorldMap,
) -> Result<State, DomainError> {
    for a in joint {
        if !executable(s, a, map)? {
            return Err(DomainError::NotExecutable(format!(
                "{} at step {}: {:?}",
                map.uav_name(a.uav()),
                s.step,
                a
            )));
        }
    }
    let mut next = s.clone();
    next.step = s.step + 1;

    // (1) breaks
    for e in exo {
        if let ExoEvent::Break { node, .. } = e {
            next.down |= 1 << node.0;
        }
    }

    // (2) moves
    for a in joint {
        if let Action::Move(u, l) = a {
            next.at[u.0 as usize] = *l;
        }
    }

    // (3) photography: a UAV standing on an unphotographed target captures it
    for u in 0..map.uav_count() {
        let uav = UavId(u as u16);
        let node = map.uav_node(uav);
        if next.is_down(node) {
            continue;
        }
        for t in map.targets_at(next.pos(uav)) {
            let ts = &mut next.targets[t.0 as usize];
            if ts.taken_at.is_none() {
                ts.taken_at = Some(next.step);
            }
            // Re-visits gain a copy but keep the first-capture timestamp.
            ts.holders |= 1 << node.0;
        }
    }

    flood_and_deliver(&mut next, map);
    Ok(next)
}

/// Picture flooding within each radio component, then delivery bookkeeping.
/// Idempotent for a fixed set of positions.
pub(crate) fn flood_and_deliver(next: &mut State, map: &WorldMap) {
    let view = next.link_view(map);
    let components = view.components();
    let base_bit = 1u64 << map.home_base().0;
    for ts in &mut next.targets {
        if ts.taken_at.is_none() {
            continue;
        }
        for comp in &components {
            if ts.holders & comp != 0 {
                ts.holders |= comp;
            }
        }
        if ts.delivered.is_none() && ts.holders & base_bit != 0 {
            ts.delivered = Some(next.step);
        }
    }
}

/// Σ over delivered targets of (delivered − taken_at). Undelivered pictures
/// contribute nothing here; end-of-mission accounting is the harness's job.
pub fn total_staleness(s: &State) -> u64 {
    s.targets
        .iter()
        .filter_map(|t| Some((t.delivered? - t.taken_at.expect("delivered implies taken")) as u64))
        .sum()
}
