//! Mission planning and plan evaluation.
//!
//! Plans are optimal under the lexicographic objective (mission length,
//! then total staleness). The search runs in two phases: an A* pass finds
//! the minimum horizon at which the goal can be delivered, then a layered
//! Dijkstra pass minimizes accrued staleness at that horizon. Staleness
//! accrues one unit per step for every picture taken but not yet delivered,
//! which sums to Σ (delivered − taken) for plans that deliver everything.
//!
//! The same machinery serves three entry points: centralized planning over
//! all UAVs, per-agent replanning (every other UAV's future is scripted by
//! its behavior model), and the network-unaware baseline (delivery only via
//! a direct link between a UAV and the home base, no relaying or sharing).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::PlanningFailure;
use crate::transition::{Action, ExoEvent, State, TargetState};
use crate::world::{dist2, Location, TargetId, UavId, WorldMap};

/// Per-UAV timed action sequences, all of length `horizon`. Step k of the
/// plan is the action taken in state k (effective at k+1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub horizon: u32,
    /// Indexed by `UavId`, then by step offset from `start_step`.
    pub actions: Vec<Vec<Action>>,
    /// Absolute step the plan starts at (0 for whole missions).
    pub start_step: u32,
}

impl Plan {
    pub fn empty(uav_count: usize) -> Self {
        Plan {
            horizon: 0,
            actions: vec![Vec::new(); uav_count],
            start_step: 0,
        }
    }

    /// Action of `u` at absolute step `step`; `Wait` outside the plan.
    pub fn action_at(&self, u: UavId, step: u32) -> Action {
        if step < self.start_step {
            return Action::Wait(u);
        }
        let k = (step - self.start_step) as usize;
        self.actions
            .get(u.0 as usize)
            .and_then(|v| v.get(k))
            .copied()
            .unwrap_or(Action::Wait(u))
    }
}

/// Mission goal: targets that must be photographed and delivered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub targets: Vec<TargetId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub mission_length: u32,
    pub total_staleness: u64,
    pub delivered_count: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PlannerConfig {
    pub max_horizon: u32,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_horizon: 40,
            seed: 0,
        }
    }
}

/// Delivery semantics used inside the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NetModel {
    /// Full model: multi-hop contact, instant flooding within components.
    Aware,
    /// Baseline: no relays, no sharing; a picture is delivered only while a
    /// holder UAV is within direct range of the home base.
    Unaware,
}

/// Compact per-target search record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Ts {
    Untaken,
    Taken { holders: u64 },
    Delivered,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key {
    step: u32,
    /// Location indices of the controlled UAVs.
    locs: Vec<u32>,
    targets: Vec<Ts>,
}

struct SearchCtx<'a> {
    map: &'a WorldMap,
    model: NetModel,
    /// UAVs optimized by the search.
    controlled: Vec<UavId>,
    /// Scripted positions of every UAV (controlled columns unused), indexed
    /// [step − start_step][uav].
    scripted: Vec<Vec<Location>>,
    start_step: u32,
    down: u64,
    goal_mask: u64,
    hops: Vec<Vec<u32>>,
    /// Seeded per-UAV, per-location expansion order for tie-breaking.
    action_order: Vec<Vec<Vec<Location>>>,
}

impl<'a> SearchCtx<'a> {
    fn goal_done(&self, key: &Key) -> bool {
        (0..key.targets.len())
            .filter(|i| self.goal_mask & (1 << i) != 0)
            .all(|i| key.targets[i] == Ts::Delivered)
    }

    fn pending(&self, targets: &[Ts]) -> u64 {
        targets
            .iter()
            .enumerate()
            .filter(|(i, t)| self.goal_mask & (1 << i) != 0 && matches!(t, Ts::Taken { .. }))
            .count() as u64
    }

    /// Admissible remaining-steps bound: a controlled or scripted UAV must
    /// still travel to every untaken goal target; any outstanding picture
    /// needs at least one more step to be delivered.
    fn h_steps(&self, key: &Key) -> u32 {
        let mut h = 0u32;
        let mut outstanding = false;
        for (i, ts) in key.targets.iter().enumerate() {
            if self.goal_mask & (1 << i) == 0 {
                continue;
            }
            match ts {
                Ts::Delivered => {}
                Ts::Taken { .. } => outstanding = true,
                Ts::Untaken => {
                    outstanding = true;
                    let t_loc = self.map.target(TargetId(i as u16)).location;
                    let t_idx = self.map.loc_idx(t_loc).expect("target on map") as usize;
                    let mut best = u32::MAX;
                    for (ci, _) in self.controlled.iter().enumerate() {
                        best = best.min(self.hops[key.locs[ci] as usize][t_idx]);
                    }
                    // A scripted UAV may also photograph it along its script.
                    let k0 = (key.step - self.start_step) as usize;
                    for (off, layer) in self.scripted.iter().enumerate().skip(k0 + 1) {
                        for (ui, &p) in layer.iter().enumerate() {
                            if self.controlled.iter().any(|c| c.0 as usize == ui) {
                                continue;
                            }
                            if p == t_loc {
                                best = best.min((off - k0) as u32);
                            }
                        }
                    }
                    if best == u32::MAX {
                        return u32::MAX;
                    }
                    h = h.max(best);
                }
            }
        }
        h.max(outstanding as u32)
    }

    /// Joint successor: applies controlled moves + scripted moves, then
    /// photography and delivery under the network model. Returns the new
    /// target records and the staleness accrued by the step.
    fn step_targets(&self, next_step: u32, positions: &[Location], targets: &[Ts]) -> (Vec<Ts>, u64) {
        let _ = next_step;
        let mut out: Vec<Ts> = targets.to_vec();
        let n_uavs = self.map.uav_count();
        // Photography.
        for (i, ts) in out.iter_mut().enumerate() {
            if let Ts::Untaken = ts {
                let t_loc = self.map.target(TargetId(i as u16)).location;
                let mut holders = 0u64;
                for u in 0..n_uavs {
                    let node = self.map.uav_node(UavId(u as u16));
                    if positions[u] == t_loc && self.down & (1 << node.0) == 0 {
                        holders |= 1 << node.0;
                    }
                }
                if holders != 0 {
                    *ts = Ts::Taken { holders };
                }
            // A UAV standing on an already-taken target gains a copy.
            } else if let Ts::Taken { holders } = ts {
                let t_loc = self.map.target(TargetId(i as u16)).location;
                let mut h = *holders;
                for u in 0..n_uavs {
                    let node = self.map.uav_node(UavId(u as u16));
                    if positions[u] == t_loc && self.down & (1 << node.0) == 0 {
                        h |= 1 << node.0;
                    }
                }
                *ts = Ts::Taken { holders: h };
            }
        }
        // Sharing and delivery.
        match self.model {
            NetModel::Aware => {
                let state = self.as_state(positions);
                let view = state.link_view(self.map);
                let comps = view.components();
                let base_bit = 1u64 << self.map.home_base().0;
                for ts in out.iter_mut() {
                    if let Ts::Taken { holders } = ts {
                        let mut h = *holders;
                        for c in &comps {
                            if h & c != 0 {
                                h |= c;
                            }
                        }
                        if h & base_bit != 0 {
                            *ts = Ts::Delivered;
                        } else {
                            *ts = Ts::Taken { holders: h };
                        }
                    }
                }
            }
            NetModel::Unaware => {
                let base_loc = self
                    .map
                    .node(self.map.home_base())
                    .fixed_pos
                    .expect("base position");
                let base_up = self.down & (1 << self.map.home_base().0) == 0;
                for ts in out.iter_mut() {
                    if let Ts::Taken { holders } = ts {
                        let within = (0..n_uavs).any(|u| {
                            let node = self.map.uav_node(UavId(u as u16));
                            *holders & (1 << node.0) != 0
                                && self.down & (1 << node.0) == 0
                                && dist2(positions[u], base_loc) <= self.map.range2()
                        });
                        if base_up && within {
                            *ts = Ts::Delivered;
                        }
                    }
                }
            }
        }
        let accrued = self.pending(&out);
        (out, accrued)
    }

    fn as_state(&self, positions: &[Location]) -> State {
        State {
            step: 0,
            at: positions.to_vec(),
            down: self.down,
            targets: vec![TargetState::untaken(); self.map.target_count()],
        }
    }

    /// Candidate next locations for controlled UAV `ci` at location index
    /// `li`: stay put plus every neighbor, in seeded order.
    fn moves_from(&self, ci: usize, li: u32) -> &[Location] {
        &self.action_order[self.controlled[ci].0 as usize][li as usize]
    }
}

struct SearchResult {
    plan_actions: Vec<Vec<Action>>, // [step][controlled uav]
    horizon: u32,
}

fn build_ctx<'a>(
    map: &'a WorldMap,
    init: &State,
    goal: &Goal,
    controlled: Vec<UavId>,
    scripted: Vec<Vec<Location>>,
    model: NetModel,
    seed: u64,
) -> SearchCtx<'a> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut action_order = Vec::with_capacity(map.uav_count());
    for _ in 0..map.uav_count() {
        let mut per_loc = Vec::with_capacity(map.locations().len());
        for &l in map.locations() {
            let mut opts = vec![l];
            let mut ns = map.neighbors(l).expect("known location");
            ns.sort();
            opts.extend(ns);
            opts.shuffle(&mut rng);
            per_loc.push(opts);
        }
        action_order.push(per_loc);
    }
    let mut goal_mask = 0u64;
    for t in &goal.targets {
        goal_mask |= 1 << t.0;
    }
    SearchCtx {
        map,
        model,
        controlled,
        scripted,
        start_step: init.step,
        down: init.down,
        goal_mask,
        hops: map.hop_distances(),
        action_order,
    }
}

fn initial_key(ctx: &SearchCtx, init: &State) -> Key {
    Key {
        step: init.step,
        locs: ctx
            .controlled
            .iter()
            .map(|&u| ctx.map.loc_idx(init.pos(u)).expect("UAV on map") as u32)
            .collect(),
        targets: init
            .targets
            .iter()
            .map(|t| {
                if t.delivered.is_some() {
                    Ts::Delivered
                } else if t.taken_at.is_some() {
                    Ts::Taken { holders: t.holders }
                } else {
                    Ts::Untaken
                }
            })
            .collect(),
    }
}

/// Enumerate joint controlled moves (cartesian product of per-UAV options).
fn joint_moves(ctx: &SearchCtx, key: &Key) -> Vec<Vec<Location>> {
    let mut out: Vec<Vec<Location>> = vec![Vec::new()];
    for (ci, &li) in key.locs.iter().enumerate() {
        let opts = ctx.moves_from(ci, li);
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for prefix in &out {
            for &m in opts {
                let mut v = prefix.clone();
                v.push(m);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn successor(ctx: &SearchCtx, key: &Key, joint: &[Location]) -> (Key, u64) {
    let next_step = key.step + 1;
    let k = (next_step - ctx.start_step) as usize;
    let mut positions: Vec<Location> = ctx.scripted[k.min(ctx.scripted.len() - 1)].clone();
    for (i, &u) in ctx.controlled.iter().enumerate() {
        positions[u.0 as usize] = joint[i];
    }
    let (targets, accrued) = ctx.step_targets(next_step, &positions, &key.targets);
    let locs = joint
        .iter()
        .map(|&l| ctx.map.loc_idx(l).expect("neighbor on map") as u32)
        .collect();
    (
        Key {
            step: next_step,
            locs,
            targets,
        },
        accrued,
    )
}

/// Phase 1: minimum step at which the goal is fully delivered.
fn min_horizon(ctx: &SearchCtx, start: &Key, max_horizon: u32) -> Option<u32> {
    if ctx.goal_done(start) {
        return Some(start.step);
    }
    let mut open: BinaryHeap<(Reverse<(u32, u64)>, Key)> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut seen: HashMap<Key, ()> = HashMap::new();
    let h0 = ctx.h_steps(start);
    if h0 == u32::MAX {
        return None;
    }
    open.push((Reverse((start.step + h0, seq)), start.clone()));
    seen.insert(start.clone(), ());
    while let Some((Reverse((f, _)), key)) = open.pop() {
        if f > ctx.start_step + max_horizon {
            return None;
        }
        if ctx.goal_done(&key) {
            return Some(key.step);
        }
        if key.step >= ctx.start_step + max_horizon {
            continue;
        }
        for joint in joint_moves(ctx, &key) {
            let (next, _) = successor(ctx, &key, &joint);
            if ctx.goal_done(&next) {
                return Some(next.step);
            }
            if seen.contains_key(&next) {
                continue;
            }
            let h = ctx.h_steps(&next);
            if h == u32::MAX || next.step + h > ctx.start_step + max_horizon {
                continue;
            }
            seen.insert(next.clone(), ());
            seq += 1;
            open.push((Reverse((next.step + h, seq)), next));
        }
    }
    None
}

/// Phase 2: minimum accrued staleness among plans delivering the goal by
/// `deadline`. Returns the per-step controlled moves.
fn min_staleness_plan(ctx: &SearchCtx, start: &Key, deadline: u32) -> Option<SearchResult> {
    let mut open: BinaryHeap<(Reverse<(u64, u64)>, Key)> = BinaryHeap::new();
    let mut best: HashMap<Key, u64> = HashMap::new();
    let mut parent: HashMap<Key, (Key, Vec<Location>)> = HashMap::new();
    let mut seq = 0u64;
    open.push((Reverse((0, seq)), start.clone()));
    best.insert(start.clone(), 0);
    while let Some((Reverse((g, _)), key)) = open.pop() {
        if best.get(&key).copied().unwrap_or(u64::MAX) < g {
            continue;
        }
        if ctx.goal_done(&key) {
            // Reconstruct controlled moves.
            let mut steps: Vec<Vec<Location>> = Vec::new();
            let mut cur = key.clone();
            while let Some((prev, joint)) = parent.get(&cur) {
                steps.push(joint.clone());
                cur = prev.clone();
            }
            steps.reverse();
            let mut plan_actions: Vec<Vec<Action>> = Vec::new();
            let mut locs: Vec<Location> = start
                .locs
                .iter()
                .map(|&li| ctx.map.locations()[li as usize])
                .collect();
            for joint in &steps {
                let mut row = Vec::new();
                for (i, &u) in ctx.controlled.iter().enumerate() {
                    if joint[i] == locs[i] {
                        row.push(Action::Wait(u));
                    } else {
                        row.push(Action::Move(u, joint[i]));
                    }
                    locs[i] = joint[i];
                }
                plan_actions.push(row);
            }
            return Some(SearchResult {
                horizon: key.step - ctx.start_step,
                plan_actions,
            });
        }
        if key.step >= deadline {
            continue;
        }
        for joint in joint_moves(ctx, &key) {
            let (next, accrued) = successor(ctx, &key, &joint);
            let ng = g + accrued;
            // Remaining-steps feasibility: must still reach the goal by the
            // deadline.
            let h = ctx.h_steps(&next);
            if h == u32::MAX || next.step + h > deadline {
                continue;
            }
            if ng < best.get(&next).copied().unwrap_or(u64::MAX) {
                best.insert(next.clone(), ng);
                parent.insert(next.clone(), (key.clone(), joint));
                seq += 1;
                open.push((Reverse((ng, seq)), next));
            }
        }
    }
    None
}

fn search(
    map: &WorldMap,
    init: &State,
    goal: &Goal,
    controlled: Vec<UavId>,
    scripted: Vec<Vec<Location>>,
    model: NetModel,
    cfg: &PlannerConfig,
) -> Result<Plan, PlanningFailure> {
    let ctx = build_ctx(map, init, goal, controlled, scripted, model, cfg.seed);
    let start = initial_key(&ctx, init);
    let fail = PlanningFailure {
        max_horizon: cfg.max_horizon,
    };
    let deadline = min_horizon(&ctx, &start, cfg.max_horizon).ok_or(fail)?;
    let result = min_staleness_plan(&ctx, &start, deadline).ok_or(PlanningFailure {
        max_horizon: cfg.max_horizon,
    })?;

    // Assemble the full plan: controlled columns from the search, scripted
    // columns from the behavior model.
    let horizon = result.horizon;
    let mut actions: Vec<Vec<Action>> = vec![Vec::new(); map.uav_count()];
    let mut prev = ctx.scripted[0].clone();
    for k in 0..horizon as usize {
        let layer = &ctx.scripted[(k + 1).min(ctx.scripted.len() - 1)];
        for u in 0..map.uav_count() {
            let uav = UavId(u as u16);
            if ctx.controlled.contains(&uav) {
                continue;
            }
            if layer[u] == prev[u] {
                actions[u].push(Action::Wait(uav));
            } else {
                actions[u].push(Action::Move(uav, layer[u]));
            }
        }
        prev = layer.clone();
    }
    for (i, &u) in ctx.controlled.iter().enumerate() {
        for row in &result.plan_actions {
            actions[u.0 as usize].push(row[i]);
        }
    }
    Ok(Plan {
        horizon,
        actions,
        start_step: init.step,
    })
}

/// Static scripted-position table when every UAV is controlled: only layer 0
/// is ever read for uncontrolled columns, so one layer suffices.
fn trivial_script(map: &WorldMap, init: &State) -> Vec<Vec<Location>> {
    vec![(0..map.uav_count()).map(|u| init.pos(UavId(u as u16))).collect()]
}

/// Centralized optimal mission planning over all UAVs.
pub fn plan_mission(
    map: &WorldMap,
    init: &State,
    goal: &Goal,
    cfg: &PlannerConfig,
) -> Result<Plan, PlanningFailure> {
    let controlled = (0..map.uav_count() as u16).map(UavId).collect();
    let scripted = trivial_script(map, init);
    search(map, init, goal, controlled, scripted, NetModel::Aware, cfg)
}

/// Network-unaware baseline: optimal under direct-range-only delivery.
pub fn plan_network_unaware(
    map: &WorldMap,
    init: &State,
    goal: &Goal,
    cfg: &PlannerConfig,
) -> Result<Plan, PlanningFailure> {
    let controlled = (0..map.uav_count() as u16).map(UavId).collect();
    let scripted = trivial_script(map, init);
    search(map, init, goal, controlled, scripted, NetModel::Unaware, cfg)
}

/// Scripted future positions of every UAV when only `me` replans: others
/// continue the mission plan, freeze at their aborted step, or stay at their
/// last hypothesized location.
pub fn behavior_script(
    map: &WorldMap,
    belief_now: &State,
    mission: &Plan,
    events: &[ExoEvent],
    me: UavId,
    horizon: u32,
) -> Vec<Vec<Location>> {
    let mut layers = Vec::with_capacity(horizon as usize + 1);
    let mut pos: Vec<Location> = (0..map.uav_count())
        .map(|u| belief_now.pos(UavId(u as u16)))
        .collect();
    layers.push(pos.clone());
    for off in 0..horizon {
        let step = belief_now.step + off;
        for u in 0..map.uav_count() {
            let uav = UavId(u as u16);
            if uav == me {
                continue;
            }
            let frozen = events.iter().any(|e| match *e {
                ExoEvent::Aborted { uav: a, step: s } => a == uav && s <= step,
                ExoEvent::Unpredictable { uav: a, .. } => a == uav,
                _ => false,
            });
            if frozen {
                continue;
            }
            if let Action::Move(_, l) = mission.action_at(uav, step) {
                if map.is_adjacent(pos[u], l) {
                    pos[u] = l;
                }
            }
        }
        layers.push(pos.clone());
    }
    layers
}

/// Per-agent replanning: optimize `me`'s remaining actions from the believed
/// current state; every other UAV follows its behavior model.
pub fn replan(
    map: &WorldMap,
    belief_now: &State,
    mission: &Plan,
    events: &[ExoEvent],
    goal: &Goal,
    me: UavId,
    cfg: &PlannerConfig,
) -> Result<Plan, PlanningFailure> {
    let scripted = behavior_script(map, belief_now, mission, events, me, cfg.max_horizon);
    search(
        map,
        belief_now,
        goal,
        vec![me],
        scripted,
        NetModel::Aware,
        cfg,
    )
}

/// Open-loop simulation of a plan under the real transition semantics,
/// honoring scripted exogenous events (breaks down nodes; aborted UAVs stop
/// following the plan). Non-executable actions degrade to waits.
pub fn evaluate(
    map: &WorldMap,
    init: &State,
    plan: &Plan,
    exo_script: &[ExoEvent],
) -> Metrics {
    let mut state = init.clone();
    let end = plan.start_step + plan.horizon;
    while state.step < end && !state.all_delivered() {
        let step = state.step;
        let exo: Vec<ExoEvent> = exo_script.iter().filter(|e| e.step() == step).copied().collect();
        let joint: Vec<Action> = (0..map.uav_count() as u16)
            .map(UavId)
            .map(|u| {
                let aborted = exo_script.iter().any(|e| {
                    matches!(*e, ExoEvent::Aborted { uav, step: s } if uav == u && s <= step)
                });
                if aborted {
                    return Action::Wait(u);
                }
                let a = plan.action_at(u, step);
                match crate::transition::executable(&state, &a, map) {
                    Ok(true) => a,
                    _ => Action::Wait(u),
                }
            })
            .collect();
        state = crate::transition::apply(&state, &joint, &exo, map).expect("waits are executable");
    }
    metrics_of(&state, plan.start_step + plan.horizon)
}

/// Metrics of a final state: mission length is the last delivery step (or
/// the horizon if anything is missing); pictures still undelivered at
/// termination are charged staleness up to the termination step.
pub fn metrics_of(final_state: &State, horizon: u32) -> Metrics {
    let delivered_count = final_state
        .targets
        .iter()
        .filter(|t| t.delivered.is_some())
        .count();
    let mission_length = if final_state.targets.iter().all(|t| t.delivered.is_some()) {
        final_state
            .targets
            .iter()
            .filter_map(|t| t.delivered)
            .max()
            .unwrap_or(0)
    } else {
        horizon
    };
    let undelivered_charge: u64 = final_state
        .targets
        .iter()
        .filter(|t| t.delivered.is_none())
        .filter_map(|t| t.taken_at)
        .map(|taken| (horizon.max(taken) - taken) as u64)
        .sum();
    Metrics {
        mission_length,
        total_staleness: crate::transition::total_staleness(final_state) + undelivered_charge,
        delivered_count,
    }
}
