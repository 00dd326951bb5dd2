//! Per-agent belief maintenance, reality checking, and diagnosis.
//!
//! Each agent keeps a history of its own actions and observations, and a
//! committed explanation (a set of exogenous events plus hypothesized moves
//! for UAVs it believes behave unpredictably). `project` replays the belief:
//! the owner performs its recorded actions, every other UAV follows the
//! behavior model (mission plan, frozen from its aborted step, hypothesized
//! moves if unpredictable), and break events down nodes at their steps.
//! `unexpected` checks the projection against every recorded observation;
//! `explain` searches for a cardinality-minimal set of new events restoring
//! consistency.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::DiagnosisFailure;
use crate::planner::Plan;
use crate::transition::{apply, executable, Action, ExoEvent, State};
use crate::world::{dist2, Location, NodeId, TargetId, UavId, WorldMap};

/// A single sensed fact about the true state, from one UAV's viewpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observation {
    /// Whether `a` (the observer's node) is in multi-hop radio contact
    /// with `b`.
    InContact { a: NodeId, b: NodeId, holds: bool },
    /// `uav` was sighted at `loc` (within visual range of the observer).
    At { uav: UavId, loc: Location },
    /// `uav` was not sighted anywhere within visual range of `center`.
    NotNearby { uav: UavId, center: Location },
    /// Whether the observer's node holds a picture of `target`.
    Holds {
        uav: UavId,
        target: TargetId,
        holds: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObsRecord {
    pub step: u32,
    pub obs: Vec<Observation>,
}

/// Everything one agent has seen and done, in step order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<ObsRecord>,
    /// `own_actions[k]` is the action the owner performed at step k.
    pub own_actions: Vec<Action>,
}

impl History {
    pub fn record_obs(&mut self, step: u32, obs: Vec<Observation>) {
        self.records.push(ObsRecord { step, obs });
    }

    pub fn record_action(&mut self, action: Action) {
        self.own_actions.push(action);
    }
}

/// A hypothesized move of an unpredictable UAV: at `step` it moved to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypoMove {
    pub uav: UavId,
    pub step: u32,
    pub to: Location,
}

/// A committed diagnosis: exogenous events believed to have happened, plus
/// a consistent witness trajectory for each unpredictable UAV. Hypothesized
/// moves carry no cost; they are recomputed on every `explain`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub events: Vec<ExoEvent>,
    pub hypo_moves: Vec<HypoMove>,
}

/// Sense the world from `me`'s viewpoint: radio contact with every other
/// node (both polarities), sightings of UAVs within radio range of self
/// (with `NotNearby` for the rest), and self-held pictures (both
/// polarities).
pub fn sense(map: &WorldMap, state: &State, me: UavId) -> Vec<Observation> {
    let my_node = map.uav_node(me);
    let my_pos = state.pos(me);
    let view = state.link_view(map);
    let reach = view.component_of(my_node);
    let mut obs = Vec::new();
    for n in map.node_ids() {
        if n == my_node {
            continue;
        }
        obs.push(Observation::InContact {
            a: my_node,
            b: n,
            holds: reach & (1 << n.0) != 0,
        });
    }
    obs.push(Observation::At { uav: me, loc: my_pos });
    for u in map.uav_ids() {
        if u == me {
            continue;
        }
        if dist2(state.pos(u), my_pos) <= map.range2() {
            obs.push(Observation::At {
                uav: u,
                loc: state.pos(u),
            });
        } else {
            obs.push(Observation::NotNearby {
                uav: u,
                center: my_pos,
            });
        }
    }
    for t in map.target_ids() {
        obs.push(Observation::Holds {
            uav: me,
            target: t,
            holds: state.holds(my_node, t),
        });
    }
    obs
}

/// Whether a single observation is true in `state`.
pub fn obs_holds(map: &WorldMap, state: &State, obs: &Observation) -> bool {
    match *obs {
        Observation::InContact { a, b, holds } => {
            let view = state.link_view(map);
            (view.component_of(a) & (1 << b.0) != 0) == holds
        }
        Observation::At { uav, loc } => state.pos(uav) == loc,
        Observation::NotNearby { uav, center } => dist2(state.pos(uav), center) > map.range2(),
        Observation::Holds { uav, target, holds } => {
            state.holds(map.uav_node(uav), target) == holds
        }
    }
}

fn obs_by_step(hist: &History) -> BTreeMap<u32, Vec<&Observation>> {
    let mut by: BTreeMap<u32, Vec<&Observation>> = BTreeMap::new();
    for r in &hist.records {
        by.entry(r.step).or_default().extend(r.obs.iter());
    }
    by
}

/// The behavior-model action of UAV `u` at step `k`, excluding the owner
/// and excluding unpredictable UAVs (whose moves are chosen elsewhere).
fn modeled_action(
    map: &WorldMap,
    state: &State,
    mission: &Plan,
    events: &[ExoEvent],
    u: UavId,
    k: u32,
) -> Action {
    let frozen = events.iter().any(
        |e| matches!(*e, ExoEvent::Aborted { uav, step } if uav == u && step <= k),
    );
    if frozen {
        return Action::Wait(u);
    }
    let a = mission.action_at(u, k);
    match executable(state, &a, map) {
        Ok(true) => a,
        _ => Action::Wait(u),
    }
}

/// One belief step: the owner performs its recorded action, others follow
/// the behavior model, `unpred_moves` overrides unpredictable UAVs.
fn belief_step(
    map: &WorldMap,
    state: &State,
    mission: &Plan,
    events: &[ExoEvent],
    hist: &History,
    me: UavId,
    unpred_moves: &[(UavId, Action)],
) -> State {
    let k = state.step;
    let joint: Vec<Action> = map
        .uav_ids()
        .map(|u| {
            if u == me {
                let a = hist
                    .own_actions
                    .get(k as usize)
                    .copied()
                    .unwrap_or(Action::Wait(me));
                return match executable(state, &a, map) {
                    Ok(true) => a,
                    _ => Action::Wait(me),
                };
            }
            if let Some(&(_, a)) = unpred_moves.iter().find(|(v, _)| *v == u) {
                return match executable(state, &a, map) {
                    Ok(true) => a,
                    _ => Action::Wait(u),
                };
            }
            modeled_action(map, state, mission, events, u, k)
        })
        .collect();
    let exo: Vec<ExoEvent> = events.iter().filter(|e| e.step() == k).copied().collect();
    apply(state, &joint, &exo, map).expect("belief actions are executable")
}

/// UAVs that are unpredictable at step `k` under `events`.
fn unpredictable_at(events: &[ExoEvent], k: u32) -> Vec<UavId> {
    let mut v: Vec<UavId> = events
        .iter()
        .filter_map(|e| match *e {
            ExoEvent::Unpredictable { uav, step } if step <= k => Some(uav),
            _ => None,
        })
        .collect();
    v.sort();
    v.dedup();
    v
}

/// Replay the belief from the initial state up to (and including) step
/// `upto`, using the committed hypothesized moves for unpredictable UAVs.
pub fn project(
    map: &WorldMap,
    init: &State,
    mission: &Plan,
    expl: &Explanation,
    hist: &History,
    me: UavId,
    upto: u32,
) -> Vec<State> {
    let mut states = vec![init.clone()];
    while states.last().unwrap().step < upto {
        let s = states.last().unwrap();
        let k = s.step;
        let unpred: Vec<(UavId, Action)> = unpredictable_at(&expl.events, k)
            .into_iter()
            .map(|u| {
                let mv = expl
                    .hypo_moves
                    .iter()
                    .find(|h| h.uav == u && h.step == k)
                    .map(|h| Action::Move(u, h.to))
                    .unwrap_or(Action::Wait(u));
                (u, mv)
            })
            .collect();
        states.push(belief_step(map, s, mission, &expl.events, hist, me, &unpred));
    }
    states
}

/// Reality check: does any recorded observation contradict the projected
/// trajectory?
pub fn unexpected(map: &WorldMap, states: &[State], hist: &History) -> bool {
    for r in &hist.records {
        let Some(s) = states.get(r.step as usize) else {
            return true;
        };
        if r.obs.iter().any(|o| !obs_holds(map, s, o)) {
            return true;
        }
    }
    false
}

/// Depth-first witness search over the moves of unpredictable UAVs. States
/// are deduplicated per step, so equivalent branches collapse; the first
/// fully consistent trajectory (stay-first, then neighbors in location
/// order) is returned as the hypothesized-move witness.
fn find_witness(
    map: &WorldMap,
    init: &State,
    mission: &Plan,
    events: &[ExoEvent],
    hist: &History,
    me: UavId,
    currstep: u32,
    obs: &BTreeMap<u32, Vec<&Observation>>,
) -> Option<Vec<HypoMove>> {
    fn consistent_here(
        map: &WorldMap,
        s: &State,
        obs: &BTreeMap<u32, Vec<&Observation>>,
    ) -> bool {
        obs.get(&s.step)
            .map(|v| v.iter().all(|o| obs_holds(map, s, o)))
            .unwrap_or(true)
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        map: &WorldMap,
        state: State,
        mission: &Plan,
        events: &[ExoEvent],
        hist: &History,
        me: UavId,
        currstep: u32,
        obs: &BTreeMap<u32, Vec<&Observation>>,
        seen: &mut HashSet<State>,
        acc: &mut Vec<HypoMove>,
    ) -> bool {
        if !consistent_here(map, &state, obs) {
            return false;
        }
        if state.step == currstep {
            return true;
        }
        let unpred = unpredictable_at(events, state.step);
        // Candidate joint moves for the unpredictable UAVs: stay, then each
        // neighbor, in location order (cartesian product across UAVs).
        let mut options: Vec<Vec<(UavId, Action)>> = vec![Vec::new()];
        for &u in &unpred {
            let here = state.pos(u);
            let mut moves = vec![Action::Wait(u)];
            let mut ns = map.neighbors(here).expect("UAV on map");
            ns.sort();
            moves.extend(ns.into_iter().map(|l| Action::Move(u, l)));
            let mut next = Vec::with_capacity(options.len() * moves.len());
            for prefix in &options {
                for &m in &moves {
                    let mut v = prefix.clone();
                    v.push((u, m));
                    next.push(v);
                }
            }
            options = next;
        }
        for choice in options {
            let next = belief_step(map, &state, mission, events, hist, me, &choice);
            if !seen.insert(next.clone()) {
                continue;
            }
            let marker = acc.len();
            for &(u, a) in &choice {
                if let Action::Move(_, to) = a {
                    acc.push(HypoMove {
                        uav: u,
                        step: state.step,
                        to,
                    });
                }
            }
            if dfs(map, next, mission, events, hist, me, currstep, obs, seen, acc) {
                return true;
            }
            acc.truncate(marker);
        }
        false
    }

    let mut seen = HashSet::new();
    let mut acc = Vec::new();
    if dfs(
        map,
        init.clone(),
        mission,
        events,
        hist,
        me,
        currstep,
        obs,
        &mut seen,
        &mut acc,
    ) {
        Some(acc)
    } else {
        None
    }
}

/// Candidate events for diagnosis, ordered by preference: break before
/// aborted before unpredictable, lower subject first, later step first
/// (the latest consistent step is the least committal reading of a failure
/// whose onset was not observed).
fn vocabulary(map: &WorldMap, hist: &History, me: UavId, currstep: u32) -> Vec<ExoEvent> {
    let my_node = map.uav_node(me);
    // Breaks are only hypothesized at steps after the owner's last positive
    // contact with the node: a node observed in contact at step k was
    // necessarily up at k.
    let mut last_contact: BTreeMap<NodeId, u32> = BTreeMap::new();
    for r in &hist.records {
        for o in &r.obs {
            if let Observation::InContact { b, holds: true, .. } = *o {
                let e = last_contact.entry(b).or_insert(0);
                *e = (*e).max(r.step);
            }
        }
    }
    let mut vocab = Vec::new();
    for n in map.node_ids() {
        if n == my_node {
            // The owner can self-test its own transceiver; its own radio
            // breaking is never a candidate explanation.
            continue;
        }
        if map.uav_of_node(n).is_some() {
            // UAV deviations are modeled by aborted/unpredictable, not by
            // radio breaks.
            continue;
        }
        let lo = last_contact.get(&n).copied().unwrap_or(0);
        for s in (lo..currstep).rev() {
            vocab.push(ExoEvent::Break { node: n, step: s });
        }
    }
    for u in map.uav_ids() {
        if u == me {
            continue;
        }
        for s in (0..currstep).rev() {
            vocab.push(ExoEvent::Aborted { uav: u, step: s });
        }
    }
    for u in map.uav_ids() {
        if u == me {
            continue;
        }
        for s in (0..currstep).rev() {
            vocab.push(ExoEvent::Unpredictable { uav: u, step: s });
        }
    }
    vocab
}

/// Structural admissibility of a combined event set: one break per node,
/// one aborted and one unpredictable per UAV, and every unpredictable event
/// backed by an aborted event at the same or an earlier step.
fn admissible(events: &[ExoEvent]) -> bool {
    let mut breaks = HashSet::new();
    let mut aborted: BTreeMap<UavId, u32> = BTreeMap::new();
    let mut unpred: Vec<(UavId, u32)> = Vec::new();
    for e in events {
        match *e {
            ExoEvent::Break { node, .. } => {
                if !breaks.insert(node) {
                    return false;
                }
            }
            ExoEvent::Aborted { uav, step } => {
                if aborted.insert(uav, step).is_some() {
                    return false;
                }
            }
            ExoEvent::Unpredictable { uav, step } => {
                if unpred.iter().any(|(u, _)| *u == uav) {
                    return false;
                }
                unpred.push((uav, step));
            }
        }
    }
    unpred
        .iter()
        .all(|(u, s)| aborted.get(u).is_some_and(|a| a <= s))
}

fn unpred_count(events: &[ExoEvent]) -> usize {
    events
        .iter()
        .filter(|e| matches!(e, ExoEvent::Unpredictable { .. }))
        .count()
}

/// Search for a minimal extension of the committed explanation that makes
/// the whole history consistent. Iterative deepening on the number of new
/// events; among same-cardinality candidates, prefers fewer unpredictable
/// events, then the earliest vocabulary encoding. Hypothesized moves are
/// recomputed from scratch for the winning candidate.
pub fn explain(
    map: &WorldMap,
    init: &State,
    mission: &Plan,
    hist: &History,
    prev: &Explanation,
    me: UavId,
    currstep: u32,
    max_cardinality: usize,
) -> Result<Explanation, DiagnosisFailure> {
    let obs = obs_by_step(hist);
    let vocab = vocabulary(map, hist, me, currstep);

    let try_set = |events: &[ExoEvent]| -> Option<Vec<HypoMove>> {
        find_witness(map, init, mission, events, hist, me, currstep, &obs)
    };

    for c in 0..=max_cardinality {
        let mut best: Option<(usize, Vec<usize>, Vec<ExoEvent>, Vec<HypoMove>)> = None;
        let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
        // Enumerate index-increasing combinations of size c.
        let mut combos: Vec<Vec<usize>> = Vec::new();
        while let Some(idxs) = stack.pop() {
            if idxs.len() == c {
                combos.push(idxs);
                continue;
            }
            let lo = idxs.last().map(|&i| i + 1).unwrap_or(0);
            for i in (lo..vocab.len()).rev() {
                let mut v = idxs.clone();
                v.push(i);
                stack.push(v);
            }
        }
        for idxs in combos {
            let mut events = prev.events.clone();
            events.extend(idxs.iter().map(|&i| vocab[i]));
            if !admissible(&events) {
                continue;
            }
            let n_unpred = unpred_count(&events);
            if let Some((bu, bi, _, _)) = &best {
                if (n_unpred, &idxs) >= (*bu, bi) {
                    continue;
                }
            }
            if let Some(hypo) = try_set(&events) {
                events.sort_by_key(|e| (e.step(), *e));
                best = Some((n_unpred, idxs, events, hypo));
            }
        }
        if let Some((_, _, events, hypo_moves)) = best {
            return Ok(Explanation { events, hypo_moves });
        }
    }
    Err(DiagnosisFailure {
        max_cardinality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan_mission, Goal, PlannerConfig};
    use crate::world::{NodeInfo, NodeKind, TargetInfo};

    /// 5x1 strip, base at (0,0), one relay at (2,0), two UAVs, one target
    /// at (4,0), short radio range so the relay matters.
    fn strip() -> (WorldMap, State) {
        let map = WorldMap::four_connected(
            5,
            1,
            vec![
                NodeInfo {
                    name: "base".into(),
                    kind: NodeKind::HomeBase,
                    fixed_pos: Some(Location::new(0, 0)),
                },
                NodeInfo {
                    name: "r1".into(),
                    kind: NodeKind::Relay,
                    fixed_pos: Some(Location::new(2, 0)),
                },
                NodeInfo {
                    name: "u1".into(),
                    kind: NodeKind::Uav,
                    fixed_pos: None,
                },
                NodeInfo {
                    name: "u2".into(),
                    kind: NodeKind::Uav,
                    fixed_pos: None,
                },
            ],
            vec![TargetInfo {
                name: "t1".into(),
                location: Location::new(4, 0),
            }],
            4,
        )
        .unwrap();
        let init = State::initial(&map, vec![Location::new(0, 0), Location::new(1, 0)]).unwrap();
        (map, init)
    }

    fn mission(map: &WorldMap, init: &State) -> Plan {
        plan_mission(
            map,
            init,
            &Goal {
                targets: vec![TargetId(0)],
            },
            &PlannerConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn clean_run_has_no_anomaly() {
        let (map, init) = strip();
        let plan = mission(&map, &init);
        let me = UavId(0);
        let mut hist = History::default();
        let mut real = init.clone();
        for k in 0..plan.horizon {
            hist.record_obs(k, sense(&map, &real, me));
            let joint: Vec<Action> = map.uav_ids().map(|u| plan.action_at(u, k)).collect();
            hist.record_action(plan.action_at(me, k));
            real = apply(&real, &joint, &[], &map).unwrap();
        }
        hist.record_obs(plan.horizon, sense(&map, &real, me));
        let states = project(&map, &init, &plan, &Explanation::default(), &hist, me, plan.horizon);
        assert!(!unexpected(&map, &states, &hist));
    }

    #[test]
    fn relay_break_diagnosed_with_correct_node() {
        let (map, init) = strip();
        let plan = mission(&map, &init);
        let me = UavId(0);
        let r1 = map.node_by_name("r1").unwrap();
        let exo = [ExoEvent::Break { node: r1, step: 0 }];
        let mut hist = History::default();
        let mut real = init.clone();
        let upto = plan.horizon.min(3);
        for k in 0..upto {
            hist.record_obs(k, sense(&map, &real, me));
            let joint: Vec<Action> = map.uav_ids().map(|u| plan.action_at(u, k)).collect();
            hist.record_action(plan.action_at(me, k));
            let exo_k: Vec<ExoEvent> = exo.iter().filter(|e| e.step() == k).copied().collect();
            real = apply(&real, &joint, &exo_k, &map).unwrap();
        }
        hist.record_obs(upto, sense(&map, &real, me));
        let states = project(&map, &init, &plan, &Explanation::default(), &hist, me, upto);
        assert!(unexpected(&map, &states, &hist));
        let expl = explain(&map, &init, &plan, &hist, &Explanation::default(), me, upto, 4).unwrap();
        assert_eq!(expl.events.len(), 1);
        assert!(matches!(expl.events[0], ExoEvent::Break { node, .. } if node == r1));
        let states = project(&map, &init, &plan, &expl, &hist, me, upto);
        assert!(!unexpected(&map, &states, &hist));
    }

    #[test]
    fn aborted_uav_frozen_at_latest_location() {
        let (map, init) = strip();
        let plan = mission(&map, &init);
        let me = UavId(0);
        let expl = Explanation {
            events: vec![ExoEvent::Aborted {
                uav: UavId(1),
                step: 1,
            }],
            hypo_moves: vec![],
        };
        let mut hist = History::default();
        for k in 0..plan.horizon {
            hist.record_action(plan.action_at(me, k));
        }
        let states = project(&map, &init, &plan, &expl, &hist, me, plan.horizon);
        let frozen = states[1].pos(UavId(1));
        for s in &states[1..] {
            assert_eq!(s.pos(UavId(1)), frozen);
        }
    }

    #[test]
    fn hypothesized_moves_followed_exactly() {
        let (map, init) = strip();
        let plan = mission(&map, &init);
        let me = UavId(0);
        let expl = Explanation {
            events: vec![
                ExoEvent::Aborted {
                    uav: UavId(1),
                    step: 0,
                },
                ExoEvent::Unpredictable {
                    uav: UavId(1),
                    step: 0,
                },
            ],
            hypo_moves: vec![
                HypoMove {
                    uav: UavId(1),
                    step: 0,
                    to: Location::new(0, 0),
                },
                HypoMove {
                    uav: UavId(1),
                    step: 1,
                    to: Location::new(1, 0),
                },
                HypoMove {
                    uav: UavId(1),
                    step: 2,
                    to: Location::new(2, 0),
                },
            ],
        };
        let mut hist = History::default();
        for _ in 0..3 {
            hist.record_action(Action::Wait(me));
        }
        let states = project(&map, &init, &plan, &expl, &hist, me, 3);
        assert_eq!(states[1].pos(UavId(1)), Location::new(0, 0));
        assert_eq!(states[2].pos(UavId(1)), Location::new(1, 0));
        assert_eq!(states[3].pos(UavId(1)), Location::new(2, 0));
    }

    #[test]
    fn unpredictable_requires_aborted() {
        let events = [ExoEvent::Unpredictable {
            uav: UavId(1),
            step: 2,
        }];
        assert!(!admissible(&events));
        let ok = [
            ExoEvent::Aborted {
                uav: UavId(1),
                step: 1,
            },
            ExoEvent::Unpredictable {
                uav: UavId(1),
                step: 2,
            },
        ];
        assert!(admissible(&ok));
    }

    #[test]
    fn missing_uav_explained_by_aborted() {
        let (map, init) = strip();
        let plan = mission(&map, &init);
        let me = UavId(0);
        // Reality: u2 never moves (e.g. motor failure), u1 follows the plan.
        let mut hist = History::default();
        let mut real = init.clone();
        let upto = plan.horizon;
        for k in 0..upto {
            hist.record_obs(k, sense(&map, &real, me));
            let joint: Vec<Action> = map
                .uav_ids()
                .map(|u| {
                    if u == me {
                        plan.action_at(u, k)
                    } else {
                        Action::Wait(u)
                    }
                })
                .collect();
            hist.record_action(plan.action_at(me, k));
            real = apply(&real, &joint, &[], &map).unwrap();
        }
        hist.record_obs(upto, sense(&map, &real, me));
        let states = project(&map, &init, &plan, &Explanation::default(), &hist, me, upto);
        if unexpected(&map, &states, &hist) {
            let expl =
                explain(&map, &init, &plan, &hist, &Explanation::default(), me, upto, 4).unwrap();
            assert!(expl
                .events
                .iter()
                .any(|e| matches!(e, ExoEvent::Aborted { uav, .. } if *uav == UavId(1))));
            let states = project(&map, &init, &plan, &expl, &hist, me, upto);
            assert!(!unexpected(&map, &states, &hist));
        }
    }
}
