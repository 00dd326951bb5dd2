//! Acceptance gate: one test per release criterion, each printing a single
//! PASS/FAIL line. Tolerances are pinned in the assertions; derived metric
//! values for the bundled scenarios are frozen here on purpose — a change in
//! any of them is a behavior change and must be reviewed, not re-baselined
//! silently.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uavnet_core::agent::{Agent, AgentConfig};
use uavnet_core::belief::{explain, obs_holds, project, sense, unexpected, Explanation, Observation};
use uavnet_core::connectivity::LinkView;
use uavnet_core::harness::{compare, run};
use uavnet_core::planner::{evaluate, metrics_of, plan_mission, Plan, PlannerConfig};
use uavnet_core::scenario::{self, Scenario};
use uavnet_core::transition::{apply, executable, total_staleness};
use uavnet_core::world::{dist2, NodeInfo, NodeKind, TargetInfo};
use uavnet_core::{Action, ExoEvent, Goal, Location, NodeId, State, TargetId, UavId, WorldMap};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn load(name: &str) -> Scenario {
    scenario::load(&scenario_path(name)).expect("bundled scenario loads")
}

/// Print the per-criterion verdict line and fail the test on FAIL.
fn gate(criterion: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} ({detail})");
    assert!(ok, "criterion {criterion} FAILED: {detail}");
}

/// Simulate a plan open loop (no exo events) and return every state.
fn plan_states(map: &WorldMap, init: &State, plan: &Plan) -> Vec<State> {
    let mut states = vec![init.clone()];
    while states.last().unwrap().step < plan.start_step + plan.horizon
        && !states.last().unwrap().all_delivered()
    {
        let s = states.last().unwrap();
        let joint: Vec<Action> = map
            .uav_ids()
            .map(|u| {
                let a = plan.action_at(u, s.step);
                match executable(s, &a, map) {
                    Ok(true) => a,
                    _ => Action::Wait(u),
                }
            })
            .collect();
        states.push(apply(s, &joint, &[], map).unwrap());
    }
    states
}

// Criterion 1 — data-mule emergence on instance1: the courier UAV commutes
// between the photographer's vicinity and the relay fringe at least twice,
// and the first two pictures are home strictly before the third is taken.
#[test]
fn criterion_1_data_mule_emergence() {
    let sc = load("instance1.json");
    let cfg = PlannerConfig {
        seed: sc.seed,
        ..PlannerConfig::default()
    };
    let t0 = Instant::now();
    let plan = plan_mission(&sc.map, &sc.init, &sc.goal, &cfg).unwrap();
    let plan_time = t0.elapsed();

    let states = plan_states(&sc.map, &sc.init, &plan);
    let last = states.last().unwrap();
    assert!(last.all_delivered(), "mission plan delivers all pictures");

    // Frozen optimum for the bundled instance (2 UAVs, 3 targets, rho = 7).
    let m = metrics_of(last, plan.start_step + plan.horizon);
    assert_eq!((m.mission_length, m.total_staleness), (12, 4));

    // The photographer is whoever takes the last picture; with two UAVs the
    // other one is the courier.
    let last_taken = sc
        .map
        .target_ids()
        .max_by_key(|&TargetId(i)| last.targets[i as usize].taken_at)
        .unwrap();
    let shot_step = last.targets[last_taken.0 as usize].taken_at.unwrap() as usize;
    let shot_loc = sc.map.targets()[last_taken.0 as usize].location;
    let photographer = sc
        .map
        .uav_ids()
        .find(|&u| states[shot_step].pos(u) == shot_loc)
        .unwrap();
    let courier = sc.map.uav_ids().find(|&u| u != photographer).unwrap();

    // Vicinity: radio contact with the photographer while cut off from the
    // base. Fringe: radio contact with the base component. Each vicinity
    // visit later answered by a fringe visit is one mule round trip.
    let c_node = sc.map.uav_node(courier);
    let p_node = sc.map.uav_node(photographer);
    let base = sc.map.home_base();
    let mut round_trips = 0;
    let mut out_at_fringe = false;
    for s in &states {
        let view = s.link_view(&sc.map);
        let near_base = view.in_contact(c_node, base).unwrap();
        let near_photog = view.in_contact(c_node, p_node).unwrap();
        if near_photog && !near_base {
            out_at_fringe = true;
        } else if near_base && out_at_fringe {
            round_trips += 1;
            out_at_fringe = false;
        }
    }

    // Capture order: the two earliest-photographed targets must be home
    // strictly before the last one is photographed.
    let mut by_capture: Vec<TargetId> = sc.map.target_ids().collect();
    by_capture.sort_by_key(|&TargetId(i)| last.targets[i as usize].taken_at);
    let first_two_home = by_capture[..2]
        .iter()
        .map(|&TargetId(i)| last.targets[i as usize].delivered.unwrap())
        .max()
        .unwrap();
    let third_shot = last.targets[by_capture[2].0 as usize].taken_at.unwrap();

    let ok = round_trips >= 2 && first_two_home < third_shot && plan_time < Duration::from_secs(10);
    gate(
        "1 (instance1 data-mule emergence)",
        ok,
        &format!(
            "mule round trips {round_trips} (need >= 2), first two home at {first_two_home} < third shot at {third_shot}, planned in {plan_time:.2?} (< 10 s)"
        ),
    );
}

// Criterion 2 — failure recovery on instance2: the courier produces exactly
// one cardinality-3 diagnosis naming r5/r6/r7, the photographer later blames
// the courier (aborted, possibly plus unpredictable), and all three pictures
// still arrive. Agents only ever receive `sense` output, never the true
// state — the harness enforces that boundary.
#[test]
fn criterion_2_failure_recovery() {
    let sc = load("instance2.json");
    let trace = run(&sc).unwrap();

    let relays: HashSet<NodeId> = ["r5", "r6", "r7"]
        .iter()
        .map(|n| sc.map.node_by_name(n).unwrap())
        .collect();
    let diags: Vec<(UavId, u32, Vec<ExoEvent>)> = trace
        .steps
        .iter()
        .flat_map(|s| s.diagnoses.iter())
        .map(|(u, d)| (*u, d.step, d.new_events.clone()))
        .collect();

    // Exactly one diagnosis anywhere with three new events, all breaks of
    // the three failed relays — and it belongs to u2, the courier.
    let trio: Vec<&(UavId, u32, Vec<ExoEvent>)> = diags
        .iter()
        .filter(|(_, _, ev)| {
            ev.len() == 3
                && ev.iter().all(
                    |e| matches!(*e, ExoEvent::Break { node, .. } if relays.contains(&node)),
                )
                && ev
                    .iter()
                    .map(|e| match *e {
                        ExoEvent::Break { node, .. } => node,
                        _ => unreachable!(),
                    })
                    .collect::<HashSet<_>>()
                    .len()
                    == 3
        })
        .collect();
    let u2 = sc
        .map
        .uav_of_node(sc.map.node_by_name("u2").unwrap())
        .unwrap();
    let courier_ok = trio.len() == 1
        && trio[0].0 == u2
        && diags.iter().filter(|(u, _, _)| *u == u2).count() >= 1;

    // The other UAV later attributes the deviation to the courier: a
    // diagnosis whose new events all concern u2 and include an abort.
    let (trio_step, trio_uav) = (trio.first().map(|t| t.1).unwrap_or(0), u2);
    let blame = diags.iter().find(|(u, step, ev)| {
        *u != trio_uav
            && *step > trio_step
            && !ev.is_empty()
            && ev.iter().all(|e| match *e {
                ExoEvent::Aborted { uav, .. } | ExoEvent::Unpredictable { uav, .. } => {
                    uav == trio_uav
                }
                ExoEvent::Break { .. } => false,
            })
            && ev
                .iter()
                .any(|e| matches!(*e, ExoEvent::Aborted { uav, .. } if uav == trio_uav))
    });

    let ok = trace.completed
        && trace.faults.is_empty()
        && trace.metrics.delivered_count == 3
        && courier_ok
        && blame.is_some();
    gate(
        "2 (instance2 failure recovery)",
        ok,
        &format!(
            "delivered {} of 3, courier trio diagnosis at step {} ({}), blame diagnosis {:?}",
            trace.metrics.delivered_count,
            trio_step,
            if courier_ok { "ok" } else { "missing/duplicated" },
            blame.map(|(u, s, _)| (u.0, s)),
        ),
    );
}

// Criterion 3 — static-mule scenario reaches exactly zero staleness in
// network-aware mode. Exact match, no tolerance.
#[test]
fn criterion_3_zero_staleness_static_mule() {
    let sc = load("exp1.json");
    let trace = run(&sc).unwrap();
    let ok = trace.completed && trace.metrics.total_staleness == 0;
    gate(
        "3 (exp1 zero staleness)",
        ok,
        &format!(
            "total_staleness = {} (need exactly 0), completed = {}",
            trace.metrics.total_staleness, trace.completed
        ),
    );
}

// Criterion 4 — network-aware dominates network-unaware lexicographically on
// every bundled scenario; on exp1 and instance1 the staleness reduction is
// within [50%, 100%] and the mission-length reduction within [0%, 30%].
#[test]
fn criterion_4_dominance_and_deltas() {
    let mut ok = true;
    let mut detail = String::new();
    for name in ["exp1.json", "exp3.json", "instance1.json", "instance2.json"] {
        let sc = load(name);
        let rep = compare(&sc).unwrap();
        let aware = (rep.aware.mission_length, rep.aware.total_staleness);
        let unaware = (rep.unaware.mission_length, rep.unaware.total_staleness);
        let dominated = aware <= unaware;
        ok &= dominated;
        let banded = if name == "exp1.json" || name == "instance1.json" {
            let in_band = (50.0..=100.0).contains(&rep.staleness_reduction_pct)
                && (0.0..=30.0).contains(&rep.length_reduction_pct);
            ok &= in_band;
            in_band
        } else {
            true
        };
        detail.push_str(&format!(
            "{name}: aware {aware:?} vs unaware {unaware:?}, staleness -{:.1}%, length -{:.1}%{}; ",
            rep.staleness_reduction_pct,
            rep.length_reduction_pct,
            if dominated && banded { "" } else { " OUT OF BAND" },
        ));
    }
    gate("4 (dominance and reduction bands)", ok, detail.trim_end());
}

/// Lexicographic quality of the best completion reachable from `state`:
/// (undelivered count, mission_length, total_staleness), minimized. Plain
/// exhaustive search over joint actions with state memoization.
fn brute_force_best(
    map: &WorldMap,
    state: &State,
    horizon: u32,
    memo: &mut HashMap<State, (usize, u32, u64)>,
) -> (usize, u32, u64) {
    if state.all_delivered() || state.step >= horizon {
        let m = metrics_of(state, horizon);
        return (
            state.targets.len() - m.delivered_count,
            m.mission_length,
            m.total_staleness,
        );
    }
    if let Some(&v) = memo.get(state) {
        return v;
    }
    let mut per_uav: Vec<Vec<Action>> = Vec::new();
    for u in map.uav_ids() {
        let mut opts = vec![Action::Wait(u)];
        for n in map.neighbors(state.pos(u)).unwrap() {
            let a = Action::Move(u, n);
            if executable(state, &a, map).unwrap() {
                opts.push(a);
            }
        }
        per_uav.push(opts);
    }
    let mut joints: Vec<Vec<Action>> = vec![Vec::new()];
    for opts in &per_uav {
        let mut next = Vec::with_capacity(joints.len() * opts.len());
        for j in &joints {
            for &a in opts {
                let mut v = j.clone();
                v.push(a);
                next.push(v);
            }
        }
        joints = next;
    }
    let mut best = (usize::MAX, u32::MAX, u64::MAX);
    for joint in joints {
        let child = apply(state, &joint, &[], map).unwrap();
        best = best.min(brute_force_best(map, &child, horizon, memo));
    }
    memo.insert(state.clone(), best);
    best
}

fn random_cell(rng: &mut ChaCha8Rng, w: i32, h: i32) -> Location {
    Location::new(rng.gen_range(0..w), rng.gen_range(0..h))
}

// Criterion 5 — planner optimality oracle: on >= 50 random solvable worlds
// (<= 2 UAVs, <= 2 targets, grid <= 4x4, horizon 8) plan_mission matches the
// brute-force lexicographic optimum in every case.
#[test]
fn criterion_5_planner_optimality_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 50 {
        attempts += 1;
        assert!(attempts < 2000, "instance generation stalled");
        let (w, h) = (rng.gen_range(2..=4), rng.gen_range(2..=4,));
        let n_uavs = rng.gen_range(1..=2usize);
        let n_targets = rng.gen_range(1..=2usize);
        let range = rng.gen_range(1..=3i64);
        let mut nodes = vec![NodeInfo {
            name: "base".into(),
            kind: NodeKind::HomeBase,
            fixed_pos: Some(random_cell(&mut rng, w, h)),
        }];
        if rng.gen_bool(0.5) {
            nodes.push(NodeInfo {
                name: "r1".into(),
                kind: NodeKind::Relay,
                fixed_pos: Some(random_cell(&mut rng, w, h)),
            });
        }
        for i in 0..n_uavs {
            nodes.push(NodeInfo {
                name: format!("u{}", i + 1),
                kind: NodeKind::Uav,
                fixed_pos: None,
            });
        }
        let mut target_cells: Vec<Location> = Vec::new();
        while target_cells.len() < n_targets {
            let c = random_cell(&mut rng, w, h);
            if !target_cells.contains(&c) {
                target_cells.push(c);
            }
        }
        let targets = target_cells
            .iter()
            .enumerate()
            .map(|(i, &c)| TargetInfo {
                name: format!("t{}", i + 1),
                location: c,
            })
            .collect();
        let map = WorldMap::four_connected(w, h, nodes, targets, range).unwrap();
        let starts = (0..n_uavs).map(|_| random_cell(&mut rng, w, h)).collect();
        let init = State::initial(&map, starts).unwrap();

        let mut memo = HashMap::new();
        let best = brute_force_best(&map, &init, 8, &mut memo);
        if best.0 != 0 {
            continue; // not solvable within the horizon; resample
        }
        let cfg = PlannerConfig {
            max_horizon: 8,
            seed: rng.gen(),
        };
        let goal = Goal {
            targets: map.target_ids().collect(),
        };
        let plan = plan_mission(&map, &init, &goal, &cfg).unwrap();
        let m = evaluate(&map, &init, &plan, &[]);
        assert_eq!(
            (m.mission_length, m.total_staleness),
            (best.1, best.2),
            "planner suboptimal on generated instance #{attempts}"
        );
        checked += 1;
    }
    gate(
        "5 (planner optimality oracle)",
        checked >= 50,
        &format!("{checked} solvable instances, 100% brute-force matches"),
    );
}

/// Independent consistency check for a candidate event set: is there any
/// trajectory of the unpredictable UAVs under which every recorded
/// observation holds? Mirrors the belief model through the public
/// transition/observation API only.
#[allow(clippy::too_many_arguments)]
fn oracle_consistent(
    map: &WorldMap,
    state: &State,
    mission: &Plan,
    own_actions: &[Action],
    obs: &BTreeMap<u32, Vec<Observation>>,
    events: &[ExoEvent],
    me: UavId,
    upto: u32,
    seen: &mut HashSet<State>,
) -> bool {
    if let Some(v) = obs.get(&state.step) {
        if v.iter().any(|o| !obs_holds(map, state, o)) {
            return false;
        }
    }
    if state.step == upto {
        return true;
    }
    let k = state.step;
    let unpred: Vec<UavId> = map
        .uav_ids()
        .filter(|&u| {
            events
                .iter()
                .any(|e| matches!(*e, ExoEvent::Unpredictable { uav, step } if uav == u && step <= k))
        })
        .collect();
    // Fixed part of the joint action: owner's recorded action, others from
    // the mission plan, frozen once aborted. Unpredictable UAVs branch.
    let fixed: Vec<Action> = map
        .uav_ids()
        .map(|u| {
            let a = if u == me {
                own_actions.get(k as usize).copied().unwrap_or(Action::Wait(u))
            } else if events
                .iter()
                .any(|e| matches!(*e, ExoEvent::Aborted { uav, step } if uav == u && step <= k))
            {
                Action::Wait(u)
            } else {
                mission.action_at(u, k)
            };
            match executable(state, &a, map) {
                Ok(true) => a,
                _ => Action::Wait(u),
            }
        })
        .collect();
    let mut choices: Vec<Vec<Action>> = vec![fixed];
    for &u in &unpred {
        let mut moves = vec![Action::Wait(u)];
        for n in map.neighbors(state.pos(u)).unwrap() {
            let a = Action::Move(u, n);
            if executable(state, &a, map).unwrap() {
                moves.push(a);
            }
        }
        let mut next = Vec::with_capacity(choices.len() * moves.len());
        for c in &choices {
            for &m in &moves {
                let mut v = c.clone();
                v[u.0 as usize] = m;
                next.push(v);
            }
        }
        choices = next;
    }
    let exo: Vec<ExoEvent> = events.iter().filter(|e| e.step() == k).copied().collect();
    for joint in choices {
        let child = apply(state, &joint, &exo, map).unwrap();
        if !seen.insert(child.clone()) {
            continue;
        }
        if oracle_consistent(map, &child, mission, own_actions, obs, events, me, upto, seen) {
            return true;
        }
    }
    false
}

/// Structural admissibility, restated independently: at most one break per
/// node, one aborted and one unpredictable per UAV, every unpredictable
/// event backed by an abort at the same or an earlier step.
fn oracle_admissible(events: &[ExoEvent]) -> bool {
    let mut broken = HashSet::new();
    let mut aborted: BTreeMap<UavId, u32> = BTreeMap::new();
    let mut unpred: BTreeMap<UavId, u32> = BTreeMap::new();
    for e in events {
        match *e {
            ExoEvent::Break { node, .. } => {
                if !broken.insert(node) {
                    return false;
                }
            }
            ExoEvent::Aborted { uav, step } => {
                if aborted.insert(uav, step).is_some() {
                    return false;
                }
            }
            ExoEvent::Unpredictable { uav, step } => {
                if unpred.insert(uav, step).is_some() {
                    return false;
                }
            }
        }
    }
    unpred
        .iter()
        .all(|(u, s)| aborted.get(u).is_some_and(|a| a <= s))
}

fn count_unpred(events: &[ExoEvent]) -> usize {
    events
        .iter()
        .filter(|e| matches!(e, ExoEvent::Unpredictable { .. }))
        .count()
}

/// Exhaustive minimum over the full hypothesis language: smallest event-set
/// cardinality that restores consistency, and the smallest unpredictable
/// count among sets of that cardinality. None if nothing <= `cap` works.
#[allow(clippy::too_many_arguments)]
fn oracle_minimum(
    map: &WorldMap,
    init: &State,
    mission: &Plan,
    own_actions: &[Action],
    obs: &BTreeMap<u32, Vec<Observation>>,
    me: UavId,
    upto: u32,
    cap: usize,
) -> Option<(usize, usize)> {
    let mut vocab: Vec<ExoEvent> = Vec::new();
    for n in map.node_ids() {
        if n == map.uav_node(me) || map.uav_of_node(n).is_some() {
            continue;
        }
        for s in 0..upto {
            vocab.push(ExoEvent::Break { node: n, step: s });
        }
    }
    for u in map.uav_ids() {
        if u == me {
            continue;
        }
        for s in 0..upto {
            vocab.push(ExoEvent::Aborted { uav: u, step: s });
            vocab.push(ExoEvent::Unpredictable { uav: u, step: s });
        }
    }
    fn combos(n: usize, c: usize, lo: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if acc.len() == c {
            out.push(acc.clone());
            return;
        }
        for i in lo..n {
            acc.push(i);
            combos(n, c, i + 1, acc, out);
            acc.pop();
        }
    }
    for c in 0..=cap {
        let mut sets = Vec::new();
        combos(vocab.len(), c, 0, &mut Vec::new(), &mut sets);
        let mut best_unpred: Option<usize> = None;
        for idxs in sets {
            let events: Vec<ExoEvent> = idxs.iter().map(|&i| vocab[i]).collect();
            if !oracle_admissible(&events) {
                continue;
            }
            let mut seen = HashSet::new();
            if oracle_consistent(map, init, mission, own_actions, obs, &events, me, upto, &mut seen)
            {
                let up = count_unpred(&events);
                best_unpred = Some(best_unpred.map_or(up, |b: usize| b.min(up)));
            }
        }
        if let Some(u) = best_unpred {
            return Some((c, u));
        }
    }
    None
}

// Criterion 6 — diagnosis minimality oracle: on >= 100 generated anomalies
// (<= 3 candidate nodes, <= 2 UAVs), `explain` returns exactly the
// exhaustive-minimum cardinality and never uses more unpredictable events
// than the best equal-cardinality explanation.
#[test]
fn criterion_6_diagnosis_minimality_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut anomalies = 0;
    let mut attempts = 0;
    while anomalies < 100 {
        attempts += 1;
        assert!(attempts < 4000, "anomaly generation stalled");
        let w = rng.gen_range(5..=7);
        let n_relays = rng.gen_range(1..=2usize);
        let range = rng.gen_range(2..=3i64);
        let mut cells: Vec<Location> = (0..w).map(|x| Location::new(x, 0)).collect();
        let mut nodes = vec![NodeInfo {
            name: "base".into(),
            kind: NodeKind::HomeBase,
            fixed_pos: Some(Location::new(0, 0)),
        }];
        for i in 0..n_relays {
            let c = cells.remove(rng.gen_range(1..cells.len()));
            nodes.push(NodeInfo {
                name: format!("r{}", i + 1),
                kind: NodeKind::Relay,
                fixed_pos: Some(c),
            });
        }
        nodes.push(NodeInfo {
            name: "u1".into(),
            kind: NodeKind::Uav,
            fixed_pos: None,
        });
        nodes.push(NodeInfo {
            name: "u2".into(),
            kind: NodeKind::Uav,
            fixed_pos: None,
        });
        let map = WorldMap::four_connected(
            w,
            1,
            nodes,
            vec![TargetInfo {
                name: "t1".into(),
                location: Location::new(w - 1, 0),
            }],
            range,
        )
        .unwrap();
        let init = State::initial(
            &map,
            vec![Location::new(0, 0), Location::new(rng.gen_range(0..2), 0)],
        )
        .unwrap();
        let goal = Goal {
            targets: vec![TargetId(0)],
        };
        let cfg = PlannerConfig {
            max_horizon: 20,
            seed: rng.gen(),
        };
        let Ok(mission) = plan_mission(&map, &init, &goal, &cfg) else {
            continue;
        };
        let me = UavId(0);
        let other = UavId(1);
        let upto = rng.gen_range(3..=6u32).min(mission.horizon);

        // Ground truth: relay breaks, and/or the other UAV going silent or
        // rogue. The observer only gets the resulting observations.
        let mut truth: Vec<ExoEvent> = Vec::new();
        let fault = rng.gen_range(0..4);
        if fault == 0 || fault == 1 || rng.gen_bool(0.3) {
            for i in 0..n_relays.min(fault + 1) {
                truth.push(ExoEvent::Break {
                    node: map.node_by_name(&format!("r{}", i + 1)).unwrap(),
                    step: rng.gen_range(0..upto),
                });
            }
        }
        let rogue = fault == 3;
        let abort_step = rng.gen_range(0..upto);
        if fault >= 2 {
            truth.push(ExoEvent::Aborted {
                uav: other,
                step: abort_step,
            });
        }
        let mut hist_actions: Vec<Action> = Vec::new();
        let mut obs: BTreeMap<u32, Vec<Observation>> = BTreeMap::new();
        let mut real = init.clone();
        for k in 0..upto {
            obs.insert(k, sense(&map, &real, me));
            let joint: Vec<Action> = map
                .uav_ids()
                .map(|u| {
                    let aborted = truth.iter().any(
                        |e| matches!(*e, ExoEvent::Aborted { uav, step } if uav == u && step <= k),
                    );
                    let a = if u == other && aborted {
                        if rogue {
                            let mut opts = vec![Action::Wait(u)];
                            for n in map.neighbors(real.pos(u)).unwrap() {
                                opts.push(Action::Move(u, n));
                            }
                            opts[rng.gen_range(0..opts.len())]
                        } else {
                            Action::Wait(u)
                        }
                    } else {
                        mission.action_at(u, k)
                    };
                    match executable(&real, &a, &map) {
                        Ok(true) => a,
                        _ => Action::Wait(u),
                    }
                })
                .collect();
            hist_actions.push(joint[me.0 as usize]);
            let exo: Vec<ExoEvent> = truth.iter().filter(|e| e.step() == k).copied().collect();
            real = apply(&real, &joint, &exo, &map).unwrap();
        }
        obs.insert(upto, sense(&map, &real, me));

        let mut hist = uavnet_core::belief::History::default();
        for (k, v) in &obs {
            hist.record_obs(*k, v.clone());
        }
        for a in &hist_actions {
            hist.record_action(*a);
        }
        let clean = project(&map, &init, &mission, &Explanation::default(), &hist, me, upto);
        if !unexpected(&map, &clean, &hist) {
            continue; // the faults were invisible from here; not an anomaly
        }
        anomalies += 1;

        let truth_min =
            oracle_minimum(&map, &init, &mission, &hist_actions, &obs, me, upto, 4);
        match explain(&map, &init, &mission, &hist, &Explanation::default(), me, upto, 4) {
            Ok(expl) => {
                let (min_c, min_unpred) = truth_min.expect("oracle agrees something works");
                assert_eq!(expl.events.len(), min_c, "non-minimal cardinality");
                assert_eq!(
                    count_unpred(&expl.events),
                    min_unpred,
                    "equal-cardinality explanation with fewer unpredictable events exists"
                );
                // The committed explanation must actually fit the history.
                let states = project(&map, &init, &mission, &expl, &hist, me, upto);
                assert!(!unexpected(&map, &states, &hist));
            }
            Err(_) => assert!(truth_min.is_none(), "explain missed a viable explanation"),
        }
    }
    gate(
        "6 (diagnosis minimality oracle)",
        anomalies >= 100,
        &format!("{anomalies} anomalies, all explanations exhaustively minimal"),
    );
}

// Criterion 7 — connectivity oracle: in_contact equals BFS reachability over
// direct links on 1000 random layouts of up to 12 nodes.
#[test]
fn criterion_7_connectivity_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let mut pairs = 0u64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=12usize);
        let positions: Vec<Location> = (0..n)
            .map(|_| Location::new(rng.gen_range(0..10), rng.gen_range(0..10)))
            .collect();
        let range2 = {
            let r = rng.gen_range(1..=5i64);
            r * r
        };
        let up_mask = rng.gen_range(0..(1u64 << n));
        let view = LinkView {
            up_mask,
            positions: positions.clone(),
            range2,
        };
        // Reference: plain BFS over the direct-link graph (both ends up and
        // within range), endpoints included.
        let reach = |a: usize| -> u64 {
            if up_mask & (1 << a) == 0 {
                return 0;
            }
            let mut comp = 1u64 << a;
            let mut queue = vec![a];
            while let Some(i) = queue.pop() {
                for j in 0..n {
                    if comp & (1 << j) != 0 || up_mask & (1 << j) == 0 {
                        continue;
                    }
                    if dist2(positions[i], positions[j]) <= range2 {
                        comp |= 1 << j;
                        queue.push(j);
                    }
                }
            }
            comp
        };
        for a in 0..n {
            let expect = reach(a);
            for b in 0..n {
                if a == b {
                    continue;
                }
                let got = view.in_contact(NodeId(a as u16), NodeId(b as u16)).unwrap();
                assert_eq!(got, expect & (1 << b) != 0, "layout mismatch at ({a},{b})");
                pairs += 1;
            }
        }
    }
    gate(
        "7 (connectivity oracle)",
        true,
        &format!("1000 layouts, {pairs} ordered pairs, zero discrepancies"),
    );
}

// Criterion 8 — determinism and replay: re-running a scenario reproduces the
// trace bitwise, and replaying the recorded actions reproduces every state.
#[test]
fn criterion_8_determinism_and_replay() {
    for name in ["instance1.json", "instance2.json", "exp1.json", "exp3.json"] {
        let sc = load(name);
        let a = run(&sc).unwrap();
        let b = run(&sc).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb, "{name}: re-run differs");

        let mut state = a.initial.clone();
        for step in &a.steps {
            state = apply(&state, &step.actions, &step.exo, &sc.map).unwrap();
            assert_eq!(state, step.state, "{name}: replay diverges at step {}", step.step);
        }
        assert_eq!(
            total_staleness(&state),
            a.metrics.total_staleness,
            "{name}: replayed staleness differs"
        );
    }
    gate(
        "8 (determinism and replay)",
        true,
        "4 scenarios re-run bitwise identical and replay state-exact",
    );
}

// Criterion 9 — reasoning latency: every diagnosis/replan on the bundled
// scenarios finishes in under 2 s. Each agent step contains at most one
// explain and one replan call, so bounding the step bounds both.
#[test]
fn criterion_9_reasoning_latency() {
    let mut worst = Duration::ZERO;
    let mut reasoning_steps = 0;
    for name in ["instance1.json", "instance2.json", "exp1.json", "exp3.json"] {
        let sc = load(name);
        let cfg = PlannerConfig {
            seed: sc.seed,
            ..PlannerConfig::default()
        };
        let mission = plan_mission(&sc.map, &sc.init, &sc.goal, &cfg).unwrap();
        let agent_cfg = AgentConfig {
            planner: cfg,
            max_cardinality: 4,
        };
        let mut agents: Vec<Agent> = sc
            .map
            .uav_ids()
            .map(|u| Agent::new(u, sc.goal.clone(), mission.clone(), sc.init.clone(), agent_cfg))
            .collect();
        let mut real = sc.init.clone();
        while !real.all_delivered() && real.step < sc.max_steps {
            let step = real.step;
            let mut actions = Vec::new();
            for (i, agent) in agents.iter_mut().enumerate() {
                let u = UavId(i as u16);
                if agent.is_done() {
                    actions.push(Action::Wait(u));
                    continue;
                }
                let obs = sense(&sc.map, &real, u);
                let t0 = Instant::now();
                let out = agent.step(&sc.map, obs, step).unwrap();
                let dt = t0.elapsed();
                if out.diagnosis.is_some() || out.replanned {
                    reasoning_steps += 1;
                    worst = worst.max(dt);
                    assert!(dt < Duration::from_secs(2), "{name}: step {step} took {dt:?}");
                }
                actions.push(out.action);
            }
            let actions: Vec<Action> = actions
                .iter()
                .map(|a| match executable(&real, a, &sc.map) {
                    Ok(true) => *a,
                    _ => Action::Wait(a.uav()),
                })
                .collect();
            let exo: Vec<ExoEvent> = sc.exo.iter().filter(|e| e.step() == step).copied().collect();
            let standstill = actions.iter().all(|a| matches!(a, Action::Wait(_)))
                && !sc.exo.iter().any(|e| e.step() >= step);
            real = apply(&real, &actions, &exo, &sc.map).unwrap();
            if standstill {
                break;
            }
        }
        assert!(real.all_delivered(), "{name}: run did not complete");
    }
    gate(
        "9 (reasoning latency)",
        true,
        &format!("{reasoning_steps} diagnose/replan steps, worst {worst:.2?} (< 2 s)"),
    );
}

/// Sanity anchor for the whole gate: the frozen headline numbers of every
/// bundled scenario in one place.
#[test]
fn frozen_bundled_metrics() {
    let checks = [
        ("exp1.json", (8, 0, 3)),
        ("instance1.json", (12, 4, 3)),
        ("instance2.json", (14, 11, 3)),
    ];
    for (name, (len, stale, delivered)) in checks {
        let t = run(&load(name)).unwrap();
        assert_eq!(
            (
                t.metrics.mission_length,
                t.metrics.total_staleness,
                t.metrics.delivered_count
            ),
            (len, stale, delivered),
            "{name}"
        );
    }
}
