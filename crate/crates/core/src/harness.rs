//! Deterministic execution harness.
//!
//! Runs a scenario in lockstep: inject this step's exogenous events, let
//! every agent observe and decide, then apply the joint action. In aware
//! mode each UAV runs the full observe–diagnose–replan loop; in unaware
//! mode the baseline plan is executed open loop. Every run is fully
//! deterministic given the scenario seed, and traces replay bit-exact.

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentConfig, Diagnosis};
use crate::belief::{sense, Observation};
use crate::error::PlanningFailure;
use crate::planner::{
    metrics_of, plan_mission, plan_network_unaware, Metrics, Plan, PlannerConfig,
};
use crate::scenario::{Mode, Scenario};
use crate::transition::{apply, executable, Action, ExoEvent, State};
use crate::world::UavId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: u32,
    /// Per-UAV observations taken in this step's pre-state (empty for
    /// agents that have stopped, and in unaware mode).
    pub observations: Vec<Vec<Observation>>,
    pub actions: Vec<Action>,
    pub exo: Vec<ExoEvent>,
    pub diagnoses: Vec<(UavId, Diagnosis)>,
    pub replans: Vec<UavId>,
    /// True state after the step.
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub mode: Mode,
    pub mission: Plan,
    pub initial: State,
    pub steps: Vec<TraceStep>,
    pub metrics: Metrics,
    /// All goal pictures delivered in the true state.
    pub completed: bool,
    /// Agents halted by reasoning faults, with the fault message.
    pub faults: Vec<(UavId, String)>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Planning(#[from] PlanningFailure),
}

/// Execute a scenario to completion, step budget, or fleet standstill.
pub fn run(sc: &Scenario) -> Result<Trace, RunError> {
    let cfg = PlannerConfig {
        seed: sc.seed,
        ..PlannerConfig::default()
    };
    match sc.mode {
        Mode::Aware => {
            let mission = plan_mission(&sc.map, &sc.init, &sc.goal, &cfg)?;
            run_aware(sc, mission, cfg)
        }
        Mode::Unaware => {
            let mission = plan_network_unaware(&sc.map, &sc.init, &sc.goal, &cfg)?;
            Ok(run_open_loop(sc, mission))
        }
    }
}

fn run_aware(sc: &Scenario, mission: Plan, cfg: PlannerConfig) -> Result<Trace, RunError> {
    let agent_cfg = AgentConfig {
        planner: cfg,
        ..AgentConfig::default()
    };
    let mut agents: Vec<Agent> = sc
        .map
        .uav_ids()
        .map(|u| {
            Agent::new(
                u,
                sc.goal.clone(),
                mission.clone(),
                sc.init.clone(),
                agent_cfg,
            )
        })
        .collect();
    let mut faulted: Vec<Option<String>> = vec![None; agents.len()];
    let mut real = sc.init.clone();
    let mut steps = Vec::new();
    while !real.all_delivered() && real.step < sc.max_steps {
        let step = real.step;
        let mut observations = vec![Vec::new(); agents.len()];
        let mut actions = Vec::with_capacity(agents.len());
        let mut diagnoses = Vec::new();
        let mut replans = Vec::new();
        for (i, agent) in agents.iter_mut().enumerate() {
            let u = UavId(i as u16);
            if agent.is_done() || faulted[i].is_some() {
                actions.push(Action::Wait(u));
                continue;
            }
            let obs = sense(&sc.map, &real, u);
            observations[i] = obs.clone();
            match agent.step(&sc.map, obs, step) {
                Ok(out) => {
                    if let Some(d) = out.diagnosis {
                        diagnoses.push((u, d));
                    }
                    if out.replanned {
                        replans.push(u);
                    }
                    actions.push(out.action);
                }
                Err(fault) => {
                    faulted[i] = Some(fault.to_string());
                    actions.push(Action::Wait(u));
                }
            }
        }
        // Everyone stands still and nothing is scripted to change: the run
        // can never progress, so stop instead of spinning to max_steps.
        let standstill = actions.iter().all(|a| matches!(a, Action::Wait(_)))
            && !sc.exo.iter().any(|e| e.step() >= step);
        let actions = actions
            .iter()
            .map(|a| match executable(&real, a, &sc.map) {
                Ok(true) => *a,
                _ => Action::Wait(a.uav()),
            })
            .collect::<Vec<_>>();
        let exo: Vec<ExoEvent> = sc.exo.iter().filter(|e| e.step() == step).copied().collect();
        real = apply(&real, &actions, &exo, &sc.map).expect("waits always executable");
        steps.push(TraceStep {
            step,
            observations,
            actions,
            exo,
            diagnoses,
            replans,
            state: real.clone(),
        });
        if standstill {
            break;
        }
    }
    let completed = real.all_delivered();
    let metrics = metrics_of(&real, real.step);
    Ok(Trace {
        mode: Mode::Aware,
        mission,
        initial: sc.init.clone(),
        steps,
        metrics,
        completed,
        faults: faulted
            .into_iter()
            .enumerate()
            .filter_map(|(i, f)| f.map(|m| (UavId(i as u16), m)))
            .collect(),
    })
}

/// Execute a plan open loop against the true dynamics: no sensing, no
/// diagnosis. Aborted UAVs stop following the plan; non-executable actions
/// degrade to waits.
fn run_open_loop(sc: &Scenario, mission: Plan) -> Trace {
    let mut real = sc.init.clone();
    let mut steps = Vec::new();
    let end = mission.horizon.min(sc.max_steps);
    while !real.all_delivered() && real.step < end {
        let step = real.step;
        let actions: Vec<Action> = sc
            .map
            .uav_ids()
            .map(|u| {
                let aborted = sc.exo.iter().any(
                    |e| matches!(*e, ExoEvent::Aborted { uav, step: s } if uav == u && s <= step),
                );
                if aborted {
                    return Action::Wait(u);
                }
                let a = mission.action_at(u, step);
                match executable(&real, &a, &sc.map) {
                    Ok(true) => a,
                    _ => Action::Wait(u),
                }
            })
            .collect();
        let exo: Vec<ExoEvent> = sc.exo.iter().filter(|e| e.step() == step).copied().collect();
        real = apply(&real, &actions, &exo, &sc.map).expect("waits always executable");
        steps.push(TraceStep {
            step,
            observations: vec![Vec::new(); sc.map.uav_count()],
            actions,
            exo,
            diagnoses: Vec::new(),
            replans: Vec::new(),
            state: real.clone(),
        });
    }
    let completed = real.all_delivered();
    let metrics = metrics_of(&real, real.step);
    Trace {
        mode: Mode::Unaware,
        mission,
        initial: sc.init.clone(),
        steps,
        metrics,
        completed,
        faults: Vec::new(),
    }
}

/// Aware-vs-unaware comparison on the same scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub aware: Metrics,
    pub unaware: Metrics,
    /// Percent reduction of the aware run relative to the unaware run.
    pub staleness_reduction_pct: f64,
    pub length_reduction_pct: f64,
}

fn reduction(unaware: f64, aware: f64) -> f64 {
    if unaware == 0.0 {
        0.0
    } else {
        (unaware - aware) / unaware * 100.0
    }
}

pub fn compare(sc: &Scenario) -> Result<CompareReport, RunError> {
    let mut aware_sc = sc.clone();
    aware_sc.mode = Mode::Aware;
    let mut unaware_sc = sc.clone();
    unaware_sc.mode = Mode::Unaware;
    let aware = run(&aware_sc)?.metrics;
    let unaware = run(&unaware_sc)?.metrics;
    Ok(CompareReport {
        aware,
        unaware,
        staleness_reduction_pct: reduction(
            unaware.total_staleness as f64,
            aware.total_staleness as f64,
        ),
        length_reduction_pct: reduction(unaware.mission_length as f64, aware.mission_length as f64),
    })
}
