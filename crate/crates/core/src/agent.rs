//! The per-UAV control loop: observe, check expectations, explain, replan,
//! act.
//!
//! Each agent starts with the shared mission plan and an empty explanation.
//! Every step it folds its observations into its history and projects its
//! belief forward. If the goal is already achieved in the belief it idles;
//! if any observation contradicts the belief it runs diagnosis and then
//! replans its own future actions around the committed explanation, keeping
//! the behavior model for everyone else.

use serde::{Deserialize, Serialize};

use crate::belief::{explain, project, unexpected, Explanation, History, Observation};
use crate::error::{DiagnosisFailure, PlanningFailure};
use crate::planner::{replan, Goal, Plan, PlannerConfig};
use crate::transition::{executable, Action, ExoEvent, State};
use crate::world::{TargetId, UavId, WorldMap};

#[derive(Debug, Clone, Copy)]
pub struct AgentConfig {
    pub planner: PlannerConfig,
    pub max_cardinality: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            planner: PlannerConfig::default(),
            max_cardinality: 4,
        }
    }
}

/// Raised when an agent can no longer reason its way forward; the harness
/// logs the fault and halts that agent in place.
#[derive(Debug, Clone, thiserror::Error)]
pub enum AgentFault {
    #[error("agent {uav:?}: {source}")]
    Planning {
        uav: UavId,
        source: PlanningFailure,
    },
    #[error("agent {uav:?}: {source}")]
    Diagnosis {
        uav: UavId,
        source: DiagnosisFailure,
    },
}

/// One committed diagnosis, as recorded in traces. `new_events` is what
/// this call added on top of the previously committed explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub step: u32,
    pub new_events: Vec<ExoEvent>,
    pub explanation: Explanation,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub action: Action,
    pub diagnosis: Option<Diagnosis>,
    pub replanned: bool,
    /// The agent believes the goal is achieved and has stopped.
    pub done: bool,
}

pub struct Agent {
    pub me: UavId,
    pub goal: Goal,
    /// The shared mission plan; this is what the agent assumes everyone
    /// else keeps following.
    pub mission: Plan,
    /// The plan the agent itself follows (the mission until a replan).
    pub own_plan: Plan,
    pub expl: Explanation,
    pub hist: History,
    init: State,
    cfg: AgentConfig,
    done: bool,
}

impl Agent {
    pub fn new(me: UavId, goal: Goal, mission: Plan, init: State, cfg: AgentConfig) -> Self {
        Agent {
            me,
            goal,
            own_plan: mission.clone(),
            mission,
            expl: Explanation::default(),
            hist: History::default(),
            init,
            cfg,
            done: false,
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn goal_achieved(&self, belief_now: &State) -> bool {
        self.goal
            .targets
            .iter()
            .all(|&TargetId(i)| belief_now.targets[i as usize].delivered.is_some())
    }

    /// One pass of the control loop at `step`, with this step's sensed
    /// observations. Always records exactly one own action.
    pub fn step(
        &mut self,
        map: &WorldMap,
        obs: Vec<Observation>,
        step: u32,
    ) -> Result<StepOutcome, AgentFault> {
        self.hist.record_obs(step, obs);
        let mut states = project(
            map,
            &self.init,
            &self.mission,
            &self.expl,
            &self.hist,
            self.me,
            step,
        );
        let mut diagnosis = None;
        let mut replanned = false;
        if self.goal_achieved(states.last().expect("projection is nonempty")) {
            self.done = true;
            self.hist.record_action(Action::Wait(self.me));
            return Ok(StepOutcome {
                action: Action::Wait(self.me),
                diagnosis,
                replanned,
                done: true,
            });
        }
        if unexpected(map, &states, &self.hist) {
            let prev = self.expl.clone();
            let expl = explain(
                map,
                &self.init,
                &self.mission,
                &self.hist,
                &prev,
                self.me,
                step,
                self.cfg.max_cardinality,
            )
            .map_err(|source| AgentFault::Diagnosis {
                uav: self.me,
                source,
            })?;
            let new_events: Vec<ExoEvent> = expl
                .events
                .iter()
                .filter(|e| !prev.events.contains(e))
                .copied()
                .collect();
            diagnosis = Some(Diagnosis {
                step,
                new_events,
                explanation: expl.clone(),
            });
            self.expl = expl;
            states = project(
                map,
                &self.init,
                &self.mission,
                &self.expl,
                &self.hist,
                self.me,
                step,
            );
        }
        let belief_now = states.last().expect("projection is nonempty");
        if self.goal_achieved(belief_now) {
            self.done = true;
            self.hist.record_action(Action::Wait(self.me));
            return Ok(StepOutcome {
                action: Action::Wait(self.me),
                diagnosis,
                replanned,
                done: true,
            });
        }
        if diagnosis.is_some() {
            self.own_plan = replan(
                map,
                belief_now,
                &self.mission,
                &self.expl.events,
                &self.goal,
                self.me,
                &self.cfg.planner,
            )
            .map_err(|source| AgentFault::Planning {
                uav: self.me,
                source,
            })?;
            replanned = true;
        }
        let mut action = self.own_plan.action_at(self.me, step);
        if !matches!(executable(belief_now, &action, map), Ok(true)) {
            action = Action::Wait(self.me);
        }
        self.hist.record_action(action);
        Ok(StepOutcome {
            action,
            diagnosis,
            replanned,
            done: false,
        })
    }
}
