//! Scenario files: JSON description of a map, fleet, targets, exogenous
//! event script, and run parameters.
//!
//! The schema is strict (`deny_unknown_fields`) so typos fail loudly.
//! Movement waypoints come either from a four-connected grid or from an
//! explicit location/edge list.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::planner::Goal;
use crate::transition::{ExoEvent, State};
use crate::world::{Location, NodeInfo, NodeKind, TargetInfo, WorldMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Network-aware planning with the full agent loop.
    Aware,
    /// Baseline: the network-unaware plan executed open loop.
    Unaware,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Connectivity {
    Four,
    Explicit {
        locations: Vec<[i32; 2]>,
        edges: Vec<[[i32; 2]; 2]>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub width: Option<i32>,
    #[serde(default)]
    pub height: Option<i32>,
    pub connectivity: Connectivity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct NodeSpec {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub pos: Option<[i32; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub name: String,
    pub location: [i32; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "event", rename_all = "snake_case")]
pub enum ExoSpec {
    Break { node: String, step: u32 },
    Aborted { uav: String, step: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub grid: GridSpec,
    pub nodes: Vec<NodeSpec>,
    pub targets: Vec<TargetSpec>,
    pub radio_range: i64,
    pub uav_start_positions: Vec<[i32; 2]>,
    #[serde(default)]
    pub exo_events: Vec<ExoSpec>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_mode() -> Mode {
    Mode::Aware
}

fn default_max_steps() -> u32 {
    100
}

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub map: WorldMap,
    pub init: State,
    pub goal: Goal,
    pub exo: Vec<ExoEvent>,
    pub mode: Mode,
    pub max_steps: u32,
    pub seed: u64,
}

fn loc(p: [i32; 2]) -> Location {
    Location::new(p[0], p[1])
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile, DomainError> {
        serde_json::from_str(text).map_err(|e| DomainError::Validation(e.to_string()))
    }

    pub fn build(&self) -> Result<Scenario, DomainError> {
        let nodes: Vec<NodeInfo> = self
            .nodes
            .iter()
            .map(|n| NodeInfo {
                name: n.name.clone(),
                kind: n.kind,
                fixed_pos: n.pos.map(loc),
            })
            .collect();
        let targets: Vec<TargetInfo> = self
            .targets
            .iter()
            .map(|t| TargetInfo {
                name: t.name.clone(),
                location: loc(t.location),
            })
            .collect();
        let map = match &self.grid.connectivity {
            Connectivity::Four => {
                let (w, h) = match (self.grid.width, self.grid.height) {
                    (Some(w), Some(h)) => (w, h),
                    _ => {
                        return Err(DomainError::Validation(
                            "four-connected grid requires width and height".into(),
                        ))
                    }
                };
                WorldMap::four_connected(w, h, nodes, targets, self.radio_range)?
            }
            Connectivity::Explicit { locations, edges } => {
                let locations: Vec<Location> = locations.iter().copied().map(loc).collect();
                let edges: Vec<(Location, Location)> =
                    edges.iter().map(|[a, b]| (loc(*a), loc(*b))).collect();
                WorldMap::new(locations, edges, nodes, targets, self.radio_range)?
            }
        };
        if self.uav_start_positions.len() != map.uav_count() {
            return Err(DomainError::Validation(format!(
                "{} start positions for {} UAVs",
                self.uav_start_positions.len(),
                map.uav_count()
            )));
        }
        let init = State::initial(&map, self.uav_start_positions.iter().copied().map(loc).collect())?;
        let mut exo = Vec::new();
        for e in &self.exo_events {
            let ev = match e {
                ExoSpec::Break { node, step } => {
                    let node = map
                        .node_by_name(node)
                        .ok_or_else(|| DomainError::UnknownNode(node.clone()))?;
                    ExoEvent::Break { node, step: *step }
                }
                ExoSpec::Aborted { uav, step } => {
                    let node = map
                        .node_by_name(uav)
                        .ok_or_else(|| DomainError::UnknownUav(uav.clone()))?;
                    let uav_id = map
                        .uav_of_node(node)
                        .ok_or_else(|| DomainError::UnknownUav(uav.clone()))?;
                    ExoEvent::Aborted {
                        uav: uav_id,
                        step: *step,
                    }
                }
            };
            if ev.step() >= self.max_steps {
                return Err(DomainError::Validation(format!(
                    "exogenous event at step {} beyond max_steps {}",
                    ev.step(),
                    self.max_steps
                )));
            }
            exo.push(ev);
        }
        Ok(Scenario {
            goal: Goal {
                targets: map.target_ids().collect(),
            },
            map,
            init,
            exo,
            mode: self.mode,
            max_steps: self.max_steps,
            seed: self.seed,
        })
    }
}

pub fn load(path: &Path) -> Result<Scenario, DomainError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DomainError::Validation(format!("{}: {e}", path.display())))?;
    ScenarioFile::parse(&text)?.build()
}
