//! Multi-agent UAV mission simulation with network-aware planning.
//!
//! A fleet of UAVs photographs targets on a waypoint grid and must deliver
//! the pictures to a home base over a range-limited radio network of fixed
//! relays and the UAVs themselves. Pictures spread instantly within a radio
//! component, so optimal plans exploit multi-hop relaying — including using
//! idle UAVs as data mules. Each UAV runs a sense–diagnose–replan loop that
//! explains unexpected observations by minimal sets of exogenous events
//! (node breaks, aborted or unpredictable UAVs) and replans around them.

pub mod agent;
pub mod belief;
pub mod connectivity;
pub mod error;
pub mod harness;
pub mod planner;
pub mod scenario;
pub mod transition;
pub mod world;

pub use error::{DiagnosisFailure, DomainError, PlanningFailure};
pub use planner::{Goal, Metrics, Plan, PlannerConfig};
pub use transition::{Action, ExoEvent, State};
pub use world::{Location, NodeId, TargetId, UavId, WorldMap};
