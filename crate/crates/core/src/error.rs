//! Error types shared across the crate.

use crate::world::Location;

#[derive(Debug, thiserror::Error)]
pub enum DomainError {
    #[error("unknown location {0}")]
    UnknownLocation(Location),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown UAV {0}")]
    UnknownUav(String),
    #[error("irreflexive relation queried with identical endpoints {0}")]
    SameNode(String),
    #[error("action not executable: {0}")]
    NotExecutable(String),
    #[error("inconsistent explanation: {0}")]
    InconsistentExplanation(String),
    #[error("validation: {0}")]
    Validation(String),
}

/// Planning failed within the configured horizon bound.
#[derive(Debug, Clone, Copy, thiserror::Error)]
#[error("no plan achieves the goal within horizon {max_horizon}")]
pub struct PlanningFailure {
    pub max_horizon: u32,
}

/// No explanation exists within the exogenous-event vocabulary.
#[derive(Debug, Clone, Copy, thiserror::Error)]
#[error("no consistent explanation up to cardinality {max_cardinality}")]
pub struct DiagnosisFailure {
    pub max_cardinality: usize,
}
