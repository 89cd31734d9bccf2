//! Operational semantics: minimal models, reasoning cycles and the
//! synchronous joint step.

pub mod cycle;
pub mod model;
pub mod state;

use thiserror::Error;

pub use cycle::{
    agent_cycle, agent_options, compose_joint, joint_successors, normalize_goals, state_cycles,
    AgentCycle, Caches, GroundContext, JointAction, VirtualOption, SKIP_LABEL,
};
pub use model::{minimal_model, ModelCache, StratifiedRules};
pub use state::{interpret_goals, interpreted_key, state_label, AgentState, InboxMsg, SystemState};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("specification has validation errors:\n{0}")]
    Invalid(String),
    #[error(transparent)]
    Ground(#[from] crate::lang::ground::GroundError),
    #[error("state budget exceeded: exploration passed {cap} states")]
    StateCapExceeded { cap: usize },
}
