//! Deterministic, seedable single-room gridworld with BabyAI-style dynamics.
//!
//! Three task families are supported: going to an object, opening a door on
//! the room boundary, and picking up an object described by its quadrant.
//! Rewards are sparse: a success at step `n` pays `1 - 0.9 * n / max_steps`,
//! every other step pays zero.

mod mission;
mod observation;
mod types;
mod world;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mission::{
    DoorGoal, Location, Mission, Quadrant, RelativeSide, TaskKind, MISSION_VOCAB,
};
pub use observation::{observe, visible_cells, Observation, VIEW_SIZE};
pub use types::{
    obs_code, Action, AgentPose, Color, Direction, DoorState, GridObject, ObjectKind,
};
pub use world::{is_success, reset, EnvConfig, StepResult, WorldState};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment configuration: {0}")]
    Config(String),
    #[error("unknown task kind `{0}`")]
    UnknownTask(String),
    #[error("step called on a finished episode")]
    StepAfterDone,
    #[error("could not generate a solvable instance for seed {0}")]
    Generation(u64),
}

/// Replay-file snapshot of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub state: WorldState,
    pub mission: Mission,
}

impl Snapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Snapshot> {
        serde_json::from_str(text)
    }
}
