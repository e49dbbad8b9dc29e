//! PPO learner: feature encoding, policy/value network, advantage estimation
//! and the clipped-surrogate update.

pub mod checkpoint;
pub mod features;
pub mod gae;
pub mod net;
pub mod ppo;

pub use checkpoint::Checkpoint;
pub use features::{featurize, FeatureLayout, FeatureVector};
pub use gae::compute_gae;
pub use net::{act, ActOutput, Input, PolicyNet, NUM_ACTIONS};
pub use ppo::{
    batch_loss, batch_loss_and_grad, normalize_advantages, ppo_update, Adam, LossStats, LossWeights, PpoConfig,
    RolloutBuffer, Sample, Transition, UpdateStats,
};

#[derive(Debug, thiserror::Error)]
pub enum RlError {
    #[error("length mismatch: {rewards} rewards, {values} values, {dones} dones")]
    LengthMismatch {
        rewards: usize,
        values: usize,
        dones: usize,
    },
    #[error("update called before advantages were computed")]
    AdvantagesMissing,
    #[error("non-finite loss or gradient: {0}")]
    NonFinite(String),
    #[error("checkpoint expects input dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
