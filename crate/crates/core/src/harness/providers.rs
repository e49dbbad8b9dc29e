use super::config::{ExperimentConfig, ProviderKind};
use super::HarnessError;
use crate::env::Action;
use crate::hints::{
    Hint, HintError, HintProvider, HintQuery, NeutralProvider, NoisyProvider, OracleProvider,
    ReplayProvider,
};
use crate::llm::LlmProvider;
use crate::planner;
use crate::seeds::mix_seed;

const NOISY_STREAM: u64 = 0x6e6f_6973_79;

/// Suggests the action after the oracle's, cyclically, so it never agrees
/// with the planner.
#[derive(Clone, Copy, Debug, Default)]
pub struct AntiOracleProvider;

impl HintProvider for AntiOracleProvider {
    fn name(&self) -> &str {
        "anti_oracle"
    }

    fn get_hint(&self, q: &HintQuery<'_>) -> Result<Hint, HintError> {
        let best = planner::optimal_action(q.state, q.mission)
            .map_err(|e| HintError::Planner(e.to_string()))?;
        let wrong = Action::from_code((best.code() + 1) % Action::COUNT as u8).expect("in range");
        Ok(Hint::new(wrong, planner::optimal_subgoal(q.state, q.mission)))
    }
}

/// Provider for a run of `config` with master seed `seed`.
pub fn build_provider(config: &ExperimentConfig, seed: u64) -> Result<Box<dyn HintProvider>, HarnessError> {
    Ok(match config.hints.provider {
        ProviderKind::None | ProviderKind::Neutral => Box::new(NeutralProvider),
        ProviderKind::Oracle => Box::new(OracleProvider),
        ProviderKind::Noisy => Box::new(NoisyProvider::new(
            config.hints.epsilon,
            mix_seed(seed, NOISY_STREAM),
        )),
        ProviderKind::Replay => {
            let path = config.hints.replay_path.as_ref().ok_or_else(|| HarnessError::Config {
                key: "hints.replay_path".into(),
                message: "required by the replay provider".into(),
            })?;
            Box::new(ReplayProvider::load(path).map_err(|e| HarnessError::Config {
                key: "hints.replay_path".into(),
                message: format!("{}: {e}", path.display()),
            })?)
        }
        ProviderKind::Llm => Box::new(LlmProvider::new(config.llm.clone())?),
        ProviderKind::AntiOracle => Box::new(AntiOracleProvider),
    })
}
