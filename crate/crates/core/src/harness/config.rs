use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::encoders::EncodingKind;
use crate::env::{EnvConfig, TaskKind};
use crate::exec::ExecMode;
use crate::llm::LlmConfig;
use crate::rl::{FeatureLayout, PpoConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Hints disabled: the hint channel is permanently neutral.
    #[default]
    None,
    Neutral,
    Oracle,
    Noisy,
    Replay,
    Llm,
    /// Always suggests an action the planner would not take.
    AntiOracle,
}

impl ProviderKind {
    pub fn name(self) -> &'static str {
        match self {
            ProviderKind::None => "none",
            ProviderKind::Neutral => "neutral",
            ProviderKind::Oracle => "oracle",
            ProviderKind::Noisy => "noisy",
            ProviderKind::Replay => "replay",
            ProviderKind::Llm => "llm",
            ProviderKind::AntiOracle => "anti_oracle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HintsConfig {
    pub provider: ProviderKind,
    /// Hint frequency: a hint is due at step t when t mod k = 0.
    pub k: u32,
    /// Number of past actions kept for prompts.
    pub history: usize,
    pub encoding: EncodingKind,
    /// Replacement probability of the noisy provider.
    pub epsilon: f64,
    pub replay_path: Option<PathBuf>,
}

impl Default for HintsConfig {
    fn default() -> Self {
        HintsConfig {
            provider: ProviderKind::None,
            k: 5,
            history: 5,
            encoding: EncodingKind::AsciiGrid,
            epsilon: 0.0,
            replay_path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvConfig,
    pub hints: HintsConfig,
    pub llm: LlmConfig,
    pub ppo: PpoConfig,
    /// Append mission bag-of-words features.
    pub text: bool,
    pub seeds: Vec<u64>,
    /// Base of the evaluation instance seeds.
    pub eval_seed: u64,
    pub eval_episodes: usize,
    /// Frames between metric points.
    pub metric_interval: u64,
    /// Trailing episode window for the win rate.
    pub win_window: usize,
    /// Stop at the first metric point where a full trailing window reaches
    /// this win rate.
    pub early_stop_win_rate: Option<f64>,
    pub output_dir: PathBuf,
    /// Write a per-step trace (`steps.jsonl`).
    pub trace_steps: bool,
    pub exec: ExecMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "run".into(),
            env: EnvConfig::new(TaskKind::GoToObj, 6),
            hints: HintsConfig::default(),
            llm: LlmConfig::default(),
            ppo: PpoConfig::default(),
            text: false,
            seeds: vec![1, 2, 3],
            eval_seed: 0x5eed,
            eval_episodes: 200,
            metric_interval: 10_000,
            win_window: 100,
            early_stop_win_rate: None,
            output_dir: PathBuf::from("runs/run"),
            trace_steps: false,
            exec: ExecMode::Parallel,
        }
    }
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn bad(key: &str, msg: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        key: key.to_string(),
        message: msg.into(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| bad("<config>", e.to_string()))?;
        Self::from_value(value)
    }

    /// Deserialize and validate. Missing keys, nested ones included, take
    /// their values from [`ExperimentConfig::default`]. Errors carry the
    /// dotted key path.
    pub fn from_value(value: serde_json::Value) -> Result<ExperimentConfig, HarnessError> {
        let mut merged = serde_json::to_value(ExperimentConfig::default()).expect("config serializes");
        merge(&mut merged, value);
        let config: ExperimentConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
            let path = e.path().to_string();
            let key = if path == "." { "<config>".to_string() } else { path };
            bad(&key, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("<config>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::new(self.text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.env.validate().map_err(|e| bad("env", e.to_string()))?;
        self.ppo.validate().map_err(|e| {
            let key = e.split(':').next().unwrap_or("ppo").to_string();
            bad(&key, e)
        })?;
        if self.hints.k == 0 {
            return Err(bad("hints.k", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.hints.epsilon) {
            return Err(bad("hints.epsilon", "must lie in [0, 1]"));
        }
        if self.hints.provider == ProviderKind::Replay && self.hints.replay_path.is_none() {
            return Err(bad("hints.replay_path", "required by the replay provider"));
        }
        if self.hints.provider == ProviderKind::Llm {
            self.llm.validate().map_err(|e| {
                let key = e.split(':').next().unwrap_or("llm").to_string();
                bad(&key, e)
            })?;
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "must not be empty"));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(bad("seeds", "must be distinct"));
        }
        if self.eval_episodes == 0 {
            return Err(bad("eval_episodes", "must be at least 1"));
        }
        if self.metric_interval == 0 {
            return Err(bad("metric_interval", "must be at least 1"));
        }
        if self.win_window == 0 {
            return Err(bad("win_window", "must be at least 1"));
        }
        if let Some(x) = self.early_stop_win_rate {
            if !(x > 0.0 && x <= 1.0) {
                return Err(bad("early_stop_win_rate", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}
