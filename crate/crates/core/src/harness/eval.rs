use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::encoders::{encode, EncodingKind};
use crate::env::{observe, reset, Action};
use crate::exec::{self, ExecMode};
use crate::hints::{augment, ActionHistory, HintProvider, HintQuery, Subgoal, NEUTRAL_ACTION_CODE};
use crate::planner;
use crate::rl::{act, featurize, Checkpoint, Input, PolicyNet};
use crate::seeds::{eval_instance_seed, mix_seed, rng_for};

const EVAL_STREAM: u64 = 0x6576_616c;
const QUALITY_STREAM: u64 = 0x7175_616c;

/// How actions are chosen during evaluation.
#[derive(Clone, Copy)]
pub enum Policy<'a> {
    Greedy(&'a PolicyNet),
    Sampled(&'a PolicyNet),
    /// Uniform over all primitive actions.
    Uniform,
    /// The planner's action, bypassing any network.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub episodes: usize,
    pub successes: usize,
    pub win_rate: f64,
    pub mean_return: f64,
}

/// Roll `episodes` evaluation instances (seeds disjoint from training) and
/// report the success fraction. Hints are issued as in training.
pub fn evaluate_policy(
    config: &ExperimentConfig,
    policy: Policy<'_>,
    provider: &dyn HintProvider,
    episodes: usize,
    mode: ExecMode,
) -> Result<EvalResult, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::Usage("evaluation needs at least one episode".into()));
    }
    if let Policy::Greedy(net) | Policy::Sampled(net) = policy {
        let expected = config.layout().dim();
        if net.input_dim() != expected {
            return Err(HarnessError::Config {
                key: "text".into(),
                message: format!(
                    "policy expects {} input features, configuration produces {expected}",
                    net.input_dim()
                ),
            });
        }
    }
    let outcomes = exec::map_range(mode, episodes, |i| run_episode(config, policy, provider, i as u64));
    let mut successes = 0;
    let mut total_return = 0.0;
    for o in outcomes {
        let (success, ret) = o?;
        successes += success as usize;
        total_return += ret;
    }
    Ok(EvalResult {
        episodes,
        successes,
        win_rate: successes as f64 / episodes as f64,
        mean_return: total_return / episodes as f64,
    })
}

fn run_episode(
    config: &ExperimentConfig,
    policy: Policy<'_>,
    provider: &dyn HintProvider,
    index: u64,
) -> Result<(bool, f64), HarnessError> {
    let (mut state, mission) = reset(&config.env, eval_instance_seed(config.eval_seed, index))?;
    let mut rng: ChaCha8Rng = rng_for(mix_seed(config.eval_seed, index), EVAL_STREAM);
    let mut history = ActionHistory::new(config.hints.history);
    let mut ret = 0.0;
    let mut t = 0;
    loop {
        t += 1;
        let action = match policy {
            Policy::Oracle => planner::optimal_action(&state, &mission)
                .map_err(|e| HarnessError::Internal(e.to_string()))?,
            Policy::Uniform => Action::from_code(rng.gen_range(0..Action::COUNT as u8)).expect("in range"),
            Policy::Greedy(net) | Policy::Sampled(net) => {
                let query = HintQuery::new(&state, &mission, &history, config.hints.encoding, index, t);
                let aug = augment(observe(&state, &mission), &query, config.hints.k, provider).map_err(|_| {
                    HarnessError::Config {
                        key: "hints.k".into(),
                        message: "must be at least 1".into(),
                    }
                })?;
                let f = featurize(&aug.observation, config.layout());
                act(net, Input::from(&f), &mut rng, matches!(policy, Policy::Greedy(_))).action
            }
        };
        let r = state.step(&mission, action)?;
        history
            .push(t, action)
            .map_err(|e| HarnessError::Internal(e.to_string()))?;
        ret += r.reward;
        if r.done {
            return Ok((r.success, ret));
        }
    }
}

/// Load a checkpoint and check it fits `config`.
pub fn load_policy(path: &Path, config: &ExperimentConfig) -> Result<PolicyNet, HarnessError> {
    let ck = Checkpoint::load(path)?;
    ck.network(config.layout().dim()).map_err(|e| HarnessError::Config {
        key: "checkpoint".into(),
        message: e.to_string(),
    })
}

/// One judged hint, written to `quality.jsonl`. The two manual fields are
/// left empty for human annotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HintQualityRecord {
    pub sample_id: usize,
    pub instance_seed: u64,
    pub depth: u32,
    pub encoding_kind: EncodingKind,
    pub encoding: String,
    pub mission: String,
    pub hint_action: u8,
    pub hint_subgoal: Subgoal,
    pub oracle_action: u8,
    pub optimal_match: bool,
    /// The hint starts some shortest plan, not necessarily the planner's.
    pub any_optimal: bool,
    pub reasoning: Option<String>,
    pub error: Option<String>,
    pub state_awareness: Option<bool>,
    pub action_reasoning: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub provider: String,
    pub samples: usize,
    pub matches: usize,
    pub optimal_match_rate: f64,
    pub any_optimal_rate: f64,
    pub errors: usize,
}

fn optimal_first_actions(state: &crate::env::WorldState, mission: &crate::env::Mission) -> Vec<u8> {
    let Ok(best) = planner::plan_within(state, mission, u32::MAX) else {
        return Vec::new();
    };
    Action::ALL
        .into_iter()
        .filter(|&a| {
            let mut s = state.clone();
            match s.step(mission, a) {
                Ok(r) if r.success => best.len() == 1,
                Ok(r) if r.done => false,
                Ok(_) => planner::plan_within(&s, mission, u32::MAX).is_ok_and(|p| p.len() + 1 == best.len()),
                Err(_) => false,
            }
        })
        .map(Action::code)
        .collect()
}

/// Judge `provider` against the planner on `n` sampled states. States come
/// from uniform-random rollouts to a depth drawn from `[0, max_steps / 2]`;
/// steps that would end the episode are skipped.
pub fn evaluate_hint_quality(
    config: &ExperimentConfig,
    provider: &dyn HintProvider,
    n: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<(Vec<HintQualityRecord>, QualitySummary), HarnessError> {
    if n == 0 {
        return Err(HarnessError::Usage("hint quality needs at least one sample".into()));
    }
    let base = mix_seed(seed, QUALITY_STREAM);
    let records = exec::map_range(mode, n, |i| -> Result<HintQualityRecord, HarnessError> {
        let instance_seed = eval_instance_seed(base, i as u64);
        let (mut state, mission) = reset(&config.env, instance_seed)?;
        let mut rng = rng_for(base, i as u64);
        let depth = rng.gen_range(0..=state.max_steps / 2);
        let mut history = ActionHistory::new(config.hints.history);
        let mut t = 0;
        for _ in 0..depth {
            let a = Action::from_code(rng.gen_range(0..Action::COUNT as u8)).expect("in range");
            let mut next = state.clone();
            if next.step(&mission, a)?.done {
                continue;
            }
            state = next;
            t += 1;
            history
                .push(t, a)
                .map_err(|e| HarnessError::Internal(e.to_string()))?;
        }
        let oracle = planner::optimal_action(&state, &mission)
            .map_err(|e| HarnessError::Internal(e.to_string()))?;
        let query = HintQuery::new(&state, &mission, &history, config.hints.encoding, i as u64, t + 1);
        let (hint, error) = match provider.get_hint(&query) {
            Ok(h) => (Some(h), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let hint_action = hint.as_ref().map_or(NEUTRAL_ACTION_CODE, |h| h.action_code());
        Ok(HintQualityRecord {
            sample_id: i,
            instance_seed,
            depth: t,
            encoding_kind: config.hints.encoding,
            encoding: encode(config.hints.encoding, &state, &mission).text,
            mission: mission.text.clone(),
            hint_action,
            hint_subgoal: hint.as_ref().map_or(Subgoal::None, |h| h.subgoal),
            oracle_action: oracle.code(),
            optimal_match: hint_action == oracle.code(),
            any_optimal: optimal_first_actions(&state, &mission).contains(&hint_action),
            reasoning: hint.and_then(|h| h.reasoning),
            error,
            state_awareness: None,
            action_reasoning: None,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let matches = records.iter().filter(|r| r.optimal_match).count();
    let summary = QualitySummary {
        provider: provider.name().to_string(),
        samples: n,
        matches,
        optimal_match_rate: matches as f64 / n as f64,
        any_optimal_rate: records.iter().filter(|r| r.any_optimal).count() as f64 / n as f64,
        errors: records.iter().filter(|r| r.error.is_some()).count(),
    };
    Ok((records, summary))
}

pub fn write_quality(dir: &Path, records: &[HintQualityRecord], summary: &QualitySummary) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("quality.jsonl"))?);
    for r in records {
        serde_json::to_writer(&mut f, r).map_err(|e| HarnessError::Internal(e.to_string()))?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    std::fs::write(
        dir.join("quality_summary.json"),
        serde_json::to_string_pretty(summary).expect("summary serializes"),
    )?;
    Ok(())
}
