//! Hint channel: providers, the neutral value, action history, the hint
//! schedule and assembly of the enhanced observation.

use std::cell::OnceCell;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoders::{encode, EncodedState, EncodingKind};
use crate::env::{Action, Mission, Observation, WorldState};
use crate::planner;
use crate::seeds;

/// Action code standing for "no suggestion".
pub const NEUTRAL_ACTION_CODE: u8 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subgoal {
    #[serde(rename = "GoNextToSubgoal")]
    GoNextTo,
    #[serde(rename = "PickupSubgoal")]
    Pickup,
    #[serde(rename = "DropSubgoal")]
    Drop,
    #[serde(rename = "OpenSubgoal")]
    Open,
    #[serde(rename = "CloseSubgoal")]
    Close,
    #[serde(rename = "ExploreSubgoal")]
    Explore,
    #[serde(rename = "done")]
    Done,
    #[serde(rename = "none")]
    None,
}

impl Subgoal {
    pub const COUNT: usize = 8;
    pub const ALL: [Subgoal; 8] = [
        Subgoal::GoNextTo,
        Subgoal::Pickup,
        Subgoal::Drop,
        Subgoal::Open,
        Subgoal::Close,
        Subgoal::Explore,
        Subgoal::Done,
        Subgoal::None,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Subgoal::GoNextTo => "GoNextToSubgoal",
            Subgoal::Pickup => "PickupSubgoal",
            Subgoal::Drop => "DropSubgoal",
            Subgoal::Open => "OpenSubgoal",
            Subgoal::Close => "CloseSubgoal",
            Subgoal::Explore => "ExploreSubgoal",
            Subgoal::Done => "done",
            Subgoal::None => "none",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Subgoal::GoNextTo => "Navigate next to a target object",
            Subgoal::Pickup => "Pick up a specific object",
            Subgoal::Drop => "Drop the currently carried object",
            Subgoal::Open => "Open a door or container",
            Subgoal::Close => "Close a door or container",
            Subgoal::Explore => "Explore environment to locate objects",
            Subgoal::Done => "Task completed successfully",
            Subgoal::None => "No specific subgoal",
        }
    }
}

impl fmt::Display for Subgoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subgoal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subgoal::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown subgoal `{s}`"))
    }
}

/// A suggested action and subgoal. `action == None` together with
/// `subgoal == Subgoal::None` is the neutral hint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hint {
    pub action: Option<Action>,
    pub subgoal: Subgoal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
}

impl Hint {
    pub fn neutral() -> Hint {
        Hint {
            action: None,
            subgoal: Subgoal::None,
            reasoning: None,
        }
    }

    pub fn new(action: Action, subgoal: Subgoal) -> Hint {
        Hint {
            action: Some(action),
            subgoal,
            reasoning: None,
        }
    }

    pub fn with_reasoning(mut self, reasoning: impl Into<String>) -> Hint {
        self.reasoning = Some(reasoning.into());
        self
    }

    pub fn is_neutral(&self) -> bool {
        self.action.is_none() && self.subgoal == Subgoal::None
    }

    /// 0..=6 for real actions, 7 for neutral.
    pub fn action_code(&self) -> u8 {
        self.action.map(Action::code).unwrap_or(NEUTRAL_ACTION_CODE)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HistoryError {
    #[error("step index {index} is not after the last recorded index {last}")]
    NonMonotonic { index: u32, last: u32 },
}

/// The `capacity` most recent (step, action) pairs, oldest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionHistory {
    entries: VecDeque<(u32, Action)>,
    capacity: usize,
}

impl ActionHistory {
    pub fn new(capacity: usize) -> ActionHistory {
        ActionHistory {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, Action)> + '_ {
        self.entries.iter().copied()
    }

    pub fn push(&mut self, step: u32, action: Action) -> Result<(), HistoryError> {
        if let Some(&(last, _)) = self.entries.back() {
            if step <= last {
                return Err(HistoryError::NonMonotonic { index: step, last });
            }
        }
        if self.capacity == 0 {
            return Ok(());
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((step, action));
        Ok(())
    }

    /// `["step 3: turn left", "step 4: move forward"]`
    pub fn format_lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(i, a)| format!("step {i}: {}", a.name()))
            .collect()
    }
}

/// Environment observation plus the hint channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnhancedObservation {
    pub base: Observation,
    pub hint: Hint,
    pub hint_available: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HintError {
    #[error("planner failed: {0}")]
    Planner(String),
    #[error("no recorded hint for episode {episode} step {t}")]
    MissingReplay { episode: u64, t: u32 },
    #[error("language model request failed: {0}")]
    Llm(String),
    #[error("could not parse language model response: {0}")]
    Parse(String),
    #[error("request budget exhausted")]
    BudgetExceeded,
    #[error("{0}")]
    Other(String),
}

/// Everything a provider may look at for one hint.
pub struct HintQuery<'a> {
    pub state: &'a WorldState,
    pub mission: &'a Mission,
    pub history: &'a ActionHistory,
    pub encoding: EncodingKind,
    /// Run-unique episode identifier.
    pub episode: u64,
    /// Step index within the episode (first step is 1).
    pub t: u32,
    encoded: OnceCell<EncodedState>,
}

impl<'a> HintQuery<'a> {
    pub fn new(
        state: &'a WorldState,
        mission: &'a Mission,
        history: &'a ActionHistory,
        encoding: EncodingKind,
        episode: u64,
        t: u32,
    ) -> HintQuery<'a> {
        HintQuery {
            state,
            mission,
            history,
            encoding,
            episode,
            t,
            encoded: OnceCell::new(),
        }
    }

    /// The state text encoding, computed on first use.
    pub fn encoded(&self) -> &EncodedState {
        self.encoded
            .get_or_init(|| encode(self.encoding, self.state, self.mission))
    }
}

/// Source of hints. Implementations are shared across environment workers.
pub trait HintProvider: Send + Sync {
    fn name(&self) -> &str;
    fn get_hint(&self, query: &HintQuery<'_>) -> Result<Hint, HintError>;
}

/// Always returns the neutral hint.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeutralProvider;

impl HintProvider for NeutralProvider {
    fn name(&self) -> &str {
        "neutral"
    }

    fn get_hint(&self, _: &HintQuery<'_>) -> Result<Hint, HintError> {
        Ok(Hint::neutral())
    }
}

/// Ground-truth hints from the planner.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleProvider;

impl HintProvider for OracleProvider {
    fn name(&self) -> &str {
        "oracle"
    }

    fn get_hint(&self, q: &HintQuery<'_>) -> Result<Hint, HintError> {
        let action = planner::optimal_action(q.state, q.mission)
            .map_err(|e| HintError::Planner(e.to_string()))?;
        Ok(Hint::new(action, planner::optimal_subgoal(q.state, q.mission)))
    }
}

/// Oracle hints where, with probability `epsilon`, the action is replaced by a
/// uniformly drawn different action. The draw is a pure function of
/// `(seed, episode, t)`, so results do not depend on worker scheduling.
#[derive(Clone, Copy, Debug)]
pub struct NoisyProvider {
    pub epsilon: f64,
    pub seed: u64,
}

impl NoisyProvider {
    pub fn new(epsilon: f64, seed: u64) -> NoisyProvider {
        NoisyProvider { epsilon, seed }
    }
}

impl HintProvider for NoisyProvider {
    fn name(&self) -> &str {
        "noisy"
    }

    fn get_hint(&self, q: &HintQuery<'_>) -> Result<Hint, HintError> {
        let mut hint = OracleProvider.get_hint(q)?;
        let mut rng = seeds::rng_for(seeds::mix_seed(self.seed, q.episode), q.t as u64);
        if rng.gen_bool(self.epsilon.clamp(0.0, 1.0)) {
            let oracle = hint.action.expect("oracle hints carry an action").code();
            let mut other = rng.gen_range(0..Action::COUNT as u8 - 1);
            if other >= oracle {
                other += 1;
            }
            hint.action = Action::from_code(other);
        }
        Ok(hint)
    }
}

/// One hint-log line (`hints.jsonl`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HintLogRecord {
    pub episode: u64,
    pub t: u32,
    pub encoding_kind: EncodingKind,
    pub hint_action: u8,
    pub subgoal: Subgoal,
    pub provider: String,
    pub latency_ms: f64,
    #[serde(default)]
    pub reasoning: Option<String>,
}

impl HintLogRecord {
    pub fn hint(&self) -> Hint {
        Hint {
            action: Action::from_code(self.hint_action),
            subgoal: self.subgoal,
            reasoning: self.reasoning.clone(),
        }
    }
}

/// Replays hints recorded in a hint log, keyed by (episode, t).
#[derive(Clone, Debug, Default)]
pub struct ReplayProvider {
    hints: HashMap<(u64, u32), Hint>,
}

impl ReplayProvider {
    pub fn from_records(records: impl IntoIterator<Item = HintLogRecord>) -> ReplayProvider {
        ReplayProvider {
            hints: records
                .into_iter()
                .map(|r| ((r.episode, r.t), r.hint()))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> std::io::Result<ReplayProvider> {
        let reader = BufReader::new(File::open(path)?);
        let mut records = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: HintLogRecord = serde_json::from_str(&line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            records.push(rec);
        }
        Ok(ReplayProvider::from_records(records))
    }

    pub fn len(&self) -> usize {
        self.hints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hints.is_empty()
    }
}

impl HintProvider for ReplayProvider {
    fn name(&self) -> &str {
        "replay"
    }

    fn get_hint(&self, q: &HintQuery<'_>) -> Result<Hint, HintError> {
        self.hints
            .get(&(q.episode, q.t))
            .cloned()
            .ok_or(HintError::MissingReplay {
                episode: q.episode,
                t: q.t,
            })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("hint frequency k must be at least 1")]
pub struct ZeroFrequency;

/// Hints are due on steps where `t mod k == 0`; the first step is `t = 1`.
pub fn schedule_due(t: u32, k: u32) -> Result<bool, ZeroFrequency> {
    if k == 0 {
        return Err(ZeroFrequency);
    }
    Ok(t % k == 0)
}

/// Result of [`augment`]: the observation plus what happened on the hint side.
pub struct Augmented {
    pub observation: EnhancedObservation,
    /// Set when the provider was consulted.
    pub log: Option<HintLogRecord>,
    pub error: Option<HintError>,
}

/// Build the enhanced observation for step `t`. The provider is consulted only
/// on due steps; provider failures and neutral answers leave the hint channel
/// neutral with availability 0.
pub fn augment(
    base: Observation,
    query: &HintQuery<'_>,
    k: u32,
    provider: &dyn HintProvider,
) -> Result<Augmented, ZeroFrequency> {
    if !schedule_due(query.t, k)? {
        return Ok(Augmented {
            observation: EnhancedObservation {
                base,
                hint: Hint::neutral(),
                hint_available: false,
            },
            log: None,
            error: None,
        });
    }
    let started = Instant::now();
    let result = provider.get_hint(query);
    let latency_ms = started.elapsed().as_secs_f64() * 1e3;
    let (hint, error) = match result {
        Ok(h) if h.is_neutral() => (Hint::neutral(), None),
        Ok(h) => (h, None),
        Err(e) => {
            log::warn!(
                "hint provider {} failed at episode {} t {}: {e}",
                provider.name(),
                query.episode,
                query.t
            );
            (Hint::neutral(), Some(e))
        }
    };
    let available = !hint.is_neutral();
    let log = HintLogRecord {
        episode: query.episode,
        t: query.t,
        encoding_kind: query.encoding,
        hint_action: hint.action_code(),
        subgoal: hint.subgoal,
        provider: provider.name().to_string(),
        latency_ms,
        reasoning: hint.reasoning.clone(),
    };
    Ok(Augmented {
        observation: EnhancedObservation {
            base,
            hint,
            hint_available: available,
        },
        log: Some(log),
        error,
    })
}
