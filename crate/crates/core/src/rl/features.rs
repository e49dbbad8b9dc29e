use serde::{Deserialize, Serialize};

use crate::env::{obs_code, ObjectKind, MISSION_VOCAB, VIEW_SIZE};
use crate::hints::{EnhancedObservation, Subgoal};

/// Per-cell channels: 11 kinds, 6 colors, 3 states.
pub const CELL_CHANNELS: usize = obs_code::KINDS + obs_code::COLORS + obs_code::STATES;
pub const VIEW_FEATURES: usize = VIEW_SIZE * VIEW_SIZE * CELL_CHANNELS;
pub const HINT_ACTION_FEATURES: usize = 8;
pub const SUBGOAL_FEATURES: usize = Subgoal::COUNT;
pub const CARRY_FEATURES: usize = 1 + ObjectKind::COUNT;

const HINT_OFFSET: usize = VIEW_FEATURES;
const SUBGOAL_OFFSET: usize = HINT_OFFSET + HINT_ACTION_FEATURES;
const AVAIL_OFFSET: usize = SUBGOAL_OFFSET + SUBGOAL_FEATURES;
const CARRY_OFFSET: usize = AVAIL_OFFSET + 1;
const MISSION_OFFSET: usize = CARRY_OFFSET + CARRY_FEATURES;

/// Feature layout: view one-hots, hint action one-hot, subgoal one-hot,
/// availability bit, carried-kind one-hot and, with `mission_text`, a
/// bag-of-words over the mission vocabulary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub mission_text: bool,
}

impl FeatureLayout {
    pub fn new(mission_text: bool) -> FeatureLayout {
        FeatureLayout { mission_text }
    }

    pub fn dim(&self) -> usize {
        MISSION_OFFSET + if self.mission_text { MISSION_VOCAB.len() } else { 0 }
    }

    pub fn hint_offset(&self) -> usize {
        HINT_OFFSET
    }

    pub fn subgoal_offset(&self) -> usize {
        SUBGOAL_OFFSET
    }

    pub fn availability_index(&self) -> usize {
        AVAIL_OFFSET
    }

    pub fn carry_offset(&self) -> usize {
        CARRY_OFFSET
    }

    pub fn mission_offset(&self) -> usize {
        MISSION_OFFSET
    }
}

/// Binary feature vector stored as the sorted indices of its ones.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    pub dim: usize,
    pub active: Vec<u32>,
}

impl FeatureVector {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &i in &self.active {
            v[i as usize] = 1.0;
        }
        v
    }
}

pub fn featurize(obs: &EnhancedObservation, layout: FeatureLayout) -> FeatureVector {
    let mut active = Vec::with_capacity(VIEW_SIZE * VIEW_SIZE * 3 + 8);
    for (row, line) in obs.base.view.iter().enumerate() {
        for (col, triple) in line.iter().enumerate() {
            let base = (row * VIEW_SIZE + col) * CELL_CHANNELS;
            active.push((base + triple[0] as usize) as u32);
            active.push((base + obs_code::KINDS + triple[1] as usize) as u32);
            active.push((base + obs_code::KINDS + obs_code::COLORS + triple[2] as usize) as u32);
        }
    }
    let (hint_code, subgoal) = if obs.hint_available {
        (obs.hint.action_code() as usize, obs.hint.subgoal)
    } else {
        (7, Subgoal::None)
    };
    active.push((HINT_OFFSET + hint_code) as u32);
    active.push((SUBGOAL_OFFSET + subgoal.index()) as u32);
    if obs.hint_available {
        active.push(AVAIL_OFFSET as u32);
    }
    let carry = obs.base.carrying.map(|c| 1 + c.kind.index()).unwrap_or(0);
    active.push((CARRY_OFFSET + carry) as u32);
    if layout.mission_text {
        let mut words: Vec<u32> = obs
            .base
            .mission_text
            .split_whitespace()
            .filter_map(|w| MISSION_VOCAB.iter().position(|v| *v == w))
            .map(|i| (MISSION_OFFSET + i) as u32)
            .collect();
        words.sort_unstable();
        words.dedup();
        active.extend(words);
    }
    FeatureVector {
        dim: layout.dim(),
        active,
    }
}
