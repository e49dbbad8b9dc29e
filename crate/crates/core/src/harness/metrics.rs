use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// One learning-curve sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    /// Cumulative environment steps.
    pub frames: u64,
    /// Success fraction over the trailing episode window.
    pub win_rate: f64,
    pub mean_return: f64,
    /// Episodes completed so far.
    pub episodes: u64,
}

/// Trailing window of episode outcomes.
#[derive(Clone, Debug)]
pub struct WinWindow {
    size: usize,
    outcomes: VecDeque<(bool, f64)>,
    total: u64,
}

impl WinWindow {
    pub fn new(size: usize) -> WinWindow {
        WinWindow {
            size,
            outcomes: VecDeque::with_capacity(size),
            total: 0,
        }
    }

    pub fn push(&mut self, success: bool, ret: f64) {
        if self.outcomes.len() == self.size {
            self.outcomes.pop_front();
        }
        self.outcomes.push_back((success, ret));
        self.total += 1;
    }

    pub fn is_full(&self) -> bool {
        self.outcomes.len() == self.size
    }

    pub fn episodes(&self) -> u64 {
        self.total
    }

    pub fn win_rate(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.outcomes.iter().filter(|o| o.0).count() as f64 / self.outcomes.len() as f64
    }

    pub fn mean_return(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.outcomes.iter().map(|o| o.1).sum::<f64>() / self.outcomes.len() as f64
    }

    pub fn point(&self, frames: u64) -> MetricPoint {
        MetricPoint {
            frames,
            win_rate: self.win_rate(),
            mean_return: self.mean_return(),
            episodes: self.total,
        }
    }
}

/// Frames needed to reach a win-rate threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Threshold {
    Frames(u64),
    NotReached,
}

impl Threshold {
    pub fn frames(self) -> Option<u64> {
        match self {
            Threshold::Frames(f) => Some(f),
            Threshold::NotReached => None,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Frames(n) => f.write_str(&format_frames(*n)),
            Threshold::NotReached => f.write_str("Never"),
        }
    }
}

/// First metric point whose win rate reaches `threshold`.
pub fn frames_to_threshold(metrics: &[MetricPoint], threshold: f64) -> Result<Threshold, HarnessError> {
    if metrics.is_empty() {
        return Err(HarnessError::Usage("no metric points".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(HarnessError::Usage(format!("threshold {threshold} outside (0, 1)")));
    }
    Ok(metrics
        .iter()
        .find(|m| m.win_rate >= threshold)
        .map(|m| Threshold::Frames(m.frames))
        .unwrap_or(Threshold::NotReached))
}

/// Median over seeds, treating `NotReached` as larger than any frame count.
pub fn median_threshold(values: &[Threshold]) -> Option<Threshold> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort();
    Some(v[(v.len() - 1) / 2])
}

fn trim_decimal(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `120000` → `120K`, `1080000` → `1.08M`.
pub fn format_frames(n: u64) -> String {
    if n >= 1_000_000 {
        format!("{}M", trim_decimal(format!("{:.2}", n as f64 / 1e6)))
    } else if n >= 1_000 {
        format!("{}K", trim_decimal(format!("{:.1}", n as f64 / 1e3)))
    } else {
        n.to_string()
    }
}

/// Baseline frames over condition frames, e.g. `(9×)`. `None` when either
/// side never reached the threshold.
pub fn speedup(baseline: Threshold, condition: Threshold) -> Option<f64> {
    match (baseline, condition) {
        (Threshold::Frames(b), Threshold::Frames(c)) if c > 0 => Some(b as f64 / c as f64),
        _ => None,
    }
}

pub fn format_speedup(ratio: f64) -> String {
    format!("({}×)", trim_decimal(format!("{ratio:.1}")))
}
