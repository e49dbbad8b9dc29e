use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ProviderKind};
use super::metrics::{MetricPoint, WinWindow};
use super::HarnessError;
use crate::env::{observe, reset, Mission, WorldState};
use crate::exec;
use crate::hints::{augment, ActionHistory, HintError, HintLogRecord, HintProvider, HintQuery, Subgoal};
use crate::rl::{
    act, featurize, ppo_update, Adam, Checkpoint, FeatureVector, Input, PolicyNet, RolloutBuffer,
    Transition, UpdateStats,
};
use crate::seeds::{mix_seed, rng_for, train_instance_seed};

const WORKER_STREAM: u64 = 0x776f_726b;
const LEARNER_STREAM: u64 = 0x6c65_6172;
const INIT_STREAM: u64 = 0x696e_6974;

/// One line of `steps.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub episode: u64,
    pub t: u32,
    pub hint_available: bool,
    pub hint_action: u8,
    pub subgoal: Subgoal,
    pub action: u8,
    pub reward: f64,
    pub done: bool,
    pub history_len: usize,
}

/// The hint channel of the current, not yet acted-on observation.
struct Pending {
    features: FeatureVector,
    hint_available: bool,
    hint_action: u8,
    subgoal: Subgoal,
}

struct Worker {
    index: usize,
    workers: usize,
    run_seed: u64,
    state: WorldState,
    mission: Mission,
    history: ActionHistory,
    t: u32,
    /// Episodes started by this worker so far, including the current one.
    started: u64,
    episode_id: u64,
    episode_return: f64,
    rng: ChaCha8Rng,
    pending: Option<Pending>,
}

#[derive(Clone, Copy, Debug)]
struct EpisodeEnd {
    step: usize,
    success: bool,
    ret: f64,
}

#[derive(Default)]
struct Segment {
    transitions: Vec<Transition>,
    last_value: f64,
    episodes: Vec<EpisodeEnd>,
    hint_log: Vec<HintLogRecord>,
    trace: Vec<StepTrace>,
    hint_errors: u64,
    /// Offset within the phase of the first budget-exhausted hint.
    budget_exhausted: Option<usize>,
}

struct Shared<'a> {
    config: &'a ExperimentConfig,
    provider: &'a dyn HintProvider,
    net: &'a PolicyNet,
    log_hints: bool,
}

impl Worker {
    fn new(config: &ExperimentConfig, run_seed: u64, index: usize) -> Result<Worker, HarnessError> {
        let workers = config.ppo.workers;
        let (state, mission) = reset(&config.env, train_instance_seed(run_seed, index, 0))?;
        Ok(Worker {
            index,
            workers,
            run_seed,
            state,
            mission,
            history: ActionHistory::new(config.hints.history),
            t: 0,
            started: 1,
            episode_id: index as u64,
            episode_return: 0.0,
            rng: rng_for(mix_seed(run_seed, index as u64), WORKER_STREAM),
            pending: None,
        })
    }

    fn next_episode(&mut self, config: &ExperimentConfig) -> Result<(), HarnessError> {
        let seed = train_instance_seed(self.run_seed, self.index, self.started);
        let (state, mission) = reset(&config.env, seed)?;
        self.state = state;
        self.mission = mission;
        self.episode_id = self.started * self.workers as u64 + self.index as u64;
        self.started += 1;
        self.history.clear();
        self.t = 0;
        self.episode_return = 0.0;
        Ok(())
    }

    /// Advance t and build the enhanced observation for it.
    fn observe_next(&mut self, sh: &Shared<'_>, step: usize, seg: &mut Segment) -> Result<(), HarnessError> {
        self.t += 1;
        let hints = &sh.config.hints;
        let query = HintQuery::new(
            &self.state,
            &self.mission,
            &self.history,
            hints.encoding,
            self.episode_id,
            self.t,
        );
        let aug = augment(observe(&self.state, &self.mission), &query, hints.k, sh.provider)
            .map_err(|_| HarnessError::Config {
                key: "hints.k".into(),
                message: "must be at least 1".into(),
            })?;
        if let Some(err) = &aug.error {
            seg.hint_errors += 1;
            if *err == HintError::BudgetExceeded && seg.budget_exhausted.is_none() {
                seg.budget_exhausted = Some(step);
            }
        }
        if sh.log_hints {
            seg.hint_log.extend(aug.log);
        }
        let obs = aug.observation;
        self.pending = Some(Pending {
            features: featurize(&obs, sh.config.layout()),
            hint_available: obs.hint_available,
            hint_action: obs.hint.action_code(),
            subgoal: obs.hint.subgoal,
        });
        Ok(())
    }

    fn rollout(&mut self, sh: &Shared<'_>, horizon: usize) -> Result<Segment, HarnessError> {
        let mut seg = Segment {
            transitions: Vec::with_capacity(horizon),
            ..Segment::default()
        };
        for step in 0..horizon {
            if self.pending.is_none() {
                self.observe_next(sh, step, &mut seg)?;
            }
            let p = self.pending.take().expect("observation prepared");
            let out = act(sh.net, Input::from(&p.features), &mut self.rng, false);
            let result = self.state.step(&self.mission, out.action)?;
            self.history
                .push(self.t, out.action)
                .map_err(|e| HarnessError::Internal(e.to_string()))?;
            self.episode_return += result.reward;
            if sh.config.trace_steps {
                seg.trace.push(StepTrace {
                    episode: self.episode_id,
                    t: self.t,
                    hint_available: p.hint_available,
                    hint_action: p.hint_action,
                    subgoal: p.subgoal,
                    action: out.action.code(),
                    reward: result.reward,
                    done: result.done,
                    history_len: self.history.len(),
                });
            }
            seg.transitions.push(Transition {
                features: p.features,
                action: out.action.code(),
                log_prob: out.log_prob,
                value: out.value,
                reward: result.reward,
                done: result.done,
            });
            if result.done {
                seg.episodes.push(EpisodeEnd {
                    step,
                    success: result.success,
                    ret: self.episode_return,
                });
                self.next_episode(sh.config)?;
            }
        }
        if self.pending.is_none() {
            self.observe_next(sh, horizon, &mut seg)?;
        }
        let p = self.pending.as_ref().expect("observation prepared");
        seg.last_value = sh.net.forward(Input::from(&p.features)).value;
        Ok(seg)
    }
}

/// Result of one training run.
pub struct RunOutcome {
    pub seed: u64,
    pub metrics: Vec<MetricPoint>,
    pub frames: u64,
    pub episodes: u64,
    pub final_win_rate: f64,
    pub net: PolicyNet,
    pub hint_queries: u64,
    pub hint_errors: u64,
    /// Frame count at which the language-model budget ran out.
    pub budget_exhausted_at: Option<u64>,
    pub last_update: UpdateStats,
    pub stopped_early: bool,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    seed: u64,
    frames: u64,
    episodes: u64,
    final_win_rate: f64,
    hint_queries: u64,
    hint_errors: u64,
    budget_exhausted_at: Option<u64>,
    stopped_early: bool,
    last_update: &'a UpdateStats,
}

struct Sinks {
    metrics: BufWriter<File>,
    hints: BufWriter<File>,
    steps: Option<BufWriter<File>>,
}

fn jsonl<T: Serialize>(w: &mut impl Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

impl Sinks {
    fn open(dir: &Path, trace: bool) -> std::io::Result<Sinks> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| File::create(dir.join(name)).map(BufWriter::new);
        Ok(Sinks {
            metrics: open("metrics.jsonl")?,
            hints: open("hints.jsonl")?,
            steps: if trace { Some(open("steps.jsonl")?) } else { None },
        })
    }
}

/// Train one policy with master seed `seed`. With `out_dir`, writes
/// `config.json`, `metrics.jsonl`, `hints.jsonl`, `checkpoint.json`,
/// `summary.json` and, when tracing, `steps.jsonl`.
pub fn train(
    config: &ExperimentConfig,
    seed: u64,
    provider: &dyn HintProvider,
    out_dir: Option<&Path>,
) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let ppo = &config.ppo;
    let layout = config.layout();
    let mut init_rng = rng_for(seed, INIT_STREAM);
    let mut net = PolicyNet::new(layout.dim(), ppo.hidden, &mut init_rng);
    let mut opt = Adam::new(net.param_count(), ppo.learning_rate, ppo.adam_eps);
    let mut learner_rng = rng_for(seed, LEARNER_STREAM);
    let mut workers = (0..ppo.workers)
        .map(|w| Worker::new(config, seed, w))
        .collect::<Result<Vec<_>, _>>()?;

    let mut sinks = match out_dir {
        Some(dir) => {
            let sinks = Sinks::open(dir, config.trace_steps)?;
            let echo = ExperimentConfig {
                seeds: vec![seed],
                ..config.clone()
            };
            std::fs::write(dir.join("config.json"), echo.to_json())?;
            Some(sinks)
        }
        None => None,
    };

    let log_hints = config.hints.provider != ProviderKind::None;
    let mut window = WinWindow::new(config.win_window);
    let mut metrics = Vec::new();
    let mut buffer = RolloutBuffer::new();
    let mut frames = 0u64;
    let mut next_metric = config.metric_interval;
    let mut hint_queries = 0u64;
    let mut hint_errors = 0u64;
    let mut budget_exhausted_at = None;
    let mut last_update = UpdateStats::default();
    let mut stopped_early = false;

    while frames < ppo.frame_budget {
        let segments = {
            let shared = Shared {
                config,
                provider,
                net: &net,
                log_hints,
            };
            exec::map_mut(config.exec, &mut workers, |_, w| w.rollout(&shared, ppo.horizon))
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?
        };

        let mut ends = Vec::new();
        for (w, seg) in segments.into_iter().enumerate() {
            for e in &seg.episodes {
                ends.push((e.step, w, *e));
            }
            hint_errors += seg.hint_errors;
            if let Some(step) = seg.budget_exhausted {
                let at = frames + (step * ppo.workers + w) as u64;
                budget_exhausted_at = Some(budget_exhausted_at.map_or(at, |b: u64| b.min(at)));
            }
            hint_queries += seg.hint_log.len() as u64;
            if let Some(s) = sinks.as_mut() {
                for r in &seg.hint_log {
                    jsonl(&mut s.hints, r)?;
                }
                if let Some(steps) = s.steps.as_mut() {
                    for r in &seg.trace {
                        jsonl(steps, r)?;
                    }
                }
            }
            buffer.push_segment(seg.transitions, seg.last_value, ppo.gamma, ppo.lambda)?;
        }
        ends.sort_by_key(|&(step, w, _)| (step, w));
        for (_, _, e) in ends {
            window.push(e.success, e.ret);
        }

        last_update = ppo_update(&mut net, &mut opt, &buffer, ppo, &mut learner_rng, config.exec)?;
        buffer.clear();
        frames += ppo.frames_per_phase();

        // Early stop is only checked on the metric grid, so a stopped run has
        // the same frames-to-threshold resolution as a full one.
        let at_metric = frames >= next_metric || frames >= ppo.frame_budget;
        let stop = at_metric
            && config
                .early_stop_win_rate
                .is_some_and(|x| window.is_full() && window.win_rate() >= x);
        if at_metric {
            let point = window.point(frames);
            if let Some(s) = sinks.as_mut() {
                jsonl(&mut s.metrics, &point)?;
                s.metrics.flush()?;
            }
            log::info!(
                "seed {seed}: {frames} frames, win rate {:.3}, {} episodes",
                point.win_rate,
                point.episodes
            );
            metrics.push(point);
            next_metric = (frames / config.metric_interval + 1) * config.metric_interval;
        }
        if stop {
            stopped_early = true;
            break;
        }
    }

    let outcome = RunOutcome {
        seed,
        frames,
        episodes: window.episodes(),
        final_win_rate: window.win_rate(),
        metrics,
        net,
        hint_queries,
        hint_errors,
        budget_exhausted_at,
        last_update,
        stopped_early,
    };
    if let (Some(dir), Some(mut s)) = (out_dir, sinks) {
        s.hints.flush()?;
        if let Some(steps) = s.steps.as_mut() {
            steps.flush()?;
        }
        let echo = serde_json::to_value(ExperimentConfig {
            seeds: vec![seed],
            ..config.clone()
        })
        .expect("config serializes");
        Checkpoint::new(&outcome.net, frames, echo).save(&dir.join("checkpoint.json"))?;
        let summary = RunSummary {
            seed,
            frames,
            episodes: outcome.episodes,
            final_win_rate: outcome.final_win_rate,
            hint_queries,
            hint_errors,
            budget_exhausted_at,
            stopped_early,
            last_update: &outcome.last_update,
        };
        std::fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
    }
    Ok(outcome)
}

/// Read a `metrics.jsonl` file.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricPoint>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display()))))
        .collect()
}

/// Read a `steps.jsonl` trace.
pub fn read_trace(path: &Path) -> Result<Vec<StepTrace>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display()))))
        .collect()
}
