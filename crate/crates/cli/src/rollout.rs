use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::Rng;
use serde::Serialize;
use serde_json::Value;

use hintgrid::encoders::{encode, EncodingKind};
use hintgrid::env::{observe, reset, Action};
use hintgrid::harness::{build_provider, load_policy};
use hintgrid::hints::{augment, ActionHistory, HintLogRecord, HintQuery};
use hintgrid::planner;
use hintgrid::rl::{act, featurize, Checkpoint, Input};
use hintgrid::seeds::rng_for;

use crate::{resolve_config, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyChoice {
    Oracle,
    Random,
    Checkpoint,
}

#[derive(Args)]
pub struct RolloutArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for `--set env.task=<task>`.
    #[arg(long)]
    task: Option<String>,
    /// Shorthand for `--set env.room_size=<n>`.
    #[arg(long)]
    room: Option<u8>,
    #[arg(long, value_enum)]
    policy: Option<PolicyChoice>,
    /// Policy checkpoint; implies `--policy checkpoint`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Environment instance seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write one JSON line per step (hint log fields plus the action taken).
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, default_value = "ascii_grid")]
    encoding: EncodingKind,
    /// Only print the final line.
    #[arg(long)]
    quiet: bool,
}

#[derive(Serialize)]
struct StepRecord {
    #[serde(flatten)]
    hint: HintLogRecord,
    hint_available: bool,
    action: u8,
    reward: f64,
    done: bool,
}

pub fn run(args: &RolloutArgs) -> Result<(), Failure> {
    let policy = match (args.policy, &args.checkpoint) {
        (Some(PolicyChoice::Checkpoint), None) => {
            return Err(Failure::usage("--policy checkpoint needs --checkpoint <path>"))
        }
        (Some(p), None) => p,
        (None | Some(PolicyChoice::Checkpoint), Some(_)) => PolicyChoice::Checkpoint,
        (Some(_), Some(_)) => return Err(Failure::usage("--checkpoint conflicts with --policy")),
        (None, None) => PolicyChoice::Oracle,
    };

    let base = match (&args.config, &args.checkpoint) {
        (Some(path), _) => Some(
            serde_json::from_str::<Value>(
                &std::fs::read_to_string(path)
                    .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?,
            )
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        ),
        (None, Some(ck)) => Some(
            Checkpoint::load(ck)
                .map_err(|e| Failure::usage(format!("{}: {e}", ck.display())))?
                .config,
        ),
        (None, None) => None,
    };
    let mut sets = args.overrides.clone();
    if let Some(t) = &args.task {
        sets.push(format!("env.task={t}"));
    }
    if let Some(r) = args.room {
        sets.push(format!("env.room_size={r}"));
    }
    let config = resolve_config(base, &sets, None)?;
    let net = match &args.checkpoint {
        Some(path) => Some(load_policy(path, &config)?),
        None => None,
    };
    let provider = build_provider(&config, args.seed)?;

    let (mut state, mission) = reset(&config.env, args.seed).map_err(|e| Failure::runtime(e.to_string()))?;
    let mut rng = rng_for(args.seed, 0x726f_6c6c);
    let mut history = ActionHistory::new(config.hints.history);
    let mut record = match &args.record {
        Some(p) => Some(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => None,
    };
    if !args.quiet {
        println!("mission: {}", mission.text);
        println!("{}\n", encode(args.encoding, &state, &mission).text);
    }
    let mut total = 0.0;
    let mut t = 0u32;
    loop {
        t += 1;
        let query = HintQuery::new(&state, &mission, &history, config.hints.encoding, 0, t);
        let aug = augment(observe(&state, &mission), &query, config.hints.k, provider.as_ref())
            .map_err(|e| Failure::usage(e.to_string()))?;
        let action = match policy {
            PolicyChoice::Oracle => {
                planner::optimal_action(&state, &mission).map_err(|e| Failure::runtime(e.to_string()))?
            }
            PolicyChoice::Random => Action::from_code(rng.gen_range(0..Action::COUNT as u8)).expect("in range"),
            PolicyChoice::Checkpoint => {
                let f = featurize(&aug.observation, config.layout());
                act(net.as_ref().expect("checkpoint loaded"), Input::from(&f), &mut rng, true).action
            }
        };
        let obs = &aug.observation;
        let result = state
            .step(&mission, action)
            .map_err(|e| Failure::runtime(e.to_string()))?;
        history
            .push(t, action)
            .map_err(|e| Failure::runtime(e.to_string()))?;
        total += result.reward;
        if let Some(w) = record.as_mut() {
            let hint = aug.log.clone().unwrap_or(HintLogRecord {
                episode: 0,
                t,
                encoding_kind: config.hints.encoding,
                hint_action: obs.hint.action_code(),
                subgoal: obs.hint.subgoal,
                provider: provider.name().to_string(),
                latency_ms: 0.0,
                reasoning: None,
            });
            let line = StepRecord {
                hint,
                hint_available: obs.hint_available,
                action: action.code(),
                reward: result.reward,
                done: result.done,
            };
            serde_json::to_writer(&mut *w, &line).map_err(|e| Failure::runtime(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        if !args.quiet {
            let hint = if obs.hint_available {
                format!("{} / {}", obs.hint.action.map(Action::name).unwrap_or("none"), obs.hint.subgoal)
            } else {
                "-".to_string()
            };
            println!("step {t}: {}  [hint: {hint}]", action.name());
            println!("{}\n", encode(args.encoding, &state, &mission).text);
        }
        if result.done {
            if let Some(w) = record.as_mut() {
                w.flush()?;
            }
            if result.success {
                println!("SUCCESS in {t} steps (return {total:.4})");
            } else {
                println!("FAILURE after {t} steps");
            }
            return Ok(());
        }
    }
}
