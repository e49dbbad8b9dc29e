mod overrides;
mod plot;
mod rollout;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use hintgrid::harness::{
    build_provider, evaluate_hint_quality, run_experiment, run_grid, write_quality, ExperimentConfig,
    HarnessError,
};

#[derive(Parser)]
#[command(name = "hintgrid", version, about = "Gridworld RL with planner and language-model action hints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// JSON experiment configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set hints.k=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a configuration and evaluate the policies.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Win-rate thresholds reported as frames-to-threshold.
        #[arg(long, default_values_t = [0.5, 0.9])]
        threshold: Vec<f64>,
    },
    /// Run a grid of conditions and write a comparison table.
    Grid {
        /// Grid file: {"base": <config or path>, "conditions": [{"name", "set": {key: value}}], "thresholds": [..]}
        grid: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Judge a hint provider against the planner on sampled states.
    EvalHints {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 30)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Play one episode and print it frame by frame.
    Rollout(rollout::RolloutArgs),
    /// Plot win-rate curves from metrics files as SVG.
    Plot {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, short, default_value = "curves.svg")]
        out: PathBuf,
        /// x-axis extent in frames; defaults to the largest frame count seen.
        #[arg(long)]
        budget: Option<u64>,
    },
}

/// Failure with its exit code: 2 for configuration and usage, 1 otherwise.
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure {
            code: if e.is_config() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(e.to_string())
    }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Config file (or defaults), then `--set` overrides, then `--out`.
pub fn resolve_config(base: Option<Value>, overrides: &[String], out: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let mut value = base.unwrap_or_else(|| Value::Object(Default::default()));
    overrides::apply_all(&mut value, overrides).map_err(Failure::usage)?;
    if let Some(out) = out {
        overrides::apply(&mut value, &["output_dir".into()], Value::String(out.display().to_string()))
            .map_err(Failure::usage)?;
    }
    Ok(ExperimentConfig::from_value(value)?)
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let base = args.config.as_deref().map(read_json).transpose()?;
    resolve_config(base, &args.overrides, args.out.as_deref())
}

fn cmd_train(cfg: &ConfigArgs, thresholds: &[f64]) -> Result<(), Failure> {
    let config = load_config(cfg)?;
    std::fs::create_dir_all(&config.output_dir)?;
    std::fs::write(config.output_dir.join("config.json"), config.to_json())?;
    let results = run_experiment(&config, thresholds, true)?;
    for r in &results {
        let cells: Vec<String> = thresholds
            .iter()
            .zip(&r.frames_to)
            .map(|(x, f)| format!("{:.0}%: {f}", x * 100.0))
            .collect();
        println!(
            "seed {:>4}  frames {:>8}  final win {:.3}  eval win {:.3}  {}",
            r.seed,
            r.frames,
            r.final_win_rate,
            r.eval_win_rate,
            cells.join("  ")
        );
    }
    println!("artifacts in {}", config.output_dir.display());
    Ok(())
}

fn cmd_grid(grid: &Path, overrides: &[String], out: Option<&Path>) -> Result<(), Failure> {
    let spec = read_json(grid)?;
    let base = match spec.get("base") {
        Some(Value::String(p)) => {
            let p = grid.parent().unwrap_or(Path::new(".")).join(p);
            read_json(&p)?
        }
        Some(v) => v.clone(),
        None => Value::Object(Default::default()),
    };
    let conditions = spec
        .get("conditions")
        .and_then(Value::as_array)
        .filter(|c| !c.is_empty())
        .ok_or_else(|| Failure::usage(format!("{}: `conditions` must be a non-empty list", grid.display())))?;
    let thresholds: Vec<f64> = match spec.get("thresholds") {
        Some(t) => serde_json::from_value(t.clone()).map_err(|e| Failure::usage(format!("thresholds: {e}")))?,
        None => vec![0.5, 0.9],
    };
    let root = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("runs/grid"));
    let mut configs = Vec::new();
    for (i, cond) in conditions.iter().enumerate() {
        let name = cond
            .get("name")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| format!("condition-{i}"));
        let mut sets: Vec<String> = Vec::new();
        if let Some(Value::Object(m)) = cond.get("set") {
            for (k, v) in m {
                sets.push(format!("{k}={v}"));
            }
        }
        sets.extend(overrides.iter().cloned());
        sets.push(format!("name={}", Value::String(name.clone())));
        let dir = root.join(sanitize(&name));
        let config = resolve_config(Some(base.clone()), &sets, Some(&dir))
            .map_err(|f| Failure { message: format!("condition `{name}`: {}", f.message), ..f })?;
        configs.push(config);
    }
    let report = run_grid(&configs, &thresholds, true)?;
    report.write(&root)?;
    print!("{}", report.to_table());
    println!("results in {}", root.join("results.csv").display());
    if report.rows.iter().any(|r| r.error.is_some()) {
        return Err(Failure::runtime("one or more grid conditions failed"));
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn cmd_eval_hints(cfg: &ConfigArgs, samples: usize, seed: u64) -> Result<(), Failure> {
    let config = load_config(cfg)?;
    let provider = build_provider(&config, seed)?;
    let (records, summary) = evaluate_hint_quality(&config, provider.as_ref(), samples, seed, config.exec)?;
    write_quality(&config.output_dir, &records, &summary)?;
    println!(
        "provider {}: {}/{} optimal matches ({:.1}%), any-optimal {:.1}%, {} errors",
        summary.provider,
        summary.matches,
        summary.samples,
        summary.optimal_match_rate * 100.0,
        summary.any_optimal_rate * 100.0,
        summary.errors
    );
    println!("records in {}", config.output_dir.join("quality.jsonl").display());
    Ok(())
}

fn cmd_plot(files: &[PathBuf], out: &Path, budget: Option<u64>) -> Result<(), Failure> {
    let mut series = Vec::new();
    let mut bad_lines = 0;
    for f in files {
        let (points, bad) = plot::read_series(f).map_err(|e| Failure::usage(format!("{}: {e}", f.display())))?;
        if points.is_empty() {
            return Err(Failure::usage(format!("{}: no metric points", f.display())));
        }
        bad_lines += bad;
        series.push(plot::Series {
            name: plot::series_name(f),
            points,
        });
    }
    let budget = budget.unwrap_or_else(|| {
        series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.frames))
            .max()
            .unwrap_or(1)
    });
    std::fs::write(out, plot::render_svg(&series, budget))?;
    println!(
        "wrote {} ({} series, {} malformed lines skipped)",
        out.display(),
        series.len(),
        bad_lines
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { cfg, threshold } => cmd_train(cfg, threshold),
        Command::Grid { grid, overrides, out } => cmd_grid(grid, overrides, out.as_deref()),
        Command::EvalHints { cfg, samples, seed } => cmd_eval_hints(cfg, *samples, *seed),
        Command::Rollout(args) => rollout::run(args),
        Command::Plot { metrics, out, budget } => cmd_plot(metrics, out, *budget),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
