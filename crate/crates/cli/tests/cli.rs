use std::path::Path;
use std::process::{Command, Output};

use hintgrid::hints::ReplayProvider;

fn hintgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hintgrid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: &[&str] = &[
    "--set", "ppo.frame_budget=1024",
    "--set", "ppo.workers=2",
    "--set", "ppo.horizon=64",
    "--set", "ppo.minibatch_size=64",
    "--set", "ppo.hidden=[8,8]",
    "--set", "metric_interval=256",
    "--set", "eval_episodes=5",
    "--set", "seeds=[1]",
];

fn tiny(extra: &[&str]) -> Vec<String> {
    extra.iter().chain(TINY).map(|s| s.to_string()).collect()
}

fn run(args: Vec<String>) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    hintgrid(&refs)
}

#[test]
fn oracle_rollout_succeeds_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("out.jsonl");
    let o = hintgrid(&[
        "rollout", "--task", "gotoobj", "--policy", "oracle", "--seed", "3",
        "--set", "hints.provider=oracle", "--record", rec.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.starts_with("SUCCESS in "), "{last}");
    let replay = ReplayProvider::load(&rec).unwrap();
    assert!(!replay.is_empty());
}

#[test]
fn config_errors_exit_two() {
    let o = hintgrid(&["train", "--config", "/definitely/missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/missing.json"));

    let o = hintgrid(&["train", "--set", "ppo.gamma=1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ppo.gamma"));

    let o = hintgrid(&["train", "--set", "hints.bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hints.bogus"));
}

#[test]
fn train_then_rollout_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(tiny(&["train", "--out", out.to_str().unwrap(), "--set", "hints.provider=oracle"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let seed_dir = out.join("seed-1");
    for f in ["config.json", "metrics.jsonl", "hints.jsonl", "checkpoint.json", "summary.json"] {
        assert!(seed_dir.join(f).exists(), "{f}");
    }

    // The checkpoint replays with its own config echo.
    let ck = seed_dir.join("checkpoint.json");
    let o = hintgrid(&["rollout", "--checkpoint", ck.to_str().unwrap(), "--seed", "5", "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));

    // Turning on mission features changes the input width.
    let o = hintgrid(&["rollout", "--checkpoint", ck.to_str().unwrap(), "--set", "text=true"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    // The config echo reproduces the run.
    let again = dir.path().join("again");
    let o = hintgrid(&[
        "train", "--config", seed_dir.join("config.json").to_str().unwrap(),
        "--out", again.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read_to_string(seed_dir.join("metrics.jsonl")).unwrap();
    let b = std::fs::read_to_string(again.join("seed-1/metrics.jsonl")).unwrap();
    assert_eq!(a, b);

    let svg = dir.path().join("c.svg");
    let m1 = seed_dir.join("metrics.jsonl");
    let m2 = again.join("seed-1/metrics.jsonl");
    let o = hintgrid(&["plot", m1.to_str().unwrap(), m2.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 2);
}

#[test]
fn plot_rejects_empty_and_counts_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let svg = dir.path().join("x.svg");
    let o = hintgrid(&["plot", empty.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let mixed = dir.path().join("mixed.jsonl");
    std::fs::write(
        &mixed,
        "{\"frames\":10,\"win_rate\":0.5,\"mean_return\":0.1,\"episodes\":3}\nnot json\n",
    )
    .unwrap();
    let o = hintgrid(&["plot", mixed.to_str().unwrap(), "--out", svg.to_str().unwrap(), "--budget", "100"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("1 malformed lines skipped"));
}

#[test]
fn eval_hints_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = hintgrid(&[
        "eval-hints", "--set", "hints.provider=oracle", "--samples", "30",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("30/30 optimal matches"));
    let lines = std::fs::read_to_string(dir.path().join("quality.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 30);
}

#[test]
fn grid_emits_one_row_per_condition() {
    let dir = tempfile::tempdir().unwrap();
    let base: serde_json::Value = serde_json::json!({
        "ppo": {"frame_budget": 1024, "workers": 2, "horizon": 64, "minibatch_size": 64, "hidden": [8, 8]},
        "metric_interval": 256, "eval_episodes": 5, "seeds": [1, 2]
    });
    let grid = serde_json::json!({
        "base": base,
        "thresholds": [0.3],
        "conditions": [
            {"name": "Baseline", "set": {"hints.provider": "none"}},
            {"name": "Oracle f=5", "set": {"hints.provider": "oracle", "hints.k": 5}},
            {"name": "Oracle f=10", "set": {"hints.provider": "oracle", "hints.k": 10}}
        ]
    });
    let path = dir.path().join("grid.json");
    std::fs::write(&path, grid.to_string()).unwrap();
    let out = dir.path().join("g");
    let o = hintgrid(&["grid", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        assert!(!r.contains(",,"), "empty column in {r}");
    }
    assert!(Path::new(&out.join("Oracle_f_5/seed-2/metrics.jsonl")).exists());
}
