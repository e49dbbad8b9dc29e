use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ProviderKind};
use super::eval::{evaluate_policy, Policy};
use super::metrics::{format_speedup, frames_to_threshold, median_threshold, speedup, Threshold};
use super::providers::build_provider;
use super::train::train;
use super::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub frames: u64,
    /// Trailing training win rate when the run ended.
    pub final_win_rate: f64,
    /// Greedy win rate on held-out instances.
    pub eval_win_rate: f64,
    /// One entry per requested threshold.
    pub frames_to: Vec<Threshold>,
}

/// Train every seed of `config`, writing artifacts under
/// `output_dir/seed-<seed>` when `write` is set.
pub fn run_experiment(
    config: &ExperimentConfig,
    thresholds: &[f64],
    write: bool,
) -> Result<Vec<SeedResult>, HarnessError> {
    config.validate()?;
    let mut results = Vec::new();
    for &seed in &config.seeds {
        let provider = build_provider(config, seed)?;
        let dir = config.output_dir.join(format!("seed-{seed}"));
        let outcome = train(config, seed, provider.as_ref(), write.then_some(dir.as_path()))?;
        let eval = evaluate_policy(
            config,
            Policy::Greedy(&outcome.net),
            provider.as_ref(),
            config.eval_episodes,
            config.exec,
        )?;
        let frames_to = thresholds
            .iter()
            .map(|&x| frames_to_threshold(&outcome.metrics, x))
            .collect::<Result<Vec<_>, _>>()?;
        results.push(SeedResult {
            seed,
            frames: outcome.frames,
            final_win_rate: outcome.final_win_rate,
            eval_win_rate: eval.win_rate,
            frames_to,
        });
    }
    if write {
        std::fs::create_dir_all(&config.output_dir)?;
        std::fs::write(
            config.output_dir.join("results.json"),
            serde_json::to_string_pretty(&results).expect("results serialize"),
        )?;
    }
    Ok(results)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub condition: String,
    pub task: String,
    pub provider: ProviderKind,
    pub k: u32,
    pub seeds: Vec<SeedResult>,
    pub error: Option<String>,
}

impl GridRow {
    fn is_baseline(&self) -> bool {
        matches!(self.provider, ProviderKind::None | ProviderKind::Neutral)
    }

    fn stats(values: impl Iterator<Item = f64>) -> Option<(f64, f64, f64)> {
        let v: Vec<f64> = values.collect();
        if v.is_empty() {
            return None;
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((mean, min, max))
    }

    pub fn final_win(&self) -> Option<(f64, f64, f64)> {
        Self::stats(self.seeds.iter().map(|s| s.final_win_rate))
    }

    pub fn eval_win(&self) -> Option<(f64, f64, f64)> {
        Self::stats(self.seeds.iter().map(|s| s.eval_win_rate))
    }

    /// Median frames to threshold number `i` over seeds.
    pub fn median_frames(&self, i: usize) -> Option<Threshold> {
        let v: Vec<Threshold> = self.seeds.iter().map(|s| s.frames_to[i]).collect();
        median_threshold(&v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub thresholds: Vec<f64>,
    pub rows: Vec<GridRow>,
}

/// Run each configuration in turn. A failing configuration is reported in
/// its row and the grid carries on.
pub fn run_grid(configs: &[ExperimentConfig], thresholds: &[f64], write: bool) -> Result<GridReport, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::Usage("grid needs at least one configuration".into()));
    }
    for &x in thresholds {
        if !(x > 0.0 && x < 1.0) {
            return Err(HarnessError::Usage(format!("threshold {x} outside (0, 1)")));
        }
    }
    let rows = configs
        .iter()
        .map(|c| {
            let (seeds, error) = match run_experiment(c, thresholds, write) {
                Ok(s) => (s, None),
                Err(e) => {
                    log::error!("grid cell {} failed: {e}", c.name);
                    (Vec::new(), Some(e.to_string()))
                }
            };
            GridRow {
                condition: c.name.clone(),
                task: c.env.task.to_string(),
                provider: c.hints.provider,
                k: c.hints.k,
                seeds,
                error,
            }
        })
        .collect();
    Ok(GridReport {
        thresholds: thresholds.to_vec(),
        rows,
    })
}

fn pct(x: f64) -> String {
    format!("{}", (x * 100.0).round() as i64)
}

impl GridReport {
    fn baseline_for(&self, row: &GridRow) -> Option<&GridRow> {
        self.rows
            .iter()
            .find(|r| r.is_baseline() && r.task == row.task && r.error.is_none())
    }

    /// `120K (9×)`, `Never`, or `-` when the row failed.
    pub fn threshold_cell(&self, row: &GridRow, i: usize) -> String {
        let Some(m) = row.median_frames(i) else {
            return "-".into();
        };
        let mut cell = m.to_string();
        if !row.is_baseline() {
            if let Some(ratio) = self
                .baseline_for(row)
                .and_then(|b| b.median_frames(i))
                .and_then(|b| speedup(b, m))
            {
                let _ = write!(cell, " {}", format_speedup(ratio));
            }
        }
        cell
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "condition,task,provider,k,seeds,final_win_mean,final_win_min,final_win_max,eval_win_mean",
        );
        for &x in &self.thresholds {
            let _ = write!(out, ",frames_to_{p},speedup_{p}", p = pct(x));
        }
        out.push_str(",error\n");
        for row in &self.rows {
            let fw = row.final_win();
            let ew = row.eval_win();
            let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.condition,
                row.task,
                row.provider.name(),
                row.k,
                row.seeds.len(),
                f(fw.map(|s| s.0)),
                f(fw.map(|s| s.1)),
                f(fw.map(|s| s.2)),
                f(ew.map(|s| s.0)),
            );
            for i in 0..self.thresholds.len() {
                let m = row.median_frames(i);
                let frames = match m {
                    Some(Threshold::Frames(n)) => n.to_string(),
                    Some(Threshold::NotReached) => "Never".into(),
                    None => String::new(),
                };
                let ratio = m
                    .zip(self.baseline_for(row).and_then(|b| b.median_frames(i)))
                    .and_then(|(c, b)| speedup(b, c))
                    .map(|r| format!("{r:.3}"))
                    .unwrap_or_default();
                let _ = write!(out, ",{frames},{ratio}");
            }
            let err = row.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(out, ",{err}");
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut header = vec![
            "Condition".to_string(),
            "Task".to_string(),
            "Final win".to_string(),
            "Eval win".to_string(),
        ];
        for &x in &self.thresholds {
            header.push(format!("{}%", pct(x)));
        }
        let mut rows = vec![header];
        for row in &self.rows {
            let win = |s: Option<(f64, f64, f64)>| match s {
                Some((mean, min, max)) => format!("{:.0}% [{:.0}, {:.0}]", mean * 100.0, min * 100.0, max * 100.0),
                None => "-".into(),
            };
            let mut cells = vec![
                row.condition.clone(),
                row.task.clone(),
                if row.error.is_some() { "failed".into() } else { win(row.final_win()) },
                win(row.eval_win()),
            ];
            for i in 0..self.thresholds.len() {
                cells.push(self.threshold_cell(row, i));
            }
            rows.push(cells);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (n, r) in rows.iter().enumerate() {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}", w = *w))
                .collect();
            let _ = writeln!(out, "| {} |", line.join(" | "));
            if n == 0 {
                let sep: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                let _ = writeln!(out, "|-{}-|", sep.join("-|-"));
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.to_csv())?;
        std::fs::write(dir.join("results.txt"), self.to_table())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, provider: ProviderKind, frames: &[Threshold]) -> GridRow {
        GridRow {
            condition: name.into(),
            task: "gotoobj".into(),
            provider,
            k: 5,
            seeds: frames
                .iter()
                .enumerate()
                .map(|(i, &f)| SeedResult {
                    seed: i as u64,
                    frames: 1,
                    final_win_rate: 0.5,
                    eval_win_rate: 0.5,
                    frames_to: vec![f],
                })
                .collect(),
            error: None,
        }
    }

    #[test]
    fn speedup_cells() {
        let report = GridReport {
            thresholds: vec![0.5],
            rows: vec![
                row("Baseline", ProviderKind::None, &[Threshold::Frames(1_080_000)]),
                row("Oracle f=5", ProviderKind::Oracle, &[Threshold::Frames(120_000)]),
                row("Noisy", ProviderKind::Noisy, &[Threshold::NotReached]),
            ],
        };
        assert_eq!(report.threshold_cell(&report.rows[1], 0), "120K (9×)");
        assert_eq!(report.threshold_cell(&report.rows[2], 0), "Never");
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(2).unwrap().contains("120000,9.000"));
        assert!(report.to_table().contains("1.08M"));
    }
}
