use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::learner::{RunManifest, MANIFEST_FILE};

use super::{read_csv, write_csv, EvalError, LevelResult};

/// Per-run evaluation results written by `evaluate` inside a run directory.
pub const EVAL_FILE: &str = "eval.csv";

/// Trailing window, in learning steps, over which match results are averaged.
pub const DEFAULT_WINDOW: u64 = 50;

/// Windowed win rate at every learning step `1..=total_steps`, per level.
///
/// The value at step t averages every match played by a checkpoint whose step
/// lies in (t - window, t]. A step with no matches in its window repeats the
/// previous value; before the first match the rate is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub window: u64,
    pub total_steps: u64,
    levels: BTreeMap<u32, Vec<f64>>,
}

impl LearningCurve {
    pub fn from_results(results: &[LevelResult], total_steps: u64, window: u64) -> Self {
        let mut by_level: BTreeMap<u32, Vec<&LevelResult>> = BTreeMap::new();
        for r in results {
            by_level.entry(r.level).or_default().push(r);
        }
        let levels = by_level
            .into_iter()
            .map(|(level, rows)| {
                let mut prev = 0.0;
                let values = (1..=total_steps)
                    .map(|t| {
                        let lo = t.saturating_sub(window);
                        let (score, n) = rows
                            .iter()
                            .filter(|r| r.step <= t && (r.step > lo || (t < window && r.step == 0)))
                            .fold((0.0, 0usize), |(s, n), r| (s + r.score_sum(), n + r.matches));
                        if n > 0 {
                            prev = score / n as f64;
                        }
                        prev
                    })
                    .collect();
                (level, values)
            })
            .collect();
        LearningCurve {
            window,
            total_steps,
            levels,
        }
    }

    /// Wraps precomputed per-step values for one level.
    pub fn from_values(level: u32, values: Vec<f64>) -> Self {
        LearningCurve {
            window: DEFAULT_WINDOW,
            total_steps: values.len() as u64,
            levels: BTreeMap::from([(level, values)]),
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> + '_ {
        self.levels.keys().copied()
    }

    /// Values for steps `1..=total_steps`.
    pub fn values(&self, level: u32) -> Option<&[f64]> {
        self.levels.get(&level).map(|v| v.as_slice())
    }
}

/// Sum of the per-step values.
pub fn auc(values: &[f64]) -> f64 {
    values.iter().sum()
}

pub fn compute_auc(curve: &LearningCurve) -> BTreeMap<u32, f64> {
    curve.levels.iter().map(|(&l, v)| (l, auc(v))).collect()
}

/// Mean with a normal-approximation 95% interval from the sample standard
/// deviation. A single value gives a zero-width interval.
pub fn mean_ci95(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * var.sqrt() / n.sqrt();
    (mean, mean - half, mean + half)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub step: u64,
    pub level: u32,
    pub mean_win_rate: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

/// Mean curve across seeds with its interval at every step. Steps past a
/// shorter run's end use only the runs that reached them.
pub fn aggregate_curves(curves: &[LearningCurve]) -> Vec<CurveRow> {
    let mut levels: Vec<u32> = curves.iter().flat_map(|c| c.levels()).collect();
    levels.sort_unstable();
    levels.dedup();
    let mut rows = Vec::new();
    for level in levels {
        let series: Vec<&[f64]> = curves.iter().filter_map(|c| c.values(level)).collect();
        let len = series.iter().map(|s| s.len()).max().unwrap_or(0);
        for i in 0..len {
            let at: Vec<f64> = series.iter().filter_map(|s| s.get(i).copied()).collect();
            let (mean, lo, hi) = mean_ci95(&at);
            rows.push(CurveRow {
                step: i as u64 + 1,
                level,
                mean_win_rate: mean,
                ci95_low: lo,
                ci95_high: hi,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub run: String,
    pub algorithm: String,
    pub seed: u64,
    pub level: u32,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmitSummary {
    /// One curve file per algorithm.
    pub curve_files: Vec<PathBuf>,
    pub auc_file: PathBuf,
    pub auc: Vec<AucRow>,
}

/// Reads `manifest.toml` and `eval.csv` from every run directory, then
/// writes `curves-<algorithm>.csv` (seeds aggregated) and `auc.csv` into
/// `out_dir`.
pub fn emit_curves(run_dirs: &[PathBuf], out_dir: &Path, window: u64) -> Result<EmitSummary, EvalError> {
    if run_dirs.is_empty() {
        return Err(EvalError::Invalid("no run directories given".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| super::io_err(out_dir, e))?;
    let mut by_algo: BTreeMap<String, Vec<LearningCurve>> = BTreeMap::new();
    let mut auc_rows = Vec::new();
    for dir in run_dirs {
        let manifest = RunManifest::load(&dir.join(MANIFEST_FILE))?;
        let eval_path = dir.join(EVAL_FILE);
        if !eval_path.exists() {
            return Err(EvalError::Invalid(format!(
                "{} is missing; run `evaluate` on this run first",
                eval_path.display()
            )));
        }
        let results: Vec<LevelResult> = read_csv(&eval_path)?;
        let curve = LearningCurve::from_results(&results, manifest.summary.steps_completed, window);
        let algorithm = manifest.config.variant.as_str().to_string();
        for (level, a) in compute_auc(&curve) {
            auc_rows.push(AucRow {
                run: dir.display().to_string(),
                algorithm: algorithm.clone(),
                seed: manifest.config.seed,
                level,
                auc: a,
            });
        }
        by_algo.entry(algorithm).or_default().push(curve);
    }
    let mut curve_files = Vec::new();
    for (algo, curves) in &by_algo {
        let path = out_dir.join(format!("curves-{algo}.csv"));
        write_csv(&path, &aggregate_curves(curves))?;
        curve_files.push(path);
    }
    let auc_file = out_dir.join("auc.csv");
    write_csv(&auc_file, &auc_rows)?;
    Ok(EmitSummary {
        curve_files,
        auc_file,
        auc: auc_rows,
    })
}
