//! `searchctl`: train, evaluate and analyse self-play runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use searchctl_core::eval::{
    emit_curves, evaluate_checkpoint, evaluate_run, tournament_runs, trajectory_stats,
    unique_states_by_depth_file, value_loss_report, write_csv, write_csv_to, EvalSettings, ValueLossMode, DEFAULT_WINDOW,
    EVAL_FILE,
};
use searchctl_core::learner::{run_training, RunConfig, RunManifest, MANIFEST_FILE, TRAJECTORY_LOG};
use searchctl_core::mcts::SearchConfig;

#[derive(Parser)]
#[command(name = "searchctl", version, about = "Self-play training with archive-based start states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a training job and write checkpoints, metrics and a manifest.
    Train(TrainArgs),
    /// Play checkpoints against the MCTS-Solver reference opponent.
    Evaluate(EvaluateArgs),
    /// Play every checkpoint of run A against every checkpoint of run B.
    Tournament(TournamentArgs),
    /// Trajectory throughput, unique states by depth and value loss of a run.
    Stats(StatsArgs),
    /// Aggregate evaluated runs into learning-curve and AUC CSVs.
    EmitCurves(EmitArgs),
    /// Resolve and check a configuration, printing the result.
    ValidateConfig(ConfigArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML config or run manifest; presets are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algorithm variant (alphazero, geve, gevc, gesr, gesc, akti, akb, aktib, gesckb, gesckpcr, gesckfp, gesc3k).
    #[arg(long)]
    variant: Option<String>,
    /// Game (connect4, tictactoe).
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of training actors.
    #[arg(long)]
    actors: Option<usize>,
    #[arg(long = "archive-actors")]
    archive_actors: Option<usize>,
    /// Single-threaded, bit-reproducible scheduling.
    #[arg(long)]
    deterministic: bool,
    /// Extra `key.path=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = Vec::new();
        if let Some(g) = &self.game {
            o.push(format!("game={g}"));
        }
        if let Some(v) = &self.variant {
            o.push(format!("variant={v}"));
        }
        if let Some(s) = self.seed {
            o.push(format!("seed={s}"));
        }
        if let Some(a) = self.actors {
            o.push(format!("training_actors={a}"));
        }
        if let Some(a) = self.archive_actors {
            o.push(format!("archive_actors={a}"));
        }
        if self.deterministic {
            o.push("deterministic=true".into());
        }
        o.extend(self.set.iter().cloned());
        o
    }

    fn resolve(&self) -> Result<RunConfig> {
        let overrides = self.overrides();
        Ok(match &self.config {
            Some(p) => RunConfig::load(p, &overrides)?,
            None => RunConfig::from_toml_str("", &overrides)?,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory; defaults to `<SEARCHCTL_OUT>/<variant>-<game>-seed<seed>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root for default output directories.
    #[arg(long, env = "SEARCHCTL_OUT", default_value = "runs")]
    out_root: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// A checkpoint file, or a run directory to evaluate every checkpoint of.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Solver levels, as multiples of the agent's search iterations.
    #[arg(long, value_delimiter = ',', default_value = "1,10")]
    levels: Vec<u32>,
    /// Matches per level, half in each seat.
    #[arg(long, default_value_t = 100)]
    matches: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Only evaluate run checkpoints whose step is a multiple of this (plus the last).
    #[arg(long, default_value_t = 0)]
    stride: u64,
    /// Agent search iterations when the checkpoint has no run manifest.
    #[arg(long, default_value_t = 100)]
    iterations: u32,
    /// CSV output; defaults to `eval.csv` in a run directory, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TournamentArgs {
    run_a: PathBuf,
    run_b: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    run: PathBuf,
    /// Also measure value loss at the final checkpoint (visited or search).
    #[arg(long = "value-loss")]
    value_loss: Option<String>,
    #[arg(long, default_value_t = 100)]
    games: usize,
    /// Cap on search states scored in search mode.
    #[arg(long, default_value_t = 500)]
    max_search_states: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for `depth.csv` and `value_loss.csv`; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmitArgs {
    /// Run directories that already contain `eval.csv`.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("searchctl: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Tournament(a) => tournament(a),
        Command::Stats(a) => stats(a),
        Command::EmitCurves(a) => {
            let s = emit_curves(&a.runs, &a.out, a.window)?;
            for f in &s.curve_files {
                println!("wrote {}", f.display());
            }
            println!("wrote {}", s.auc_file.display());
            for r in &s.auc {
                println!("{} level {} auc {:.3}", r.run, r.level, r.auc);
            }
            Ok(())
        }
        Command::ValidateConfig(a) => {
            let cfg = a.resolve()?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    let out = a
        .out
        .unwrap_or_else(|| a.out_root.join(format!("{}-{}-seed{}", cfg.variant.as_str(), cfg.game, cfg.seed)));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let manifest = run_training(&cfg, &out)?;
    let s = &manifest.summary;
    println!(
        "{}: {} steps, {} trajectories ({:.2}/step), {:.1}s",
        out.display(),
        s.steps_completed,
        s.trajectories_consumed,
        s.trajectories_consumed as f64 / s.steps_completed.max(1) as f64,
        s.wall_seconds
    );
    Ok(())
}

/// Looks for `<run>/manifest.toml` above a checkpoint in `<run>/checkpoints/`.
fn manifest_for(checkpoint: &Path) -> Option<RunManifest> {
    let run = checkpoint.parent()?.parent()?;
    RunManifest::load(&run.join(MANIFEST_FILE)).ok()
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let (rows, default_out) = if a.checkpoint.is_dir() {
        let rows = evaluate_run(&a.checkpoint, &a.levels, a.matches, a.stride, a.seed)?;
        (rows, Some(a.checkpoint.join(EVAL_FILE)))
    } else {
        let settings = match manifest_for(&a.checkpoint) {
            Some(m) => EvalSettings::from_run(&m.config, a.seed),
            None => EvalSettings {
                iterations: a.iterations,
                c_puct: SearchConfig::default().c_puct,
                base_iterations: a.iterations,
                seed: a.seed,
            },
        };
        (evaluate_checkpoint(&a.checkpoint, &a.levels, a.matches, &settings)?, None)
    };
    match a.out.or(default_out) {
        Some(path) => {
            write_csv(&path, &rows)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print_csv(&rows)?,
    }
    Ok(())
}

fn print_csv<T: Serialize>(rows: &[T]) -> Result<()> {
    write_csv_to(std::io::stdout().lock(), rows)?;
    Ok(())
}

fn tournament(a: TournamentArgs) -> Result<()> {
    let report = tournament_runs(&a.run_a, &a.run_b, a.seed)?;
    match &a.out {
        Some(p) => write_csv(p, &report.rows)?,
        None => print_csv(&report.rows)?,
    }
    eprintln!("{} games, side A mean score {:.4}", report.games, report.win_rate);
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let manifest = RunManifest::load(&a.run.join(MANIFEST_FILE))?;
    let out = a.out.clone().unwrap_or_else(|| a.run.clone());
    std::fs::create_dir_all(&out)?;
    let t = trajectory_stats(&a.run)?;
    println!(
        "steps {} trajectories {} per-step {:.3} mean-length {:.2}",
        t.steps, t.trajectories, t.trajectories_per_step, t.mean_trajectory_length
    );
    let log = a.run.join(TRAJECTORY_LOG);
    if log.exists() {
        let h = unique_states_by_depth_file(&log)?;
        let k = manifest.config.selfplay.k as usize;
        println!("unique states {} (depth > k={k}: {})", h.total(), h.beyond(k));
        write_csv(&out.join("depth.csv"), &h.rows())?;
    } else {
        eprintln!("no {TRAJECTORY_LOG} in {}; skipping depth histogram", a.run.display());
    }
    if let Some(mode) = &a.value_loss {
        let mode: ValueLossMode = mode.parse()?;
        let Some(last) = manifest.final_checkpoint() else {
            bail!("{} has no checkpoints", a.run.display());
        };
        let report = value_loss_report(
            &a.run.join(&last.path),
            &manifest.config,
            mode,
            a.games,
            a.max_search_states,
            a.seed,
        )?;
        println!("value loss ({mode}) {:.5} over {} states", report.mse, report.n_states);
        write_csv(&out.join("value_loss.csv"), &[report])?;
    }
    Ok(())
}
