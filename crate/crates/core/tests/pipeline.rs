//! Train a tiny run, then push it through every measurement.

use std::path::PathBuf;

use searchctl_core::eval::{
    emit_curves, evaluate_run, read_csv, trajectory_stats, tournament_runs, unique_states_by_depth_file, write_csv,
    AucRow, LevelResult, EVAL_FILE,
};
use searchctl_core::learner::{run_training, RunConfig, RunManifest, RunStatus, MANIFEST_FILE, TRAJECTORY_LOG};

fn tiny(variant: &str, seed: u64) -> RunConfig {
    let overrides: Vec<String> = vec![
        "game=tictactoe".into(),
        format!("variant={variant}"),
        format!("seed={seed}"),
        "total_steps=6".into(),
        "checkpoint_interval=2".into(),
        "deterministic=true".into(),
        "replay.b_step=32".into(),
        "replay.batch_count=1".into(),
        "replay.batch_size=16".into(),
        "model.hidden_width=8".into(),
    ];
    RunConfig::from_toml_str("", &overrides).unwrap()
}

#[test]
fn train_evaluate_and_summarise() {
    let tmp = tempfile::tempdir().unwrap();
    let mut dirs: Vec<PathBuf> = Vec::new();
    for (variant, seed) in [("alphazero", 1), ("gesc", 1), ("gesc", 2)] {
        let dir = tmp.path().join(format!("{variant}-{seed}"));
        let m = run_training(&tiny(variant, seed), &dir).unwrap();
        assert_eq!(m.status, RunStatus::Completed);
        assert_eq!(m.summary.steps_completed, 6);
        assert_eq!(m.checkpoints.last().unwrap().step, 6);

        let reloaded = RunManifest::load(&dir.join(MANIFEST_FILE)).unwrap();
        assert_eq!(reloaded.config, m.config);

        let rows = evaluate_run(&dir, &[1, 2], 4, 0, 7).unwrap();
        assert_eq!(rows.len(), 2 * m.checkpoints.len());
        assert!(rows.iter().all(|r| r.matches == 4 && r.wins + r.draws + r.losses == 4));
        write_csv(&dir.join(EVAL_FILE), &rows).unwrap();
        let back: Vec<LevelResult> = read_csv(&dir.join(EVAL_FILE)).unwrap();
        assert_eq!(back, rows);

        let t = trajectory_stats(&dir).unwrap();
        assert_eq!(t.steps, 6);
        assert_eq!(t.trajectories, m.summary.trajectories_consumed);
        let h = unique_states_by_depth_file(&dir.join(TRAJECTORY_LOG)).unwrap();
        assert!(h.total() > 1);
        dirs.push(dir);
    }

    let out = tmp.path().join("curves");
    let summary = emit_curves(&dirs, &out, 4).unwrap();
    assert_eq!(summary.curve_files.len(), 2);
    let auc: Vec<AucRow> = read_csv(&summary.auc_file).unwrap();
    assert_eq!(auc.len(), 3 * 2);
    assert!(auc.iter().all(|r| (0.0..=6.0).contains(&r.auc)));

    let report = tournament_runs(&dirs[0], &dirs[1], 3).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert_eq!(report.games, 4 * 4 * 2);
    assert!((0.0..=1.0).contains(&report.win_rate));
}

#[test]
fn deterministic_runs_repeat_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny("gesckpcr", 4);
    let a = run_training(&cfg, &tmp.path().join("a")).unwrap();
    let b = run_training(&cfg, &tmp.path().join("b")).unwrap();
    let read = |d: &str| std::fs::read(tmp.path().join(d).join(&a.metrics)).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(a.summary.trajectories_consumed, b.summary.trajectories_consumed);
}
