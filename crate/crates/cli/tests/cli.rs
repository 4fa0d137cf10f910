use std::path::Path;
use std::process::{Command, Output};

fn searchctl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_searchctl"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SEARCHCTL_OUT")
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

const TINY: &[&str] = &[
    "--game",
    "tictactoe",
    "--variant",
    "gesc",
    "--seed",
    "3",
    "--deterministic",
    "--set",
    "total_steps=4",
    "--set",
    "checkpoint_interval=2",
    "--set",
    "replay.b_step=32",
    "--set",
    "replay.batch_count=1",
    "--set",
    "replay.batch_size=16",
    "--set",
    "model.hidden_width=8",
];

#[test]
fn validate_config_prints_resolved_toml() {
    let tmp = tempfile::tempdir().unwrap();
    let out = searchctl(&["validate-config", "--game", "connect4", "--variant", "akb"], tmp.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let s = text(&out.stdout);
    assert!(s.contains("variant = \"akb\""), "{s}");
    assert!(s.contains("game = \"connect4\""), "{s}");
}

#[test]
fn invalid_config_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = searchctl(&["validate-config", "--set", "search.dirichlet_epsilon=1.5"], tmp.path());
    assert!(!out.status.success());
    assert!(text(&out.stderr).starts_with("searchctl:"), "{}", text(&out.stderr));

    let out = searchctl(&["validate-config", "--variant", "nonsense"], tmp.path());
    assert!(!out.status.success());
}

#[test]
fn train_evaluate_stats_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["train"];
    args.extend_from_slice(TINY);
    let out = searchctl(&args, tmp.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let run = tmp.path().join("runs/gesc-tictactoe-seed3");
    assert!(run.join("manifest.toml").exists());

    let run_s = run.to_str().unwrap();
    let out = searchctl(
        &["evaluate", "--checkpoint", run_s, "--levels", "1", "--matches", "2"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(run.join("eval.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "step,level,matches,wins,draws,losses,win_rate");
    assert_eq!(lines.count(), 3, "checkpoints at steps 0, 2 and 4");

    let out = searchctl(&["evaluate", "--checkpoint", run_s, "--matches", "3"], tmp.path());
    assert!(!out.status.success(), "odd match counts are rejected");

    let out = searchctl(&["stats", run_s, "--value-loss", "visited", "--games", "2"], tmp.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("value loss (visited)"));
    assert!(run.join("depth.csv").exists());

    let curves = tmp.path().join("curves");
    let out = searchctl(&["emit-curves", run_s, "--out", curves.to_str().unwrap()], tmp.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(curves.join("auc.csv").exists());
}
