//! A complete training run: actor wiring, checkpoints, metrics, the
//! trajectory log and the run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Learner, LearnerError, RunConfig};
use crate::archive::{Archive, SharedArchive};
use crate::game::{ConnectFour, GameId, GameState, TicTacToe};
use crate::model::{NetShape, Network};
use crate::selfplay::{
    ArchiveActor, ParamsHandle, PopError, StartContext, TrainingActor, Trajectory, TrajectoryQueue,
};

pub const METRICS_HEADER: &str =
    "step,loss_total,loss_value,loss_policy,samples,trajectories,archive_size,unique_archive_keys";

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRAJECTORY_LOG: &str = "trajectories.jsonl";
pub const MANIFEST_FILE: &str = "manifest.toml";

// rng stream ids; every component gets its own ChaCha stream of the run seed
const STREAM_INIT: u64 = 1;
const STREAM_LEARNER: u64 = 2;
const STREAM_TRAINING_ACTOR: u64 = 1_000;
const STREAM_ARCHIVE_ACTOR: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub step: u64,
    /// Relative to the run directory.
    pub path: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps_completed: u64,
    pub samples_ingested: u64,
    pub trajectories_consumed: u64,
    pub training_actors_spawned: u64,
    pub archive_actors_spawned: u64,
    /// Archive writes made by the learner (visited-state variants).
    pub learner_archive_updates: u64,
    /// Archive writes made by archive actors (search-state variants).
    pub archive_actor_updates: u64,
    pub final_archive_size: u64,
    pub final_unique_archive_keys: u64,
    pub queue_dropped: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metrics: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_log: Option<String>,
    pub summary: RunSummary,
    pub config: RunConfig,
    pub checkpoints: Vec<CheckpointEntry>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, LearnerError> {
        let text = fs::read_to_string(path).map_err(|source| io_err(path, source))?;
        toml::from_str(&text).map_err(|e| LearnerError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), LearnerError> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| LearnerError::Config(format!("manifest: {e}")))?;
        fs::write(&path, text).map_err(|source| io_err(&path, source))
    }

    pub fn final_checkpoint(&self) -> Option<&CheckpointEntry> {
        self.checkpoints.iter().max_by_key(|c| c.step)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> LearnerError {
    LearnerError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `cfg.total_steps` learning steps and writes everything under `out`.
/// On failure an abort checkpoint and a manifest marked aborted are left
/// behind before the error is returned.
pub fn run_training(cfg: &RunConfig, out: &Path) -> Result<RunManifest, LearnerError> {
    cfg.validate().map_err(LearnerError::Config)?;
    match cfg.game {
        GameId::ConnectFour => run_game::<ConnectFour>(cfg, out),
        GameId::TicTacToe => run_game::<TicTacToe>(cfg, out),
    }
}

struct Outputs {
    dir: PathBuf,
    metrics: BufWriter<File>,
    trajectories: Option<BufWriter<File>>,
    checkpoints: Vec<CheckpointEntry>,
}

impl Outputs {
    fn create(dir: &Path, log_trajectories: bool) -> Result<Self, LearnerError> {
        fs::create_dir_all(dir.join("checkpoints")).map_err(|e| io_err(dir, e))?;
        let mp = dir.join(METRICS_FILE);
        let mut metrics = BufWriter::new(File::create(&mp).map_err(|e| io_err(&mp, e))?);
        writeln!(metrics, "{METRICS_HEADER}").map_err(|e| io_err(&mp, e))?;
        let trajectories = if log_trajectories {
            let tp = dir.join(TRAJECTORY_LOG);
            Some(BufWriter::new(File::create(&tp).map_err(|e| io_err(&tp, e))?))
        } else {
            None
        };
        Ok(Outputs {
            dir: dir.to_path_buf(),
            metrics,
            trajectories,
            checkpoints: Vec::new(),
        })
    }

    fn checkpoint(&mut self, net: &Network, name: String) -> Result<(), LearnerError> {
        let rel = format!("checkpoints/{name}");
        net.save(self.dir.join(&rel))?;
        self.checkpoints.push(CheckpointEntry { step: net.step(), path: rel });
        Ok(())
    }

    fn log_trajectory<S: GameState>(&mut self, t: &Trajectory<S>) -> Result<(), LearnerError> {
        if let Some(w) = &mut self.trajectories {
            let line = serde_json::to_string(&t.record()).expect("trajectory record serializes");
            writeln!(w, "{line}").map_err(|e| io_err(&self.dir.join(TRAJECTORY_LOG), e))?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<(), LearnerError> {
        self.metrics.flush().map_err(|e| io_err(&self.dir.join(METRICS_FILE), e))?;
        if let Some(w) = &mut self.trajectories {
            w.flush().map_err(|e| io_err(&self.dir.join(TRAJECTORY_LOG), e))?;
        }
        Ok(())
    }
}

struct Shared<S> {
    params: ParamsHandle<Network>,
    archive: Option<SharedArchive<S>>,
    start: StartContext<S>,
    ids: Arc<AtomicU64>,
    actor_updates: Arc<AtomicU64>,
}

fn run_game<S: GameState>(cfg: &RunConfig, out: &Path) -> Result<RunManifest, LearnerError> {
    let started = Instant::now();
    let mut outputs = Outputs::create(out, cfg.log_trajectories)?;
    let shape = NetShape::for_game::<S>(cfg.model.hidden_width, cfg.model.hidden_layers);
    let net = Network::new(S::ID, shape, &mut stream_rng(cfg.seed, STREAM_INIT))?;
    let archive = match cfg.variant.archive_kind() {
        Some(kind) => Some(Archive::new(kind, cfg.archive.capacity, S::initial())?.shared()),
        None => None,
    };
    let shared = Shared {
        params: ParamsHandle::new(net.clone()),
        start: StartContext {
            archive: archive.clone(),
            lambda: cfg.selfplay.lambda,
            katago_init: cfg.selfplay.katago_init,
            branching: cfg.selfplay.branching,
        },
        archive: archive.clone(),
        ids: Arc::new(AtomicU64::new(0)),
        actor_updates: Arc::new(AtomicU64::new(0)),
    };
    let mut learner = Learner::new(
        net,
        &cfg.replay,
        &cfg.model,
        archive,
        cfg.variant.learner_writes_archive(),
        stream_rng(cfg.seed, STREAM_LEARNER),
    )?;
    outputs.checkpoint(learner.network(), checkpoint_name(0))?;

    let mut summary = RunSummary {
        training_actors_spawned: cfg.training_actors as u64,
        archive_actors_spawned: cfg.archive_actors as u64,
        ..RunSummary::default()
    };
    let result = if cfg.deterministic {
        train_deterministic(cfg, &shared, &mut learner, &mut outputs)
    } else {
        train_threaded(cfg, &shared, &mut learner, &mut outputs, &mut summary)
    };

    summary.steps_completed = learner.step_count();
    summary.samples_ingested = learner.samples_total();
    summary.trajectories_consumed = learner.trajectories_total();
    summary.learner_archive_updates = learner.archive_updates();
    summary.archive_actor_updates = shared.actor_updates.load(Ordering::Relaxed);
    if let Some(a) = &shared.archive {
        let st = a.read().unwrap_or_else(|e| e.into_inner()).snapshot_stats();
        summary.final_archive_size = st.size as u64;
        summary.final_unique_archive_keys = st.unique_keys as u64;
    }
    summary.wall_seconds = started.elapsed().as_secs_f64();

    let status = match &result {
        Ok(()) => RunStatus::Completed,
        Err(e) => {
            warn!("run aborted at step {}: {e}", learner.step_count());
            // best effort: keep whatever state there is
            let _ = outputs.checkpoint(learner.network(), format!("abort-step-{:06}.ckpt", learner.step_count()));
            RunStatus::Aborted
        }
    };
    outputs.flush()?;
    let manifest = RunManifest {
        status,
        error: result.as_ref().err().map(|e| e.to_string()),
        metrics: METRICS_FILE.into(),
        trajectory_log: cfg.log_trajectories.then(|| TRAJECTORY_LOG.to_string()),
        summary,
        config: cfg.clone(),
        checkpoints: outputs.checkpoints.clone(),
    };
    manifest.save(out)?;
    result.map(|()| manifest)
}

fn checkpoint_name(step: u64) -> String {
    format!("step-{step:06}.ckpt")
}

/// Runs the learning steps, writing metrics and checkpoints after each one.
fn learn_loop<S, F>(cfg: &RunConfig, learner: &mut Learner<S>, outputs: &mut Outputs, params: &ParamsHandle<Network>, mut next: F) -> Result<(), LearnerError>
where
    S: GameState,
    F: FnMut(&mut Outputs, u64) -> Result<Trajectory<S>, LearnerError>,
{
    while learner.step_count() < cfg.total_steps {
        let step = learner.step_count();
        let report = learner.step(|| {
            let t = next(outputs, step)?;
            outputs.log_trajectory(&t)?;
            Ok(t)
        })?;
        params.publish(learner.network().clone());
        writeln!(outputs.metrics, "{}", report.csv_row()).map_err(|e| io_err(&outputs.dir.join(METRICS_FILE), e))?;
        if report.step % cfg.checkpoint_interval == 0 || report.step == cfg.total_steps {
            outputs.checkpoint(learner.network(), checkpoint_name(report.step))?;
            outputs.flush()?;
        }
        info!(
            "step {} loss {:.4} (v {:.4} p {:.4}) samples {} trajectories {} archive {}",
            report.step,
            report.loss.total,
            report.loss.value,
            report.loss.policy,
            report.samples,
            report.trajectories,
            report.archive_size
        );
    }
    Ok(())
}

/// Single-threaded: actors take turns in a fixed round-robin order, archive
/// actors included, so the whole run is a function of the seed.
fn train_deterministic<S: GameState>(
    cfg: &RunConfig,
    shared: &Shared<S>,
    learner: &mut Learner<S>,
    outputs: &mut Outputs,
) -> Result<(), LearnerError> {
    let (mut trainers, mut archivers) = build_actors(cfg, shared);
    let slots = trainers.len() + archivers.len();
    let mut cursor = 0usize;
    learn_loop(cfg, learner, outputs, &shared.params, |_, _| loop {
        let slot = cursor % slots;
        cursor += 1;
        if slot < trainers.len() {
            return Ok(trainers[slot].next_trajectory()?);
        }
        archivers[slot - trainers.len()].play_match()?;
    })
}

/// Free-running actor threads feeding a bounded queue.
fn train_threaded<S: GameState>(
    cfg: &RunConfig,
    shared: &Shared<S>,
    learner: &mut Learner<S>,
    outputs: &mut Outputs,
    summary: &mut RunSummary,
) -> Result<(), LearnerError> {
    let (trainers, archivers) = build_actors(cfg, shared);
    let queue: TrajectoryQueue<Trajectory<S>> = TrajectoryQueue::new(cfg.queue_capacity, cfg.backpressure);
    let stop = AtomicBool::new(false);
    let timeout = Duration::from_secs_f64(cfg.starvation_timeout_secs);

    let result = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for a in trainers {
            let (q, st) = (&queue, &stop);
            handles.push(scope.spawn(move || a.run(q, st).map(|_| ())));
        }
        for a in archivers {
            let st = &stop;
            handles.push(scope.spawn(move || a.run(st).map(|_| ())));
        }
        let learned = learn_loop(cfg, learner, outputs, &shared.params, |_, step| {
            queue.pop_timeout(timeout).map_err(|e| match e {
                PopError::Timeout(_) => LearnerError::Starved {
                    step,
                    secs: cfg.starvation_timeout_secs,
                },
                PopError::Closed => LearnerError::SourceClosed { step },
            })
        });
        stop.store(true, Ordering::Relaxed);
        queue.close();
        let mut actor_result = Ok(());
        for h in handles {
            match h.join() {
                Ok(Ok(())) => {}
                Ok(Err(e)) => actor_result = Err(LearnerError::from(e)),
                Err(_) => actor_result = Err(LearnerError::ActorPanic),
            }
        }
        learned.and(actor_result)
    });
    summary.queue_dropped = queue.dropped();
    result
}

type Actors<S> = (Vec<TrainingActor<S, Network>>, Vec<ArchiveActor<S, Network>>);

fn build_actors<S: GameState>(cfg: &RunConfig, shared: &Shared<S>) -> Actors<S> {
    let trainers = (0..cfg.training_actors)
        .map(|i| {
            TrainingActor::new(
                shared.start.clone(),
                cfg.search.clone(),
                cfg.selfplay.k,
                shared.params.clone(),
                Arc::clone(&shared.ids),
                stream_rng(cfg.seed, STREAM_TRAINING_ACTOR + i as u64),
            )
        })
        .collect();
    let archivers = match &shared.archive {
        Some(a) if cfg.variant.use_search_states() => (0..cfg.archive_actors)
            .map(|i| {
                ArchiveActor::new(
                    Arc::clone(a),
                    cfg.search.clone(),
                    cfg.selfplay.k,
                    shared.params.clone(),
                    stream_rng(cfg.seed, STREAM_ARCHIVE_ACTOR + i as u64),
                    Arc::clone(&shared.actor_updates),
                )
            })
            .collect(),
        _ => Vec::new(),
    };
    (trainers, archivers)
}
