//! The learner: trajectory ingestion, replay, SGD, parameter publication,
//! archive updates for visited-state variants, and whole training runs.

mod config;
mod run;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::archive::{ArchiveError, SharedArchive};
use crate::game::GameState;
use crate::model::{LossReport, ModelError, Network};
use crate::replay::{ReplayBuffer, ReplayError};
use crate::selfplay::{SelfplayError, Trajectory};

pub use config::{ArchiveConfig, ModelConfig, ReplayConfig, RunConfig, Variant};
pub use run::{
    run_training, CheckpointEntry, RunManifest, RunStatus, RunSummary, MANIFEST_FILE, METRICS_FILE, METRICS_HEADER,
    TRAJECTORY_LOG,
};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no trajectory arrived for {secs}s at step {step}; actors may be stalled")]
    Starved { step: u64, secs: f64 },
    #[error("trajectory source closed at step {step}")]
    SourceClosed { step: u64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("actor thread panicked")]
    ActorPanic,
    #[error(transparent)]
    Selfplay(#[from] SelfplayError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Summary of one learning step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u64,
    /// Samples ingested in this step.
    pub samples: usize,
    pub trajectories: usize,
    /// Mean over the step's mini-batches, measured before each update.
    pub loss: LossReport,
    pub archive_size: usize,
    pub unique_archive_keys: usize,
}

impl StepReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step,
            self.loss.total,
            self.loss.value,
            self.loss.policy,
            self.samples,
            self.trajectories,
            self.archive_size,
            self.unique_archive_keys
        )
    }
}

/// Owns the network and replay buffer.
pub struct Learner<S> {
    net: Network,
    replay: ReplayBuffer,
    archive: Option<SharedArchive<S>>,
    writes_archive: bool,
    cfg: ReplayConfig,
    lr: f64,
    weight_decay: f64,
    rng: ChaCha8Rng,
    step: u64,
    archive_updates: u64,
    samples_total: u64,
    trajectories_total: u64,
}

impl<S: GameState> Learner<S> {
    /// `writes_archive` selects visited-state archive updates after each step.
    pub fn new(
        net: Network,
        replay: &ReplayConfig,
        model: &ModelConfig,
        archive: Option<SharedArchive<S>>,
        writes_archive: bool,
        rng: ChaCha8Rng,
    ) -> Result<Self, LearnerError> {
        if writes_archive && archive.is_none() {
            return Err(LearnerError::Config("learner archive updates need an archive".into()));
        }
        Ok(Learner {
            net,
            replay: ReplayBuffer::new(replay.capacity)?,
            archive,
            writes_archive,
            cfg: replay.clone(),
            lr: model.lr,
            weight_decay: model.weight_decay,
            rng,
            step: 0,
            archive_updates: 0,
            samples_total: 0,
            trajectories_total: 0,
        })
    }

    /// Convenience constructor for tests and tools.
    pub fn seeded(net: Network, cfg: &RunConfig, archive: Option<SharedArchive<S>>) -> Result<Self, LearnerError> {
        Self::new(
            net,
            &cfg.replay,
            &cfg.model,
            archive,
            cfg.variant.learner_writes_archive(),
            ChaCha8Rng::seed_from_u64(cfg.seed),
        )
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn archive_updates(&self) -> u64 {
        self.archive_updates
    }

    pub fn samples_total(&self) -> u64 {
        self.samples_total
    }

    pub fn trajectories_total(&self) -> u64 {
        self.trajectories_total
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    /// One learning step: pull whole trajectories from `next` until at least
    /// `b_step` new samples are in replay, run the configured mini-batch
    /// updates, then (visited-state variants) offer the ingested states to the
    /// archive.
    pub fn step<F>(&mut self, mut next: F) -> Result<StepReport, LearnerError>
    where
        F: FnMut() -> Result<Trajectory<S>, LearnerError>,
    {
        let mut samples = 0;
        let mut trajectories = 0;
        let mut visited = Vec::new();
        while samples < self.cfg.b_step {
            let t = next()?;
            for s in t.to_samples() {
                self.replay.add(s);
            }
            samples += t.len();
            trajectories += 1;
            if self.writes_archive {
                visited.extend(t.steps.into_iter().map(|st| st.state));
            }
        }
        self.samples_total += samples as u64;
        self.trajectories_total += trajectories as u64;

        let mut sum = LossReport::default();
        for _ in 0..self.cfg.batch_count {
            let batch = self.replay.sample_batch(self.cfg.batch_size, &mut self.rng)?;
            let r = self.net.sgd_step(&batch, self.lr, self.weight_decay)?;
            sum.total += r.total;
            sum.value += r.value;
            sum.policy += r.policy;
            sum.l2 += r.l2;
        }
        let n = self.cfg.batch_count as f64;
        let loss = LossReport {
            total: sum.total / n,
            value: sum.value / n,
            policy: sum.policy / n,
            l2: sum.l2 / n,
        };

        if self.writes_archive {
            if let Some(a) = &self.archive {
                a.write()
                    .unwrap_or_else(|e| e.into_inner())
                    .update(&visited, &mut self.rng)?;
                self.archive_updates += 1;
            }
        }
        self.step += 1;
        self.net.set_step(self.step);

        let (archive_size, unique_archive_keys) = match &self.archive {
            Some(a) => {
                let st = a.read().unwrap_or_else(|e| e.into_inner()).snapshot_stats();
                (st.size, st.unique_keys)
            }
            None => (0, 0),
        };
        Ok(StepReport {
            step: self.step,
            samples,
            trajectories,
            loss,
            archive_size,
            unique_archive_keys,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{Archive, ArchiveKind};
    use crate::game::{GameId, TicTacToe};
    use crate::mcts::SearchConfig;
    use crate::model::NetShape;
    use crate::selfplay::{generate_trajectory, Origin};

    fn small_cfg(variant: Variant) -> RunConfig {
        let mut cfg = RunConfig::preset(GameId::TicTacToe, variant);
        cfg.replay.b_step = 20;
        cfg.replay.batch_count = 2;
        cfg.replay.batch_size = 8;
        cfg.model.hidden_width = 8;
        cfg
    }

    fn source(seed: u64) -> impl FnMut() -> Result<Trajectory<TicTacToe>, LearnerError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut id = 0;
        let search = SearchConfig {
            iterations: 8,
            use_root_noise: true,
            ..SearchConfig::default()
        };
        move || {
            id += 1;
            let net = crate::model::UniformEvaluator;
            Ok(generate_trajectory(TicTacToe::initial(), Origin::InitialState, id, &net, &search, 9, &mut rng)?)
        }
    }

    fn net(cfg: &RunConfig) -> Network {
        let shape = NetShape::for_game::<TicTacToe>(cfg.model.hidden_width, cfg.model.hidden_layers);
        Network::new(GameId::TicTacToe, shape, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn ingestion_is_trajectory_granular() {
        let cfg = small_cfg(Variant::AlphaZero);
        let mut l: Learner<TicTacToe> = Learner::seeded(net(&cfg), &cfg, None).unwrap();
        let mut src = source(2);
        let mut total = 0;
        for step in 1..=5 {
            let r = l.step(&mut src).unwrap();
            assert_eq!(r.step, step);
            assert!(r.samples >= 20 && r.samples < 20 + 9, "{}", r.samples);
            assert!(r.loss.total.is_finite());
            total += r.samples;
        }
        assert_eq!(l.samples_total(), total as u64);
        assert_eq!(l.network().step(), 5);
        assert_eq!(l.network().updates(), 10);
        assert_eq!(l.archive_updates(), 0);
    }

    #[test]
    fn visited_state_variant_updates_archive_after_each_step() {
        let cfg = small_cfg(Variant::Geve);
        let archive = Archive::new(ArchiveKind::Expanding, 0, TicTacToe::initial()).unwrap().shared();
        let mut l = Learner::seeded(net(&cfg), &cfg, Some(archive.clone())).unwrap();
        let r = l.step(source(3)).unwrap();
        assert_eq!(r.archive_size, 1 + r.samples);
        assert_eq!(l.archive_updates(), 1);
        assert!(r.unique_archive_keys <= r.archive_size);
    }

    #[test]
    fn search_state_variant_never_writes_archive() {
        let cfg = small_cfg(Variant::Gesc);
        let archive = Archive::new(ArchiveKind::Circular, 10, TicTacToe::initial()).unwrap().shared();
        let mut l = Learner::seeded(net(&cfg), &cfg, Some(archive.clone())).unwrap();
        let mut src = source(4);
        for _ in 0..3 {
            l.step(&mut src).unwrap();
        }
        assert_eq!(l.archive_updates(), 0);
        assert_eq!(archive.read().unwrap().size(), 1);
    }

    #[test]
    fn source_errors_propagate() {
        let cfg = small_cfg(Variant::AlphaZero);
        let mut l: Learner<TicTacToe> = Learner::seeded(net(&cfg), &cfg, None).unwrap();
        let err = l.step(|| Err(LearnerError::SourceClosed { step: 0 })).unwrap_err();
        assert!(matches!(err, LearnerError::SourceClosed { .. }));
        assert_eq!(l.step_count(), 0);
    }
}
