//! Self-play trajectory generation: start-state selection, training actors
//! that feed the learner, and archive actors that only populate the archive.

mod actor;
mod queue;
mod start;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::ArchiveError;
use crate::mcts::SearchError;

pub use actor::{generate_trajectory, ArchiveActor, ParamsHandle, TrainingActor};
pub use queue::{Backpressure, PopError, QueueClosed, TrajectoryQueue};
pub use start::{katago_branch, katago_init_start, masked_priors, select_start_state, StartContext};
pub use trajectory::{Origin, Trajectory, TrajectoryRecord, TrajectoryStep};

#[derive(Debug, Error)]
pub enum SelfplayError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error("cannot start a trajectory from a terminal state")]
    TerminalStart,
}

/// KataGo-style trajectory initialization: the number of opening moves sampled
/// straight from the network prior is uniform on `min_moves..=max_moves`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KatagoInit {
    pub min_moves: u32,
    pub max_moves: u32,
}

/// KataGo-style branching from the actor's previous trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branching {
    /// Probability of branching with a random alternative action.
    pub p_alt: f64,
    /// Probability of branching with the best-valued of a few sampled actions.
    pub p_value: f64,
    /// Value branching only considers the first `window` steps.
    pub window: u32,
    pub n_sampled_actions: u32,
}

impl Default for Branching {
    fn default() -> Self {
        Branching {
            p_alt: 0.05,
            p_value: 0.05,
            window: 10,
            n_sampled_actions: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfplayConfig {
    /// Probability of starting from the initial state instead of an archive
    /// sample. Ignored when there is no archive.
    pub lambda: f64,
    /// Actions are sampled from π for the first `k` moves of every
    /// trajectory, then chosen by argmax.
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub katago_init: Option<KatagoInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching: Option<Branching>,
}

impl Default for SelfplayConfig {
    fn default() -> Self {
        SelfplayConfig {
            lambda: 0.1,
            k: 10,
            katago_init: None,
            branching: None,
        }
    }
}

impl SelfplayConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(format!("selfplay.lambda must lie in [0, 1], got {}", self.lambda));
        }
        if let Some(ki) = &self.katago_init {
            if ki.min_moves > ki.max_moves {
                return Err(format!(
                    "selfplay.katago_init.min_moves ({}) exceeds max_moves ({})",
                    ki.min_moves, ki.max_moves
                ));
            }
        }
        if let Some(b) = &self.branching {
            for (name, p) in [("p_alt", b.p_alt), ("p_value", b.p_value)] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("selfplay.branching.{name} must lie in [0, 1], got {p}"));
                }
            }
            if b.p_alt + b.p_value > 1.0 {
                return Err("selfplay.branching.p_alt + p_value must not exceed 1".into());
            }
            if b.window == 0 {
                return Err("selfplay.branching.window must be positive".into());
            }
            if b.n_sampled_actions == 0 {
                return Err("selfplay.branching.n_sampled_actions must be positive".into());
            }
        }
        Ok(())
    }
}
