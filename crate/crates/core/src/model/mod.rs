//! The policy-value approximator: state encoding, a dense network with
//! hand-written backpropagation, plain SGD, and checkpoint files.

mod checkpoint;
mod features;
mod network;

use thiserror::Error;

use crate::game::{GameId, GameState};

pub use checkpoint::CHECKPOINT_VERSION;
pub use features::{encode, StateFeatures, CHANNELS};
pub use network::{LossReport, NetShape, Network};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("non-finite gradient or loss at update {update}")]
    NonFinite { update: u64 },
    #[error("checkpoint {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {path}: {reason}")]
    Corrupt { path: String, reason: String },
    #[error("checkpoint {path} is for {found} but {expected} was requested")]
    WrongGame {
        path: String,
        found: GameId,
        expected: GameId,
    },
}

/// One training tuple: features of `s_t`, the search policy target, and the
/// outcome seen from the player to move at `s_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub features: StateFeatures,
    pub policy: Vec<f64>,
    pub value: f64,
    /// 1.0 when the policy target comes from a full search, 0.0 when only the
    /// value target should be trained (reduced playout-cap searches).
    pub policy_weight: f64,
    pub trajectory_id: u64,
}

/// Anything that can score a state for search: raw priors over the whole
/// action space plus a value for the player to move.
pub trait Evaluator<S: GameState> {
    /// Writes priors into `priors` (length `S::NUM_ACTIONS`) and returns the
    /// value estimate in [-1, 1] from the perspective of `state.to_move()`.
    fn evaluate(&self, state: &S, priors: &mut [f64]) -> f64;
}

impl<S: GameState, E: Evaluator<S> + ?Sized> Evaluator<S> for &E {
    fn evaluate(&self, state: &S, priors: &mut [f64]) -> f64 {
        (**self).evaluate(state, priors)
    }
}

impl<S: GameState, E: Evaluator<S> + ?Sized> Evaluator<S> for std::sync::Arc<E> {
    fn evaluate(&self, state: &S, priors: &mut [f64]) -> f64 {
        (**self).evaluate(state, priors)
    }
}

/// Uniform priors and a zero value; stands in for an untrained network.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformEvaluator;

impl<S: GameState> Evaluator<S> for UniformEvaluator {
    fn evaluate(&self, _state: &S, priors: &mut [f64]) -> f64 {
        let p = 1.0 / priors.len() as f64;
        priors.iter_mut().for_each(|x| *x = p);
        0.0
    }
}

impl<S: GameState> Evaluator<S> for Network {
    fn evaluate(&self, state: &S, priors: &mut [f64]) -> f64 {
        debug_assert_eq!(self.game(), S::ID);
        let features = encode(state);
        self.forward_raw(features.as_slice(), priors)
    }
}
