use rand::RngCore;

use crate::game::{Action, GameState};
use crate::mcts::{run_search, SearchConfig};
use crate::model::Evaluator;
use crate::opponents::{random_action, Minimax, ReferenceOpponent};

use super::EvalError;

/// Anything that picks moves in a match.
pub trait Agent<S: GameState> {
    fn select_action(&mut self, state: &S, rng: &mut dyn RngCore) -> Result<Action, EvalError>;
}

/// PUCT search over an evaluator, without root noise, playing the most
/// visited move from the first ply.
pub struct MctsAgent<E> {
    eval: E,
    cfg: SearchConfig,
}

impl<E> MctsAgent<E> {
    pub fn new(eval: E, iterations: u32, c_puct: f64) -> Self {
        MctsAgent {
            eval,
            cfg: SearchConfig::evaluation(iterations, c_puct),
        }
    }

    pub fn config(&self) -> &SearchConfig {
        &self.cfg
    }
}

impl<S: GameState, E: Evaluator<S>> Agent<S> for MctsAgent<E> {
    fn select_action(&mut self, state: &S, rng: &mut dyn RngCore) -> Result<Action, EvalError> {
        Ok(run_search(state, &self.eval, &self.cfg, rng)?.best_action())
    }
}

pub struct SolverAgent(pub ReferenceOpponent);

impl<S: GameState> Agent<S> for SolverAgent {
    fn select_action(&mut self, state: &S, rng: &mut dyn RngCore) -> Result<Action, EvalError> {
        Ok(self.0.select_action(state, rng))
    }
}

#[derive(Default)]
pub struct MinimaxAgent(pub Minimax);

impl<S: GameState> Agent<S> for MinimaxAgent {
    fn select_action(&mut self, state: &S, rng: &mut dyn RngCore) -> Result<Action, EvalError> {
        Ok(self.0.select_action(state, rng))
    }
}

pub struct RandomAgent;

impl<S: GameState> Agent<S> for RandomAgent {
    fn select_action(&mut self, state: &S, rng: &mut dyn RngCore) -> Result<Action, EvalError> {
        Ok(random_action(state, rng))
    }
}
