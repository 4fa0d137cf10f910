//! Fixed reference opponents: MCTS-Solver at a multiple of the learning
//! agent's search budget, plus exact and random baselines.

mod minimax;
mod solver;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::game::{Action, GameState};

pub use minimax::Minimax;
pub use solver::{solver_search, Proven, SolverTree};

/// Default UCT exploration constant for the solver.
pub const DEFAULT_C_UCT: f64 = std::f64::consts::SQRT_2;

/// MCTS-Solver playing `level * base_iterations` iterations per move with a
/// fresh tree every move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOpponent {
    pub level: u32,
    pub base_iterations: u32,
    pub c_uct: f64,
}

impl ReferenceOpponent {
    pub fn new(level: u32, base_iterations: u32) -> Self {
        ReferenceOpponent {
            level,
            base_iterations,
            c_uct: DEFAULT_C_UCT,
        }
    }

    pub fn iterations(&self) -> u32 {
        self.level.saturating_mul(self.base_iterations).max(1)
    }

    pub fn select_action<S: GameState, R: Rng + ?Sized>(&self, state: &S, rng: &mut R) -> Action {
        solver_search(state, self.iterations(), self.c_uct, rng)
    }
}

/// Uniformly random legal move.
pub fn random_action<S: GameState, R: Rng + ?Sized>(state: &S, rng: &mut R) -> Action {
    let legal = state.legal_actions().expect("state is nonterminal");
    legal[rng.random_range(0..legal.len())]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_scales_the_budget() {
        assert_eq!(ReferenceOpponent::new(10, 100).iterations(), 1000);
        assert_eq!(ReferenceOpponent::new(1, 50).iterations(), 50);
        assert_eq!(ReferenceOpponent::new(1000, 100).iterations(), 100_000);
        assert_eq!(ReferenceOpponent::new(1, 100).c_uct, std::f64::consts::SQRT_2);
    }
}
