//! Exact negamax with a transposition table. Only practical for games as
//! small as Tic-Tac-Toe.

use std::collections::HashMap;

use rand::Rng;

use crate::game::{Action, GameState, StateKey};

#[derive(Debug, Default, Clone)]
pub struct Minimax {
    table: HashMap<StateKey, i8>,
}

impl Minimax {
    pub fn new() -> Self {
        Self::default()
    }

    /// Game value for the player to move: 1 win, 0 draw, -1 loss.
    pub fn value<S: GameState>(&mut self, state: &S) -> i8 {
        if let Some(o) = state.outcome() {
            return o.value_for(state.to_move()) as i8;
        }
        let key = state.key();
        if let Some(&v) = self.table.get(&key) {
            return v;
        }
        let mut best = -1;
        for a in state.legal_actions().expect("nonterminal") {
            best = best.max(-self.value(&state.play(a)));
            if best == 1 {
                break;
            }
        }
        self.table.insert(key, best);
        best
    }

    /// Every action achieving the game value, in ascending order.
    pub fn optimal_actions<S: GameState>(&mut self, state: &S) -> Vec<Action> {
        let target = self.value(state);
        state
            .legal_actions()
            .expect("nonterminal")
            .into_iter()
            .filter(|&a| -self.value(&state.play(a)) == target)
            .collect()
    }

    /// A uniformly random optimal action.
    pub fn select_action<S: GameState, R: Rng + ?Sized>(&mut self, state: &S, rng: &mut R) -> Action {
        let best = self.optimal_actions(state);
        best[rng.random_range(0..best.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TicTacToe;

    #[test]
    fn tictactoe_is_a_draw() {
        let mut m = Minimax::new();
        assert_eq!(m.value(&TicTacToe::initial()), 0);
        // every first move keeps the draw
        assert_eq!(m.optimal_actions(&TicTacToe::initial()).len(), 9);
    }

    #[test]
    fn sees_wins_and_forced_losses() {
        let mut m = Minimax::new();
        let win = TicTacToe::from_moves(&[0, 3, 1, 4]).unwrap();
        assert_eq!(m.value(&win), 1);
        assert_eq!(m.optimal_actions(&win), vec![Action(2)]);
        // X has a fork: O to move loses whatever it does
        let forked = TicTacToe::from_moves(&[0, 4, 8, 2, 6, 3]).unwrap();
        assert_eq!(m.value(&forked), 1);
        let lost = TicTacToe::from_moves(&[0, 4, 8, 2, 6, 3, 7]).unwrap();
        assert!(lost.is_terminal());
    }
}
