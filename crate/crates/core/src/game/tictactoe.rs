//! Tic-Tac-Toe on a 3x3 board. Small enough to enumerate exhaustively, which
//! makes it the reference game for oracle tests.
//!
//! Cell `i` is row `i / 3`, column `i % 3`; row 0 is rendered last.

use super::{Action, GameError, GameId, GameState, Outcome, Player, StateKey};

const LINES: [u16; 8] = [
    0b000_000_111,
    0b000_111_000,
    0b111_000_000,
    0b001_001_001,
    0b010_010_010,
    0b100_100_100,
    0b100_010_001,
    0b001_010_100,
];

const FULL: u16 = 0b111_111_111;
const ONGOING: i8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TicTacToe {
    x: u16,
    o: u16,
    to_move: Player,
    result: i8,
}

fn has_line(b: u16) -> bool {
    LINES.iter().any(|&l| b & l == l)
}

impl TicTacToe {
    /// Replays a sequence of cell indices from the empty board.
    pub fn from_moves(cells: &[usize]) -> Result<Self, GameError> {
        let mut s = Self::initial();
        for &c in cells {
            s = s.apply(Action::from(c))?;
        }
        Ok(s)
    }

    fn compute_result(x: u16, o: u16) -> i8 {
        if has_line(x) {
            1
        } else if has_line(o) {
            -1
        } else if x | o == FULL {
            0
        } else {
            ONGOING
        }
    }

    #[cfg(test)]
    pub(crate) fn with_to_move(mut self, to_move: Player) -> Self {
        self.to_move = to_move;
        self
    }
}

impl GameState for TicTacToe {
    const ID: GameId = GameId::TicTacToe;
    const ROWS: usize = 3;
    const COLS: usize = 3;
    const NUM_ACTIONS: usize = 9;
    const MAX_PLIES: usize = 9;

    fn initial() -> Self {
        TicTacToe {
            x: 0,
            o: 0,
            to_move: Player::One,
            result: ONGOING,
        }
    }

    fn to_move(&self) -> Player {
        self.to_move
    }

    fn ply(&self) -> u32 {
        (self.x | self.o).count_ones()
    }

    fn cell(&self, row: usize, col: usize) -> Option<Player> {
        let bit = 1u16 << (row * 3 + col);
        if self.x & bit != 0 {
            Some(Player::One)
        } else if self.o & bit != 0 {
            Some(Player::Two)
        } else {
            None
        }
    }

    fn is_legal(&self, action: Action) -> bool {
        let i = action.index();
        i < 9 && self.result == ONGOING && (self.x | self.o) & (1 << i) == 0
    }

    fn legal_actions_into(&self, out: &mut Vec<Action>) {
        if self.result != ONGOING {
            return;
        }
        let occupied = self.x | self.o;
        for i in 0..9u16 {
            if occupied & (1 << i) == 0 {
                out.push(Action(i));
            }
        }
    }

    fn play(&self, action: Action) -> Self {
        debug_assert!(self.is_legal(action), "illegal action {action}");
        let bit = 1u16 << action.index();
        let (mut x, mut o) = (self.x, self.o);
        match self.to_move {
            Player::One => x |= bit,
            Player::Two => o |= bit,
        }
        TicTacToe {
            x,
            o,
            to_move: self.to_move.opponent(),
            result: Self::compute_result(x, o),
        }
    }

    fn outcome(&self) -> Option<Outcome> {
        match self.result {
            1 => Some(Outcome::PLAYER_ONE_WINS),
            -1 => Some(Outcome::PLAYER_TWO_WINS),
            0 => Some(Outcome::DRAW),
            _ => None,
        }
    }

    fn is_terminal(&self) -> bool {
        self.result != ONGOING
    }

    fn key(&self) -> StateKey {
        let side = match self.to_move {
            Player::One => 0u128,
            Player::Two => 1u128 << 127,
        };
        StateKey(self.x as u128 | (self.o as u128) << 9 | side)
    }
}
