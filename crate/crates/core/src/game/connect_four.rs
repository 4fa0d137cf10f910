//! Connect Four on the standard 7 column, 6 row board.
//!
//! Bitboard layout: bit `col * 7 + row`, with row 6 of every column a spare
//! sentinel bit that stays zero. The sentinel keeps shifted line checks from
//! wrapping between columns.

use super::{Action, GameError, GameId, GameState, Outcome, Player, StateKey};

const WIDTH: usize = 7;
const HEIGHT: usize = 6;
const STRIDE: usize = HEIGHT + 1;

const fn bottom_mask() -> u64 {
    let mut m = 0u64;
    let mut c = 0;
    while c < WIDTH {
        m |= 1 << (c * STRIDE);
        c += 1;
    }
    m
}

const BOTTOM: u64 = bottom_mask();
const COLUMN: u64 = (1 << HEIGHT) - 1;

const ONGOING: i8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConnectFour {
    p1: u64,
    p2: u64,
    to_move: Player,
    ply: u8,
    // Cached from the boards; ONGOING while nonterminal.
    result: i8,
}

fn has_four(b: u64) -> bool {
    for shift in [1, STRIDE, STRIDE - 1, STRIDE + 1] {
        let m = b & (b >> shift);
        if m & (m >> (2 * shift)) != 0 {
            return true;
        }
    }
    false
}

fn column_mask(col: usize) -> u64 {
    COLUMN << (col * STRIDE)
}

impl ConnectFour {
    /// Replays a sequence of column indices from the empty board.
    pub fn from_moves(columns: &[usize]) -> Result<Self, GameError> {
        let mut s = Self::initial();
        for &c in columns {
            s = s.apply(Action::from(c))?;
        }
        Ok(s)
    }

    fn compute_result(p1: u64, p2: u64, ply: u8) -> i8 {
        if has_four(p1) {
            1
        } else if has_four(p2) {
            -1
        } else if ply as usize == WIDTH * HEIGHT {
            0
        } else {
            ONGOING
        }
    }

    /// Number of pieces in a column.
    pub fn height(&self, col: usize) -> usize {
        ((self.p1 | self.p2) & column_mask(col)).count_ones() as usize
    }

    #[cfg(test)]
    pub(crate) fn with_to_move(mut self, to_move: Player) -> Self {
        self.to_move = to_move;
        self
    }
}

impl GameState for ConnectFour {
    const ID: GameId = GameId::ConnectFour;
    const ROWS: usize = HEIGHT;
    const COLS: usize = WIDTH;
    const NUM_ACTIONS: usize = WIDTH;
    const MAX_PLIES: usize = WIDTH * HEIGHT;

    fn initial() -> Self {
        ConnectFour {
            p1: 0,
            p2: 0,
            to_move: Player::One,
            ply: 0,
            result: ONGOING,
        }
    }

    fn to_move(&self) -> Player {
        self.to_move
    }

    fn ply(&self) -> u32 {
        self.ply as u32
    }

    fn cell(&self, row: usize, col: usize) -> Option<Player> {
        let bit = 1u64 << (col * STRIDE + row);
        if self.p1 & bit != 0 {
            Some(Player::One)
        } else if self.p2 & bit != 0 {
            Some(Player::Two)
        } else {
            None
        }
    }

    fn is_legal(&self, action: Action) -> bool {
        let col = action.index();
        col < WIDTH
            && self.result == ONGOING
            && (self.p1 | self.p2) & (1 << (col * STRIDE + HEIGHT - 1)) == 0
    }

    fn legal_actions_into(&self, out: &mut Vec<Action>) {
        if self.result != ONGOING {
            return;
        }
        let both = self.p1 | self.p2;
        for col in 0..WIDTH {
            if both & (1 << (col * STRIDE + HEIGHT - 1)) == 0 {
                out.push(Action(col as u16));
            }
        }
    }

    fn play(&self, action: Action) -> Self {
        debug_assert!(self.is_legal(action), "illegal action {action}");
        let col = action.index();
        let both = self.p1 | self.p2;
        let bit = (both + (BOTTOM & column_mask(col))) & column_mask(col);
        let (mut p1, mut p2) = (self.p1, self.p2);
        match self.to_move {
            Player::One => p1 |= bit,
            Player::Two => p2 |= bit,
        }
        let ply = self.ply + 1;
        ConnectFour {
            p1,
            p2,
            to_move: self.to_move.opponent(),
            ply,
            result: Self::compute_result(p1, p2, ply),
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
        StateKey(self.p1 as u128 | (self.p2 as u128) << 49 | side)
    }
}
