//! Two-player, zero-sum, perfect-information games.
//!
//! Every game is a value type implementing [`GameState`]. States are immutable:
//! [`GameState::apply`] returns a new state and leaves the receiver untouched, so
//! search trees, archives and trajectories can hold copies freely.
//!
//! Outcomes are always stored from player one's perspective. Conversion to the
//! perspective of the player to move happens only where a training target or a
//! search value is built.

mod connect_four;
mod tictactoe;

use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use connect_four::ConnectFour;
pub use tictactoe::TicTacToe;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("unknown game id `{0}` (expected `connect4` or `tictactoe`)")]
    UnknownGame(String),
    #[error("state is terminal; it has no legal actions")]
    TerminalState,
    #[error("illegal action {action} in state:\n{board}")]
    IllegalAction { action: Action, board: String },
}

/// Identifies one of the supported games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameId {
    #[serde(rename = "connect4")]
    ConnectFour,
    #[serde(rename = "tictactoe")]
    TicTacToe,
}

impl GameId {
    pub fn as_str(self) -> &'static str {
        match self {
            GameId::ConnectFour => "connect4",
            GameId::TicTacToe => "tictactoe",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            GameId::ConnectFour => 1,
            GameId::TicTacToe => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(GameId::ConnectFour),
            2 => Some(GameId::TicTacToe),
            _ => None,
        }
    }
}

impl FromStr for GameId {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "connect4" => Ok(GameId::ConnectFour),
            "tictactoe" => Ok(GameId::TicTacToe),
            other => Err(GameError::UnknownGame(other.to_string())),
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// +1 for player one, -1 for player two.
    pub fn sign(self) -> f64 {
        match self {
            Player::One => 1.0,
            Player::Two => -1.0,
        }
    }
}

/// Index into a game's fixed action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(pub u16);

impl Action {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for Action {
    fn from(i: usize) -> Self {
        Action(i as u16)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Terminal result, stored from player one's perspective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome(i8);

impl Outcome {
    pub const PLAYER_ONE_WINS: Outcome = Outcome(1);
    pub const DRAW: Outcome = Outcome(0);
    pub const PLAYER_TWO_WINS: Outcome = Outcome(-1);

    pub fn win_for(player: Player) -> Outcome {
        match player {
            Player::One => Outcome::PLAYER_ONE_WINS,
            Player::Two => Outcome::PLAYER_TWO_WINS,
        }
    }

    /// z in {-1, 0, +1} from player one's perspective.
    pub fn value(self) -> f64 {
        self.0 as f64
    }

    pub fn value_for(self, player: Player) -> f64 {
        self.value() * player.sign()
    }

    pub fn winner(self) -> Option<Player> {
        match self.0 {
            1 => Some(Player::One),
            -1 => Some(Player::Two),
            _ => None,
        }
    }

    /// Match score in {1, 0.5, 0} for `player`.
    pub fn score_for(self, player: Player) -> f64 {
        (self.value_for(player) + 1.0) / 2.0
    }
}

/// Canonical hashable identifier of a state (board plus player to move).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey(pub u128);

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl FromStr for StateKey {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u128::from_str_radix(s, 16).map(StateKey)
    }
}

/// A position in a two-player zero-sum game.
///
/// Implementors provide the unchecked primitives; the checked operations
/// (`legal_actions`, `apply`) are derived from them.
pub trait GameState: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static {
    const ID: GameId;
    const ROWS: usize;
    const COLS: usize;
    const NUM_ACTIONS: usize;
    /// Upper bound on the number of plies in any game.
    const MAX_PLIES: usize;

    fn initial() -> Self;

    fn to_move(&self) -> Player;

    /// Moves played since the initial state.
    fn ply(&self) -> u32;

    /// Occupant of a cell; row 0 is the bottom row.
    fn cell(&self, row: usize, col: usize) -> Option<Player>;

    /// Whether `action` is legal. Always false in a terminal state.
    fn is_legal(&self, action: Action) -> bool;

    /// Appends the legal actions in ascending order; appends nothing when terminal.
    fn legal_actions_into(&self, out: &mut Vec<Action>);

    /// Applies a legal action without checking it.
    fn play(&self, action: Action) -> Self;

    fn outcome(&self) -> Option<Outcome>;

    fn key(&self) -> StateKey;

    fn is_terminal(&self) -> bool {
        self.outcome().is_some()
    }

    fn legal_actions(&self) -> Result<Vec<Action>, GameError> {
        if self.is_terminal() {
            return Err(GameError::TerminalState);
        }
        let mut out = Vec::with_capacity(Self::NUM_ACTIONS);
        self.legal_actions_into(&mut out);
        Ok(out)
    }

    fn apply(&self, action: Action) -> Result<Self, GameError> {
        if !self.is_legal(action) {
            return Err(GameError::IllegalAction {
                action,
                board: self.render(),
            });
        }
        Ok(self.play(action))
    }

    /// One line per row, top row first, `X` for player one, `O` for player two.
    fn render(&self) -> String {
        let mut s = String::with_capacity((Self::COLS + 1) * Self::ROWS);
        for row in (0..Self::ROWS).rev() {
            for col in 0..Self::COLS {
                s.push(match self.cell(row, col) {
                    None => '.',
                    Some(Player::One) => 'X',
                    Some(Player::Two) => 'O',
                });
            }
            s.push('\n');
        }
        s
    }
}

/// Plays uniformly random legal moves until the game ends.
pub fn random_playout<S: GameState, R: rand::Rng + ?Sized>(
    state: &S,
    rng: &mut R,
    buf: &mut Vec<Action>,
) -> Outcome {
    let mut s = state.clone();
    loop {
        if let Some(o) = s.outcome() {
            return o;
        }
        buf.clear();
        s.legal_actions_into(buf);
        let a = buf[rng.random_range(0..buf.len())];
        s = s.play(a);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn game_ids_parse() {
        assert_eq!("connect4".parse::<GameId>().unwrap(), GameId::ConnectFour);
        assert_eq!("tictactoe".parse::<GameId>().unwrap(), GameId::TicTacToe);
        assert_eq!(
            "chess".parse::<GameId>(),
            Err(GameError::UnknownGame("chess".into()))
        );
    }

    #[test]
    fn outcome_is_zero_sum() {
        for o in [Outcome::PLAYER_ONE_WINS, Outcome::DRAW, Outcome::PLAYER_TWO_WINS] {
            assert_eq!(o.value_for(Player::Two), -o.value_for(Player::One));
            assert_eq!(o.score_for(Player::One) + o.score_for(Player::Two), 1.0);
        }
        assert_eq!(Outcome::DRAW.score_for(Player::One), 0.5);
    }

    #[test]
    fn state_key_hex_round_trip() {
        let k = StateKey(0xdead_beef_u128 << 64 | 7);
        assert_eq!(k.to_string().parse::<StateKey>().unwrap(), k);
    }
}
