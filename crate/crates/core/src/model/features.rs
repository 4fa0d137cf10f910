use crate::game::{GameState, Player};

/// Planes per encoded state: current player's pieces, opponent's pieces, and
/// a constant plane that is 1 when player one is to move.
pub const CHANNELS: usize = 3;

/// Input planes of shape `[CHANNELS, rows, cols]`, flattened channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFeatures {
    planes: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl StateFeatures {
    pub fn from_planes(planes: Vec<f64>, rows: usize, cols: usize) -> Option<Self> {
        (planes.len() == CHANNELS * rows * cols).then_some(StateFeatures { planes, rows, cols })
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.planes[(channel * self.rows + row) * self.cols + col]
    }

    pub fn shape(&self) -> [usize; 3] {
        [CHANNELS, self.rows, self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.planes
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }
}

pub fn encode<S: GameState>(state: &S) -> StateFeatures {
    let (rows, cols) = (S::ROWS, S::COLS);
    let plane = rows * cols;
    let mut planes = vec![0.0; CHANNELS * plane];
    let me = state.to_move();
    for r in 0..rows {
        for c in 0..cols {
            match state.cell(r, c) {
                Some(p) if p == me => planes[r * cols + c] = 1.0,
                Some(_) => planes[plane + r * cols + c] = 1.0,
                None => {}
            }
        }
    }
    if me == Player::One {
        planes[2 * plane..].iter_mut().for_each(|x| *x = 1.0);
    }
    StateFeatures { planes, rows, cols }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ConnectFour, TicTacToe};

    #[test]
    fn empty_board_encoding() {
        let f = encode(&ConnectFour::initial());
        assert_eq!(f.shape(), [3, 6, 7]);
        for r in 0..6 {
            for c in 0..7 {
                assert_eq!(f.get(0, r, c), 0.0);
                assert_eq!(f.get(1, r, c), 0.0);
                assert_eq!(f.get(2, r, c), 1.0);
            }
        }
    }

    #[test]
    fn perspective_flips_with_side_to_move() {
        let s = ConnectFour::from_moves(&[2]).unwrap();
        let f = encode(&s);
        assert_eq!(f.get(0, 0, 2), 0.0);
        assert_eq!(f.get(1, 0, 2), 1.0);
        assert!((0..6).all(|r| (0..7).all(|c| f.get(2, r, c) == 0.0)));
    }

    #[test]
    fn encoding_is_deterministic_and_binary() {
        let s = TicTacToe::from_moves(&[4, 0, 8]).unwrap();
        let (a, b) = (encode(&s), encode(&s));
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|&x| x == 0.0 || x == 1.0));
        for r in 0..3 {
            for c in 0..3 {
                assert!(a.get(0, r, c) + a.get(1, r, c) <= 1.0);
            }
        }
    }
}
