//! Self-play reinforcement learning for small two-player games, with
//! archive-based search control for choosing where self-play trajectories start.
//!
//! The crate covers the full loop: game rules, PUCT search, a dense
//! policy-value network, replay and start-state archives, self-play actors, the
//! learner, an MCTS-Solver reference opponent, and the evaluation harness.

pub mod game;
pub mod mcts;
pub mod model;
pub mod archive;
pub mod replay;
pub mod selfplay;
pub mod learner;
pub mod opponents;
pub mod eval;
