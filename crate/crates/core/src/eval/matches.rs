use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::{Action, ConnectFour, GameId, GameState, Outcome, Player, TicTacToe};
use crate::learner::{RunConfig, RunManifest, MANIFEST_FILE};
use crate::model::Network;
use crate::opponents::ReferenceOpponent;

use super::{Agent, EvalError, MctsAgent, SolverAgent};

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Seat taken by agent A.
    pub a_seat: Player,
    pub outcome: Outcome,
    /// 1, 0.5 or 0 from agent A's side.
    pub score_a: f64,
    pub moves: Vec<Action>,
}

impl MatchResult {
    pub fn score_player_one(&self) -> f64 {
        self.outcome.score_for(Player::One)
    }
}

/// Plays one full game from the initial state with A in `a_seat`.
pub fn play_match<S: GameState>(
    a: &mut dyn Agent<S>,
    b: &mut dyn Agent<S>,
    a_seat: Player,
    rng: &mut dyn RngCore,
) -> Result<MatchResult, EvalError> {
    let mut s = S::initial();
    let mut moves = Vec::new();
    let outcome = loop {
        if let Some(o) = s.outcome() {
            break o;
        }
        let agent: &mut dyn Agent<S> = if s.to_move() == a_seat { &mut *a } else { &mut *b };
        let action = agent.select_action(&s, rng)?;
        s = s.apply(action).map_err(|e| EvalError::Invalid(format!("agent chose an illegal move: {e}")))?;
        moves.push(action);
    };
    Ok(MatchResult {
        a_seat,
        outcome,
        score_a: outcome.score_for(a_seat),
        moves,
    })
}

/// How the learning agent searches during evaluation and how large the
/// solver's unit budget is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub iterations: u32,
    pub c_puct: f64,
    /// Solver iterations at level 1.
    pub base_iterations: u32,
    pub seed: u64,
}

impl EvalSettings {
    /// The learning agent's own search budget, which is also the solver's
    /// unit budget.
    pub fn from_run(cfg: &RunConfig, seed: u64) -> Self {
        EvalSettings {
            iterations: cfg.search.iterations,
            c_puct: cfg.search.c_puct,
            base_iterations: cfg.search.iterations,
            seed,
        }
    }
}

/// Aggregate of one checkpoint against one solver level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub step: u64,
    pub level: u32,
    pub matches: usize,
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub win_rate: f64,
}

impl LevelResult {
    pub fn score_sum(&self) -> f64 {
        self.wins as f64 + 0.5 * self.draws as f64
    }
}

fn match_rng(seed: u64, step: u64, level: u32, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((step << 40) ^ ((level as u64) << 20) ^ index as u64);
    rng
}

/// Plays `n_matches` per level, half in each seat.
pub fn evaluate_agent<S: GameState>(
    agent: &mut dyn Agent<S>,
    step: u64,
    levels: &[u32],
    n_matches: usize,
    settings: &EvalSettings,
) -> Result<Vec<LevelResult>, EvalError> {
    if n_matches % 2 == 1 {
        return Err(EvalError::OddMatchCount(n_matches));
    }
    if n_matches == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        let mut solver = SolverAgent(ReferenceOpponent::new(level, settings.base_iterations));
        let (mut wins, mut draws, mut losses) = (0, 0, 0);
        for i in 0..n_matches {
            let seat = if i % 2 == 0 { Player::One } else { Player::Two };
            let mut rng = match_rng(settings.seed, step, level, i);
            let r = play_match(agent, &mut solver, seat, &mut rng)?;
            match r.score_a {
                1.0 => wins += 1,
                0.0 => losses += 1,
                _ => draws += 1,
            }
        }
        let r = LevelResult {
            step,
            level,
            matches: n_matches,
            wins,
            draws,
            losses,
            win_rate: 0.0,
        };
        out.push(LevelResult {
            win_rate: r.score_sum() / n_matches as f64,
            ..r
        });
        log::info!("step {step} level {level}: {wins}W {draws}D {losses}L");
    }
    Ok(out)
}

/// Evaluates a saved network against each solver level.
pub fn evaluate_checkpoint(
    path: &Path,
    levels: &[u32],
    n_matches: usize,
    settings: &EvalSettings,
) -> Result<Vec<LevelResult>, EvalError> {
    let net = Network::load(path)?;
    let step = net.step();
    let game = net.game();
    let mut agent = MctsAgent::new(net, settings.iterations, settings.c_puct);
    match game {
        GameId::ConnectFour => evaluate_agent::<ConnectFour>(&mut agent, step, levels, n_matches, settings),
        GameId::TicTacToe => evaluate_agent::<TicTacToe>(&mut agent, step, levels, n_matches, settings),
    }
}

/// Evaluates the checkpoints of a training run whose step is a multiple of
/// `stride` (plus the final one), with settings taken from the run manifest.
pub fn evaluate_run(
    run_dir: &Path,
    levels: &[u32],
    n_matches: usize,
    stride: u64,
    seed: u64,
) -> Result<Vec<LevelResult>, EvalError> {
    let manifest = RunManifest::load(&run_dir.join(MANIFEST_FILE))?;
    let settings = EvalSettings::from_run(&manifest.config, seed);
    let last = manifest.final_checkpoint().map(|c| c.step);
    let mut rows = Vec::new();
    for c in &manifest.checkpoints {
        if stride > 0 && c.step % stride != 0 && Some(c.step) != last {
            continue;
        }
        rows.extend(evaluate_checkpoint(&run_dir.join(&c.path), levels, n_matches, &settings)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{MinimaxAgent, RandomAgent};
    use crate::model::{NetShape, UniformEvaluator};

    #[test]
    fn minimax_draws_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for seat in [Player::One, Player::Two] {
            let r = play_match::<TicTacToe>(&mut MinimaxAgent::default(), &mut MinimaxAgent::default(), seat, &mut rng)
                .unwrap();
            assert_eq!(r.score_a, 0.5);
            assert_eq!(r.outcome, Outcome::DRAW);
            assert_eq!(r.moves.len(), 9);
        }
    }

    #[test]
    fn scores_follow_the_seat() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut scores = Vec::new();
        for i in 0..40 {
            let seat = if i % 2 == 0 { Player::One } else { Player::Two };
            let r = play_match::<TicTacToe>(&mut MinimaxAgent::default(), &mut RandomAgent, seat, &mut rng).unwrap();
            assert_eq!(r.score_a, r.outcome.score_for(seat));
            assert_eq!(r.a_seat, seat);
            assert!([0.0, 0.5, 1.0].contains(&r.score_a));
            scores.push(r.score_a);
        }
        // minimax never loses
        assert!(scores.iter().all(|&s| s >= 0.5));
    }

    #[test]
    fn deterministic_agents_replay_exactly() {
        let settings = EvalSettings {
            iterations: 20,
            c_puct: 1.0,
            base_iterations: 20,
            seed: 3,
        };
        let run = || {
            let mut a = MctsAgent::new(UniformEvaluator, 20, 1.0);
            evaluate_agent::<TicTacToe>(&mut a, 0, &[1, 2], 4, &settings).unwrap()
        };
        let first = run();
        assert_eq!(first, run());
        assert_eq!(first.len(), 2);
        for r in &first {
            assert_eq!(r.matches, 4);
            assert_eq!(r.wins + r.draws + r.losses, 4);
            assert_eq!(r.win_rate, r.score_sum() / 4.0);
        }
    }

    #[test]
    fn zero_matches_is_an_empty_report_and_odd_counts_are_refused() {
        let settings = EvalSettings {
            iterations: 5,
            c_puct: 1.0,
            base_iterations: 5,
            seed: 0,
        };
        let mut a = MctsAgent::new(UniformEvaluator, 5, 1.0);
        assert!(evaluate_agent::<TicTacToe>(&mut a, 0, &[1], 0, &settings).unwrap().is_empty());
        assert!(matches!(
            evaluate_agent::<TicTacToe>(&mut a, 0, &[1], 3, &settings),
            Err(EvalError::OddMatchCount(3))
        ));
    }

    #[test]
    fn untrained_network_loses_to_a_strong_solver() {
        let dir = tempfile::tempdir().unwrap();
        let shape = NetShape::for_game::<ConnectFour>(16, 1);
        let net = Network::new(GameId::ConnectFour, shape, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let path = dir.path().join("random.ckpt");
        net.save(&path).unwrap();
        let settings = EvalSettings {
            iterations: 20,
            c_puct: 1.0,
            base_iterations: 20,
            seed: 5,
        };
        let rows = evaluate_checkpoint(&path, &[50], 20, &settings).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].win_rate < 0.5, "{:?}", rows[0]);
    }
}
