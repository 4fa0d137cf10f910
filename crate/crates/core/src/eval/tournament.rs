use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::{ConnectFour, GameId, GameState, Player, TicTacToe};
use crate::learner::{RunManifest, MANIFEST_FILE};
use crate::model::Network;

use super::{play_match, EvalError, EvalSettings, MctsAgent};

/// Mean score of one side-A checkpoint against every side-B checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentRow {
    pub algo_a: String,
    pub algo_b: String,
    pub step: u64,
    pub win_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentReport {
    pub rows: Vec<TournamentRow>,
    pub games: usize,
    /// Mean score of side A over all games.
    pub win_rate: f64,
}

/// Every A checkpoint plays every B checkpoint once in each seat.
pub fn tournament<S: GameState>(
    a: &[(u64, Network)],
    b: &[(u64, Network)],
    names: (&str, &str),
    settings: &EvalSettings,
) -> Result<TournamentReport, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut rows = Vec::with_capacity(a.len());
    let mut games = 0;
    let mut total = 0.0;
    for (step, net_a) in a {
        let mut agent_a = MctsAgent::new(net_a, settings.iterations, settings.c_puct);
        let mut score = 0.0;
        for (_, net_b) in b {
            let mut agent_b = MctsAgent::new(net_b, settings.iterations, settings.c_puct);
            for seat in [Player::One, Player::Two] {
                score += play_match::<S>(&mut agent_a, &mut agent_b, seat, &mut rng)?.score_a;
                games += 1;
            }
        }
        total += score;
        rows.push(TournamentRow {
            algo_a: names.0.to_string(),
            algo_b: names.1.to_string(),
            step: *step,
            win_rate: if b.is_empty() { f64::NAN } else { score / (2 * b.len()) as f64 },
        });
    }
    Ok(TournamentReport {
        rows,
        games,
        win_rate: if games == 0 { f64::NAN } else { total / games as f64 },
    })
}

fn load_run(dir: &Path) -> Result<(RunManifest, Vec<(u64, Network)>), EvalError> {
    let manifest = RunManifest::load(&dir.join(MANIFEST_FILE))?;
    let nets = manifest
        .checkpoints
        .iter()
        .map(|c| Ok((c.step, Network::load(dir.join(&c.path))?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok((manifest, nets))
}

/// Tournament between the checkpoints of two training runs, searching with
/// run A's settings.
pub fn tournament_runs(dir_a: &Path, dir_b: &Path, seed: u64) -> Result<TournamentReport, EvalError> {
    let (ma, a) = load_run(dir_a)?;
    let (mb, b) = load_run(dir_b)?;
    if ma.config.game != mb.config.game {
        return Err(EvalError::Invalid(format!(
            "runs play different games: {} vs {}",
            ma.config.game, mb.config.game
        )));
    }
    let settings = EvalSettings::from_run(&ma.config, seed);
    let names = (ma.config.variant.as_str(), mb.config.variant.as_str());
    match ma.config.game {
        GameId::ConnectFour => tournament::<ConnectFour>(&a, &b, names, &settings),
        GameId::TicTacToe => tournament::<TicTacToe>(&a, &b, names, &settings),
    }
}
