use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::{ConnectFour, GameId, GameState, TicTacToe};
use crate::learner::{RunConfig, METRICS_FILE};
use crate::mcts::{argmax_visits, run_search, sample_action, SearchConfig};
use crate::model::{Evaluator, Network};
use crate::selfplay::TrajectoryRecord;

use super::{io_err, read_csv, EvalError};

/// Unique nonterminal states visited, indexed by depth (ply).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DepthHistogram {
    pub counts: Vec<usize>,
}

impl DepthHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<DepthRow> {
        self.counts
            .iter()
            .enumerate()
            .map(|(depth, &unique_states)| DepthRow { depth, unique_states })
            .collect()
    }

    /// Unique states strictly deeper than `depth`.
    pub fn beyond(&self, depth: usize) -> usize {
        self.counts.iter().skip(depth + 1).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub depth: usize,
    pub unique_states: usize,
}

/// Counts distinct state keys per ply across every trajectory in a
/// `trajectories.jsonl` log.
pub fn unique_states_by_depth<R: BufRead>(reader: R, origin: &str) -> Result<DepthHistogram, EvalError> {
    let mut seen: Vec<HashSet<String>> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(Path::new(origin), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajectoryRecord = serde_json::from_str(&line).map_err(|e| EvalError::MalformedLog {
            path: origin.to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        for (ply, key) in rec.states {
            let ply = ply as usize;
            if seen.len() <= ply {
                seen.resize_with(ply + 1, HashSet::new);
            }
            seen[ply].insert(key);
        }
    }
    Ok(DepthHistogram {
        counts: seen.iter().map(|s| s.len()).collect(),
    })
}

pub fn unique_states_by_depth_file(path: &Path) -> Result<DepthHistogram, EvalError> {
    let f = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    unique_states_by_depth(std::io::BufReader::new(f), &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub steps: u64,
    pub trajectories: u64,
    pub samples: u64,
    pub trajectories_per_step: f64,
    pub mean_trajectory_length: f64,
}

#[derive(Deserialize)]
struct MetricsRow {
    #[allow(dead_code)]
    step: u64,
    samples: u64,
    trajectories: u64,
}

/// Trajectory throughput from a run's `metrics.csv` (or the run directory).
pub fn trajectory_stats(path: &Path) -> Result<TrajectoryStats, EvalError> {
    let path = if path.is_dir() { path.join(METRICS_FILE) } else { path.to_path_buf() };
    let rows: Vec<MetricsRow> = read_csv(&path)?;
    if rows.is_empty() {
        return Err(EvalError::EmptySample);
    }
    let steps = rows.len() as u64;
    let trajectories: u64 = rows.iter().map(|r| r.trajectories).sum();
    let samples: u64 = rows.iter().map(|r| r.samples).sum();
    Ok(TrajectoryStats {
        steps,
        trajectories,
        samples,
        trajectories_per_step: trajectories as f64 / steps as f64,
        mean_trajectory_length: samples as f64 / trajectories.max(1) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueLossMode {
    /// States the games actually visited, scored against the game's outcome.
    Visited,
    /// States expanded inside those games' searches, scored against a
    /// noise-free argmax continuation from each of them.
    Search,
}

impl fmt::Display for ValueLossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueLossMode::Visited => "visited",
            ValueLossMode::Search => "search",
        })
    }
}

impl FromStr for ValueLossMode {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "visited" => Ok(ValueLossMode::Visited),
            "search" => Ok(ValueLossMode::Search),
            other => Err(EvalError::Invalid(format!("unknown value-loss mode {other:?} (visited|search)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueLossReport {
    pub algorithm: String,
    pub step: u64,
    pub mode: ValueLossMode,
    pub mse: f64,
    pub n_states: usize,
}

/// Mean squared error between the evaluator's value and realized outcomes.
///
/// `n_games` games are played from the initial state with `selfplay` search,
/// sampling from the visit distribution for the first `k` moves. In search
/// mode at most `max_search_states` distinct search states are scored, each
/// by playing it out with `continuation` search and argmax moves for both
/// sides.
#[allow(clippy::too_many_arguments)]
pub fn value_loss<S, E, R>(
    eval: &E,
    mode: ValueLossMode,
    n_games: usize,
    selfplay: &SearchConfig,
    k: u32,
    continuation: &SearchConfig,
    max_search_states: usize,
    rng: &mut R,
) -> Result<(f64, usize), EvalError>
where
    S: GameState,
    E: Evaluator<S> + ?Sized,
    R: Rng + ?Sized,
{
    if n_games == 0 {
        return Err(EvalError::EmptySample);
    }
    let mut buf = vec![0.0; S::NUM_ACTIONS];
    let mut sq = 0.0;
    let mut n = 0usize;
    let mut search_states = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..n_games {
        let mut s = S::initial();
        let mut visited = Vec::new();
        let mut t = 0;
        let outcome = loop {
            if let Some(o) = s.outcome() {
                break o;
            }
            let res = run_search(&s, eval, selfplay, rng)?;
            let a = if t < k { sample_action(&res.policy, rng) } else { argmax_visits(&res.root_visits) };
            if mode == ValueLossMode::Search {
                for st in res.search_states {
                    if seen.insert(st.key()) {
                        search_states.push(st);
                    }
                }
            }
            let next = s.play(a);
            visited.push(s);
            s = next;
            t += 1;
        };
        if mode == ValueLossMode::Visited {
            for st in &visited {
                let v = eval.evaluate(st, &mut buf);
                sq += (v - outcome.value_for(st.to_move())).powi(2);
                n += 1;
            }
        }
    }
    if mode == ValueLossMode::Search {
        if search_states.len() > max_search_states {
            let picked = rand::seq::index::sample(rng, search_states.len(), max_search_states);
            let mut keep: Vec<usize> = picked.into_vec();
            keep.sort_unstable();
            search_states = keep.into_iter().map(|i| search_states[i].clone()).collect();
        }
        for st in &search_states {
            let v = eval.evaluate(st, &mut buf);
            let mut c = st.clone();
            let outcome = loop {
                if let Some(o) = c.outcome() {
                    break o;
                }
                let res = run_search(&c, eval, continuation, rng)?;
                c = c.play(res.best_action());
            };
            sq += (v - outcome.value_for(st.to_move())).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        return Err(EvalError::EmptySample);
    }
    Ok((sq / n as f64, n))
}

/// Value loss of a saved checkpoint using the run's own search settings.
pub fn value_loss_report(
    checkpoint: &Path,
    cfg: &RunConfig,
    mode: ValueLossMode,
    n_games: usize,
    max_search_states: usize,
    seed: u64,
) -> Result<ValueLossReport, EvalError> {
    let net = Network::load(checkpoint)?;
    let mut selfplay = cfg.search.clone();
    // every move gets the full budget and a full policy target here
    selfplay.playout_cap = None;
    selfplay.forced_playouts = None;
    let continuation = SearchConfig::evaluation(cfg.search.iterations, cfg.search.c_puct);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = cfg.selfplay.k;
    let (mse, n_states) = match net.game() {
        GameId::ConnectFour => value_loss::<ConnectFour, _, _>(
            &net, mode, n_games, &selfplay, k, &continuation, max_search_states, &mut rng,
        )?,
        GameId::TicTacToe => value_loss::<TicTacToe, _, _>(
            &net, mode, n_games, &selfplay, k, &continuation, max_search_states, &mut rng,
        )?,
    };
    Ok(ValueLossReport {
        algorithm: cfg.variant.as_str().to_string(),
        step: net.step(),
        mode,
        mse,
        n_states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opponents::Minimax;
    use crate::selfplay::{Origin, Trajectory, TrajectoryStep};
    use std::cell::RefCell;

    fn record(moves: &[usize]) -> String {
        let mut s = TicTacToe::initial();
        let mut steps = Vec::new();
        for &m in moves {
            let a = crate::game::Action::from(m);
            steps.push(TrajectoryStep {
                state: s,
                policy: vec![0.0; 9],
                action: a,
                full_search: true,
            });
            s = s.play(a);
        }
        let t = Trajectory {
            id: 0,
            origin: Origin::InitialState,
            steps,
            outcome: s.outcome().unwrap_or(crate::game::Outcome::DRAW),
        };
        serde_json::to_string(&t.record()).unwrap()
    }

    #[test]
    fn one_trajectory_counts_one_state_per_depth() {
        let line = record(&[0, 3, 1, 4, 2]);
        let h = unique_states_by_depth(line.as_bytes(), "mem").unwrap();
        assert_eq!(h.counts, vec![1; 5]);
        let twice = format!("{line}\n{line}\n");
        assert_eq!(unique_states_by_depth(twice.as_bytes(), "mem").unwrap(), h);
    }

    #[test]
    fn histogram_total_is_distinct_states() {
        let text = [record(&[0, 3, 1, 4, 2]), record(&[0, 3, 2, 4, 5, 6]), record(&[4, 0, 8])].join("\n");
        let h = unique_states_by_depth(text.as_bytes(), "mem").unwrap();
        // s0 is shared, the third line diverges at depth 1, the first two at depth 3
        assert_eq!(h.counts, vec![1, 2, 2, 2, 2, 1]);
        let mut keys = HashSet::new();
        for line in text.lines() {
            let r: TrajectoryRecord = serde_json::from_str(line).unwrap();
            keys.extend(r.states.into_iter().map(|(_, k)| k));
        }
        assert_eq!(h.total(), keys.len());
        assert_eq!(h.beyond(3), 3);
    }

    #[test]
    fn malformed_lines_are_reported_with_position() {
        let text = format!("{}\nnot json\n", record(&[0]));
        let err = unique_states_by_depth(text.as_bytes(), "log.jsonl").unwrap_err();
        assert!(matches!(err, EvalError::MalformedLog { line: 2, .. }), "{err}");
    }

    /// Exact game values with uniform priors.
    struct Oracle(RefCell<Minimax>);

    impl Evaluator<TicTacToe> for Oracle {
        fn evaluate(&self, state: &TicTacToe, priors: &mut [f64]) -> f64 {
            priors.iter_mut().for_each(|p| *p = 1.0 / 9.0);
            self.0.borrow_mut().value(state) as f64
        }
    }

    #[test]
    fn perfect_values_under_noise_free_play_have_zero_visited_loss() {
        let oracle = Oracle(RefCell::new(Minimax::new()));
        let cfg = SearchConfig::evaluation(200, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (mse, n) =
            value_loss::<TicTacToe, _, _>(&oracle, ValueLossMode::Visited, 3, &cfg, 0, &cfg, 10, &mut rng).unwrap();
        assert_eq!(mse, 0.0);
        assert_eq!(n, 27);
    }

    #[test]
    fn search_mode_scores_capped_distinct_states() {
        let oracle = Oracle(RefCell::new(Minimax::new()));
        let cfg = SearchConfig::evaluation(30, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mse, n) =
            value_loss::<TicTacToe, _, _>(&oracle, ValueLossMode::Search, 2, &cfg, 0, &cfg, 25, &mut rng).unwrap();
        assert_eq!(n, 25);
        assert!(mse.is_finite() && mse >= 0.0);
    }

    #[test]
    fn zero_games_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = SearchConfig::evaluation(5, 1.0);
        let r = value_loss::<TicTacToe, _, _>(
            &crate::model::UniformEvaluator,
            ValueLossMode::Visited,
            0,
            &cfg,
            0,
            &cfg,
            10,
            &mut rng,
        );
        assert!(matches!(r, Err(EvalError::EmptySample)));
    }

    #[test]
    fn metrics_throughput() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        std::fs::write(
            &path,
            format!("{}\n1,1,0.5,0.5,20,4,0,0\n2,1,0.5,0.5,22,2,0,0\n", crate::learner::METRICS_HEADER),
        )
        .unwrap();
        let st = trajectory_stats(dir.path()).unwrap();
        assert_eq!(st.steps, 2);
        assert_eq!(st.trajectories, 6);
        assert_eq!(st.trajectories_per_step, 3.0);
        assert!((st.mean_trajectory_length - 7.0).abs() < 1e-12);
    }
}
