use std::collections::HashSet;

use rand::Rng;

use super::katago::{forced_threshold, policy_target_pruning};
use super::puct::{argmax_visits, mix_dirichlet, puct_select_index, sample_dirichlet, visits_to_policy, EdgeStats};
use super::{SearchConfig, SearchError};
use crate::game::{Action, GameState, StateKey};
use crate::model::Evaluator;

const NO_CHILD: u32 = u32::MAX;

struct Node<S> {
    state: S,
    edges: Vec<EdgeStats>,
    children: Vec<u32>,
    /// Exact value for the player to move, set on terminal nodes.
    terminal: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SearchResult<S> {
    /// π over the full action space; zero on illegal actions.
    pub policy: Vec<f64>,
    /// Root N(s, a) over the full action space.
    pub root_visits: Vec<u32>,
    /// Q of the most-visited root action, for the player to move at the root.
    pub root_value: f64,
    /// Nonterminal states expanded during the search, root excluded, each once.
    pub search_states: Vec<S>,
    /// Root edges after the search (priors include root noise if applied).
    pub root_edges: Vec<EdgeStats>,
}

impl<S> SearchResult<S> {
    pub fn best_action(&self) -> Action {
        argmax_visits(&self.root_visits)
    }
}

fn expand<S: GameState, E: Evaluator<S> + ?Sized>(state: &S, eval: &E, buf: &mut [f64], legal: &mut Vec<Action>) -> (Vec<EdgeStats>, f64) {
    let value = eval.evaluate(state, buf);
    legal.clear();
    state.legal_actions_into(legal);
    let mass: f64 = legal.iter().map(|a| buf[a.index()].max(0.0)).sum();
    let uniform = 1.0 / legal.len() as f64;
    let edges = legal
        .iter()
        .map(|&a| {
            let p = if mass > 0.0 { buf[a.index()].max(0.0) / mass } else { uniform };
            EdgeStats::new(a, p)
        })
        .collect();
    (edges, value.clamp(-1.0, 1.0))
}

/// Runs `cfg.iterations` PUCT simulations from `root`.
///
/// The root is expanded before the first simulation and that expansion is not
/// counted, so the root edge visits sum to exactly `cfg.iterations`.
pub fn run_search<S, E, R>(root: &S, eval: &E, cfg: &SearchConfig, rng: &mut R) -> Result<SearchResult<S>, SearchError>
where
    S: GameState,
    E: Evaluator<S> + ?Sized,
    R: Rng + ?Sized,
{
    if cfg.iterations == 0 {
        return Err(SearchError::ZeroIterations);
    }
    if root.is_terminal() {
        return Err(SearchError::TerminalRoot);
    }
    let mut buf = vec![0.0; S::NUM_ACTIONS];
    let mut legal = Vec::with_capacity(S::NUM_ACTIONS);

    let (mut root_edges, _) = expand(root, eval, &mut buf, &mut legal);
    if cfg.use_root_noise && root_edges.len() > 1 && cfg.dirichlet_epsilon > 0.0 {
        let priors: Vec<f64> = root_edges.iter().map(|e| e.prior).collect();
        let noise = sample_dirichlet(cfg.dirichlet_alpha, priors.len(), rng);
        for (e, p) in root_edges.iter_mut().zip(mix_dirichlet(&priors, &noise, cfg.dirichlet_epsilon)) {
            e.prior = p;
        }
    }
    let n_root = root_edges.len();
    let mut tree = vec![Node {
        state: root.clone(),
        edges: root_edges,
        children: vec![NO_CHILD; n_root],
        terminal: None,
    }];

    let forced_k = cfg.forced_playouts.map(|f| f.k_forced).filter(|k| *k > 0.0);
    let mut seen: HashSet<StateKey> = HashSet::new();
    let mut search_states = Vec::new();
    let mut path: Vec<(u32, usize)> = Vec::with_capacity(S::MAX_PLIES + 1);

    for _ in 0..cfg.iterations {
        path.clear();
        let mut node = 0u32;
        let leaf_value = loop {
            let n = &tree[node as usize];
            let idx = match (node, forced_k) {
                (0, Some(k)) => select_root_forced(&n.edges, cfg.c_puct, k),
                _ => puct_select_index(&n.edges, cfg.c_puct),
            };
            path.push((node, idx));
            let child = n.children[idx];
            if child == NO_CHILD {
                let next = n.state.play(n.edges[idx].action);
                let new_id = tree.len() as u32;
                let value = match next.outcome() {
                    Some(o) => {
                        let v = o.value_for(next.to_move());
                        tree.push(Node {
                            state: next,
                            edges: Vec::new(),
                            children: Vec::new(),
                            terminal: Some(v),
                        });
                        v
                    }
                    None => {
                        let (edges, v) = expand(&next, eval, &mut buf, &mut legal);
                        if seen.insert(next.key()) {
                            search_states.push(next.clone());
                        }
                        let k = edges.len();
                        tree.push(Node {
                            state: next,
                            edges,
                            children: vec![NO_CHILD; k],
                            terminal: None,
                        });
                        v
                    }
                };
                tree[node as usize].children[idx] = new_id;
                break value;
            }
            if let Some(v) = tree[child as usize].terminal {
                break v;
            }
            node = child;
        };

        // leaf_value is for the player to move at the leaf; flip once per ply
        let mut value = leaf_value;
        for &(n, idx) in path.iter().rev() {
            value = -value;
            let e = &mut tree[n as usize].edges[idx];
            e.visits += 1;
            e.total_value += value;
        }
    }

    let root_edges = std::mem::take(&mut tree[0].edges);
    let mut root_visits = vec![0u32; S::NUM_ACTIONS];
    for e in &root_edges {
        root_visits[e.action.index()] = e.visits;
    }
    let policy = match forced_k {
        Some(k) => policy_target_pruning(&root_edges, cfg.c_puct, k, cfg.temperature, S::NUM_ACTIONS)?,
        None => visits_to_policy(&root_visits, cfg.temperature)?,
    };
    let best = argmax_visits(&root_visits);
    let root_value = root_edges
        .iter()
        .find(|e| e.action == best)
        .map(|e| e.q())
        .unwrap_or(0.0);
    Ok(SearchResult {
        policy,
        root_visits,
        root_value,
        search_states,
        root_edges,
    })
}

fn select_root_forced(edges: &[EdgeStats], c_puct: f64, k: f64) -> usize {
    let parent: u32 = edges.iter().map(|e| e.visits).sum();
    edges
        .iter()
        .position(|e| (e.visits as f64) < forced_threshold(k, e.prior, parent))
        .unwrap_or_else(|| puct_select_index(edges, c_puct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ConnectFour, TicTacToe};
    use crate::mcts::ForcedPlayouts;
    use crate::model::UniformEvaluator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(iterations: u32) -> SearchConfig {
        SearchConfig {
            iterations,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn errors_on_zero_iterations_and_terminal_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = TicTacToe::initial();
        assert_eq!(
            run_search(&s, &UniformEvaluator, &cfg(0), &mut rng).unwrap_err(),
            SearchError::ZeroIterations
        );
        let done = TicTacToe::from_moves(&[0, 3, 1, 4, 2]).unwrap();
        assert_eq!(
            run_search(&done, &UniformEvaluator, &cfg(10), &mut rng).unwrap_err(),
            SearchError::TerminalRoot
        );
    }

    #[test]
    fn root_visits_sum_to_iterations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for it in [1, 2, 7, 50, 333] {
            let r = run_search(&ConnectFour::initial(), &UniformEvaluator, &cfg(it), &mut rng).unwrap();
            assert_eq!(r.root_visits.iter().sum::<u32>(), it);
            assert!((r.policy.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn takes_immediate_win() {
        // X: 0,1 ; O: 3,4 ; X to move, cell 2 wins
        let s = TicTacToe::from_moves(&[0, 3, 1, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = run_search(&s, &UniformEvaluator, &cfg(200), &mut rng).unwrap();
        assert_eq!(r.best_action(), Action(2));
        assert!(r.search_states.iter().all(|s| !s.is_terminal()));
    }

    #[test]
    fn forced_playouts_visit_every_root_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = cfg(400);
        c.forced_playouts = Some(ForcedPlayouts { k_forced: 2.0 });
        let r = run_search(&ConnectFour::initial(), &UniformEvaluator, &c, &mut rng).unwrap();
        // threshold sqrt(2 * 1/7 * 400) ≈ 10.7
        assert!(r.root_visits.iter().all(|n| *n >= 10));
        assert_eq!(r.root_visits.iter().sum::<u32>(), 400);
        assert!((r.policy.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn search_is_deterministic_without_noise() {
        let s = ConnectFour::from_moves(&[3, 3, 2]).unwrap();
        let a = run_search(&s, &UniformEvaluator, &cfg(300), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = run_search(&s, &UniformEvaluator, &cfg(300), &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a.root_visits, b.root_visits);
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.root_value, b.root_value);
        assert_eq!(a.search_states, b.search_states);
    }
}
