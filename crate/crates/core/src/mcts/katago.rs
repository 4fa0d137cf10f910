//! Playout Cap Randomization and forced-playout policy target pruning.

use rand::Rng;

use super::puct::{puct_score, visits_to_policy, EdgeStats};
use super::{PlayoutCap, SearchError};

/// Iteration budget for one move: `full_iters` with probability `p_full`.
/// Returns the budget and whether it is a full search.
pub fn sample_playout_cap<R: Rng + ?Sized>(cap: &PlayoutCap, rng: &mut R) -> (u32, bool) {
    if rng.random::<f64>() < cap.p_full {
        (cap.full_iters, true)
    } else {
        (cap.small_iters, false)
    }
}

/// Minimum visits a root edge must receive before PUCT takes over:
/// `sqrt(k * P(s,a) * N(s))`. An edge with `N(s,a)` below this is forced;
/// for integer counts `N < ceil(x)` and `N < x` agree.
pub(crate) fn forced_threshold(k_forced: f64, prior: f64, parent_visits: u32) -> f64 {
    (k_forced * prior * parent_visits as f64).sqrt()
}

/// Root visit counts with unjustified forced visits removed.
///
/// For every edge other than the most-visited one, up to
/// `ceil(sqrt(k P N))` visits are subtracted as long as the edge's PUCT score
/// at the reduced count stays strictly below the most-visited edge's score.
pub fn pruned_visits(edges: &[EdgeStats], c_puct: f64, k_forced: f64) -> Vec<u32> {
    let mut out: Vec<u32> = edges.iter().map(|e| e.visits).collect();
    if edges.len() <= 1 || k_forced <= 0.0 {
        return out;
    }
    let total: u32 = out.iter().sum();
    let mut best = 0;
    for (i, e) in edges.iter().enumerate() {
        if e.visits > edges[best].visits {
            best = i;
        }
    }
    let best_score = puct_score(&edges[best], total, c_puct);
    for (i, e) in edges.iter().enumerate() {
        if i == best || e.visits == 0 {
            continue;
        }
        let forced = forced_threshold(k_forced, e.prior, total).ceil() as u32;
        let max_cut = forced.min(e.visits);
        let q = e.q();
        let mut remaining = e.visits;
        for _ in 0..max_cut {
            let reduced = remaining - 1;
            let score = q + c_puct * e.prior * (total as f64).sqrt() / (1.0 + reduced as f64);
            if score >= best_score {
                break;
            }
            remaining = reduced;
        }
        out[i] = remaining;
    }
    out
}

/// Pruned policy target over the full action space.
pub fn policy_target_pruning(
    edges: &[EdgeStats],
    c_puct: f64,
    k_forced: f64,
    temperature: f64,
    num_actions: usize,
) -> Result<Vec<f64>, SearchError> {
    let pruned = pruned_visits(edges, c_puct, k_forced);
    let mut full = vec![0u32; num_actions];
    for (e, n) in edges.iter().zip(pruned) {
        full[e.action.index()] = n;
    }
    visits_to_policy(&full, temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Action;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn edge(a: u16, n: u32, q: f64, p: f64) -> EdgeStats {
        EdgeStats {
            action: Action(a),
            visits: n,
            total_value: q * n as f64,
            prior: p,
        }
    }

    #[test]
    fn playout_cap_extremes_and_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let always = PlayoutCap { p_full: 1.0, full_iters: 100, small_iters: 20 };
        let never = PlayoutCap { p_full: 0.0, ..always };
        for _ in 0..1000 {
            assert_eq!(sample_playout_cap(&always, &mut rng), (100, true));
            assert_eq!(sample_playout_cap(&never, &mut rng), (20, false));
        }
        let quarter = PlayoutCap { p_full: 0.25, ..always };
        let full = (0..100_000).filter(|_| sample_playout_cap(&quarter, &mut rng).1).count();
        assert!((full as f64 / 1e5 - 0.25).abs() < 0.01);
    }

    #[test]
    fn zero_k_is_identity() {
        let edges = [edge(0, 7, 0.1, 0.5), edge(2, 3, -0.4, 0.5)];
        let t = policy_target_pruning(&edges, 1.0, 0.0, 1.0, 3).unwrap();
        assert_eq!(t, vec![0.7, 0.0, 0.3]);
    }

    #[test]
    fn single_action_target_is_one() {
        let edges = [edge(4, 12, 0.3, 1.0)];
        let t = policy_target_pruning(&edges, 1.0, 2.0, 1.0, 7).unwrap();
        assert_eq!(t[4], 1.0);
        assert_eq!(t.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn dominated_forced_edge_is_pruned() {
        // N = 100, k = 2. Edge 1 has prior 0.02, threshold sqrt(2*0.02*100) = 2,
        // so its 2 visits could all be forced. Best edge: Q=0.5, P=0.98, n=98:
        //   score* = 0.5 + 0.98 * 10 / 99 = 0.598990
        // Edge 1 at Q=-0.8: reduced to 1 -> -0.8 + 0.02*10/2 = -0.7
        //                   reduced to 0 -> -0.8 + 0.02*10/1 = -0.6
        // both < score*, so both visits are removed and the target is [1, 0].
        let edges = [edge(0, 98, 0.5, 0.98), edge(1, 2, -0.8, 0.02)];
        assert_eq!(pruned_visits(&edges, 1.0, 2.0), vec![98, 0]);
        let t = policy_target_pruning(&edges, 1.0, 2.0, 1.0, 2).unwrap();
        assert_eq!(t, vec![1.0, 0.0]);
    }

    #[test]
    fn justified_visits_are_kept() {
        // Edge 1 has a high Q: removing even one visit lifts its score above
        // the best edge's, so nothing is pruned.
        // score* = 0.1 + 0.5 * 10 / 61 = 0.181967; edge1 at 39: 0.6 + 0.5*10/40 = 0.725
        let edges = [edge(0, 60, 0.1, 0.5), edge(1, 40, 0.6, 0.5)];
        assert_eq!(pruned_visits(&edges, 1.0, 2.0), vec![60, 40]);
    }
}
