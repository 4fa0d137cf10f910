use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::SearchError;
use crate::game::Action;

/// Per-edge statistics `{N(s,a), W(s,a), P(s,a)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeStats {
    pub action: Action,
    pub visits: u32,
    pub total_value: f64,
    pub prior: f64,
}

impl EdgeStats {
    pub fn new(action: Action, prior: f64) -> Self {
        EdgeStats {
            action,
            visits: 0,
            total_value: 0.0,
            prior,
        }
    }

    /// Mean backed-up value, 0 before the first visit.
    pub fn q(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.total_value / self.visits as f64
        }
    }
}

pub fn puct_score(edge: &EdgeStats, parent_visits: u32, c_puct: f64) -> f64 {
    edge.q() + c_puct * edge.prior * (parent_visits as f64).sqrt() / (1.0 + edge.visits as f64)
}

pub(crate) fn puct_select_index(edges: &[EdgeStats], c_puct: f64) -> usize {
    let parent: u32 = edges.iter().map(|e| e.visits).sum();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, e) in edges.iter().enumerate() {
        let s = puct_score(e, parent, c_puct);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// `argmax_a Q + c_puct P sqrt(N(s)) / (1 + N(s,a))` with `N(s) = Σ_a N(s,a)`.
/// Edges must be in ascending action order; ties go to the lowest action.
pub fn puct_select(edges: &[EdgeStats], c_puct: f64) -> Action {
    edges[puct_select_index(edges, c_puct)].action
}

/// `(1 - ε) p + ε d`.
pub fn mix_dirichlet(priors: &[f64], noise: &[f64], epsilon: f64) -> Vec<f64> {
    priors
        .iter()
        .zip(noise)
        .map(|(p, d)| (1.0 - epsilon) * p + epsilon * d)
        .collect()
}

/// Draws from a symmetric Dirichlet(α) over `n` components.
///
/// Small α can underflow every Gamma draw to zero; the limit of such a draw is
/// a point mass, so one component chosen uniformly gets all the weight.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: f64, n: usize, rng: &mut R) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    let mut d: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = d.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        d.iter_mut().for_each(|x| *x /= sum);
    } else {
        d.iter_mut().for_each(|x| *x = 0.0);
        d[rng.random_range(0..n)] = 1.0;
    }
    d
}

/// `π(a) = N(a)^{1/τ} / Σ_b N(b)^{1/τ}`, computed relative to the largest count
/// so that small temperatures do not overflow.
pub fn visits_to_policy(visits: &[u32], temperature: f64) -> Result<Vec<f64>, SearchError> {
    if !(temperature > 0.0) {
        return Err(SearchError::BadTemperature(temperature));
    }
    let max = visits.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(SearchError::NoVisits);
    }
    let inv = 1.0 / temperature;
    let mut pi: Vec<f64> = visits
        .iter()
        .map(|&n| if n == 0 { 0.0 } else { (n as f64 / max as f64).powf(inv) })
        .collect();
    let sum: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= sum);
    Ok(pi)
}

/// Most-visited action; ties go to the lowest index.
pub fn argmax_visits(visits: &[u32]) -> Action {
    let mut best = 0;
    for (i, &n) in visits.iter().enumerate() {
        if n > visits[best] {
            best = i;
        }
    }
    Action::from(best)
}

/// Samples an action index from a probability vector over the action space.
pub fn sample_action<R: Rng + ?Sized>(policy: &[f64], rng: &mut R) -> Action {
    let total: f64 = policy.iter().sum();
    let mut r = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &p) in policy.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = i;
        if r < p {
            return Action::from(i);
        }
        r -= p;
    }
    Action::from(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
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
    fn all_unvisited_ties_to_lowest_action() {
        let edges = [edge(0, 0, 0.0, 1.0 / 3.0), edge(1, 0, 0.0, 1.0 / 3.0), edge(2, 0, 0.0, 1.0 / 3.0)];
        for c in [0.5, 1.0, 4.0] {
            assert_eq!(puct_select(&edges, c), Action(0));
        }
    }

    #[test]
    fn exploration_term_favours_unvisited_high_prior() {
        // 0.5 + 0.1 * sqrt(10) / 11 = 0.52875 versus 0.9 * sqrt(10) = 2.84605
        let edges = [edge(0, 10, 0.5, 0.1), edge(1, 0, 0.0, 0.9)];
        assert!((puct_score(&edges[0], 10, 1.0) - 0.528_747_9).abs() < 1e-6);
        assert!((puct_score(&edges[1], 10, 1.0) - 2.846_049_9).abs() < 1e-6);
        assert_eq!(puct_select(&edges, 1.0), Action(1));
    }

    #[test]
    fn dirichlet_mix_examples() {
        assert_eq!(mix_dirichlet(&[0.5, 0.5], &[1.0, 0.0], 0.25), vec![0.625, 0.375]);
        assert_eq!(mix_dirichlet(&[0.2, 0.8], &[0.9, 0.1], 0.0), vec![0.2, 0.8]);
    }

    #[test]
    fn dirichlet_mix_stays_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for alpha in [0.03, 1.0, 5.0] {
            for i in 0..10_000 {
                let n = 2 + i % 6;
                let d = sample_dirichlet(alpha, n, &mut rng);
                let p = vec![1.0 / n as f64; n];
                let m = mix_dirichlet(&p, &d, 0.25);
                assert!(m.iter().all(|x| *x >= 0.0));
                assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn visit_policy_examples() {
        assert_eq!(visits_to_policy(&[3, 1, 0], 1.0).unwrap(), vec![0.75, 0.25, 0.0]);
        let p = visits_to_policy(&[3, 1], 0.25).unwrap();
        assert!((p[0] - 81.0 / 82.0).abs() <= 1e-9 * (81.0 / 82.0));
        assert!((p[1] - 1.0 / 82.0).abs() <= 1e-9 * (1.0 / 82.0));
        for tau in [0.1, 1.0, 3.0] {
            let u = visits_to_policy(&[5, 5, 5], tau).unwrap();
            assert!(u.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
        }
        assert_eq!(visits_to_policy(&[0, 0], 1.0), Err(SearchError::NoVisits));
        assert!(visits_to_policy(&[1], 0.0).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax_visits(&[2, 5, 5, 1]), Action(1));
        assert_eq!(argmax_visits(&[0, 0]), Action(0));
    }

    proptest! {
        #[test]
        fn sampled_actions_have_positive_probability(
            weights in proptest::collection::vec(0u32..4, 1..9),
            seed in any::<u64>(),
        ) {
            prop_assume!(weights.iter().any(|w| *w > 0));
            let pi = visits_to_policy(&weights, 1.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = sample_action(&pi, &mut rng);
            prop_assert!(pi[a.index()] > 0.0);
        }
    }
}
