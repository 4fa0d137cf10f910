//! UCT with random playouts and game-theoretic proving (MCTS-Solver).
//!
//! Each node keeps a pessimistic and an optimistic bound on its game value
//! for the player to move. Children are created lazily in action order. A node
//! is proven once its bounds meet: a win as soon as any child is a proven loss
//! for the child's mover, a loss once every child is a proven win for the
//! child's mover, and a draw once it can force a draw and no child can do
//! better. Bounds let draws be proven without exhausting every drawn line.

use rand::Rng;

use crate::game::{random_playout, Action, GameState};

/// Game-theoretic value for the player to move at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Proven {
    Win,
    Loss,
    Draw,
}

impl Proven {
    pub fn value(self) -> f64 {
        match self {
            Proven::Win => 1.0,
            Proven::Loss => -1.0,
            Proven::Draw => 0.0,
        }
    }

    fn from_score(v: i8) -> Proven {
        match v.signum() {
            1 => Proven::Win,
            -1 => Proven::Loss,
            _ => Proven::Draw,
        }
    }
}

struct Node<S> {
    state: S,
    actions: Vec<Action>,
    children: Vec<u32>,
    visits: u32,
    /// Sum of backed-up values for the player who moved into this node.
    total: f64,
    /// Value bounds for the player to move, each in {-1, 0, 1}.
    lo: i8,
    hi: i8,
}

impl<S: GameState> Node<S> {
    fn new(state: S) -> Self {
        let (lo, hi, actions) = match state.outcome() {
            Some(o) => {
                let v = o.value_for(state.to_move()) as i8;
                (v, v, Vec::new())
            }
            None => (-1, 1, state.legal_actions().expect("nonterminal")),
        };
        Node {
            state,
            actions,
            children: Vec::new(),
            visits: 0,
            total: 0.0,
            lo,
            hi,
        }
    }

    fn proven(&self) -> Option<Proven> {
        (self.lo == self.hi).then(|| Proven::from_score(self.lo))
    }
}

pub struct SolverTree<S> {
    nodes: Vec<Node<S>>,
    c_uct: f64,
    iterations_run: u32,
}

impl<S: GameState> SolverTree<S> {
    pub fn new(root: S, c_uct: f64) -> Self {
        assert!(!root.is_terminal(), "solver root must be nonterminal");
        SolverTree {
            nodes: vec![Node::new(root)],
            c_uct,
            iterations_run: 0,
        }
    }

    pub fn root_proven(&self) -> Option<Proven> {
        self.nodes[0].proven()
    }

    /// Current (pessimistic, optimistic) bounds on the root value.
    pub fn root_bounds(&self) -> (i8, i8) {
        (self.nodes[0].lo, self.nodes[0].hi)
    }

    pub fn iterations_run(&self) -> u32 {
        self.iterations_run
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Every nonterminal node with a proven value.
    pub fn proven_states(&self) -> impl Iterator<Item = (&S, Proven)> {
        self.nodes
            .iter()
            .filter(|n| !n.state.is_terminal())
            .filter_map(|n| n.proven().map(|p| (&n.state, p)))
    }

    /// Every nonterminal node with its current bounds.
    pub fn bounded_states(&self) -> impl Iterator<Item = (&S, i8, i8)> {
        self.nodes
            .iter()
            .filter(|n| !n.state.is_terminal())
            .map(|n| (&n.state, n.lo, n.hi))
    }

    /// Runs up to `iterations` more iterations, stopping early once the root
    /// is proven.
    pub fn search<R: Rng + ?Sized>(&mut self, iterations: u32, rng: &mut R) {
        let mut path = Vec::with_capacity(S::MAX_PLIES + 1);
        let mut buf = Vec::with_capacity(S::NUM_ACTIONS);
        for _ in 0..iterations {
            if self.nodes[0].proven().is_some() {
                break;
            }
            self.iterations_run += 1;
            path.clear();
            let mut id = 0u32;
            path.push(id);
            // value for the player to move at the last node on the path
            let leaf_value = loop {
                let node = &self.nodes[id as usize];
                if let Some(p) = node.proven() {
                    break p.value();
                }
                if node.children.len() < node.actions.len() {
                    let action = node.actions[node.children.len()];
                    let child = Node::new(node.state.play(action));
                    let new_id = self.nodes.len() as u32;
                    let value = match child.proven() {
                        Some(p) => p.value(),
                        None => random_playout(&child.state, rng, &mut buf).value_for(child.state.to_move()),
                    };
                    self.nodes.push(child);
                    self.nodes[id as usize].children.push(new_id);
                    path.push(new_id);
                    break value;
                }
                id = self.select(id);
                path.push(id);
            };
            let mut v = leaf_value;
            for &n in path.iter().rev() {
                let node = &mut self.nodes[n as usize];
                node.visits += 1;
                node.total -= v;
                v = -v;
            }
            // bounds can only change along the path, deepest first
            for &n in path.iter().rev() {
                if !self.update_bounds(n) {
                    break;
                }
            }
        }
    }

    fn select(&self, id: u32) -> u32 {
        let node = &self.nodes[id as usize];
        let ln_n = (node.visits.max(1) as f64).ln();
        let mut best = None;
        let mut best_score = f64::NEG_INFINITY;
        for &c in &node.children {
            let child = &self.nodes[c as usize];
            // skip children that cannot beat what this node already secures;
            // this covers every proven win for the child's mover
            if -child.lo <= node.lo {
                continue;
            }
            let n = child.visits.max(1) as f64;
            let score = child.total / n + self.c_uct * (ln_n / n).sqrt();
            if score > best_score {
                best_score = score;
                best = Some(c);
            }
        }
        best.expect("an unproven node has a child that can still improve it")
    }

    /// Re-derives a node's bounds from its children. Returns whether they
    /// changed.
    fn update_bounds(&mut self, id: u32) -> bool {
        let node = &self.nodes[id as usize];
        if node.actions.is_empty() {
            // terminal bounds are exact; report a change so parents refresh
            return true;
        }
        let mut lo = -1;
        let mut hi = if node.children.len() < node.actions.len() { 1 } else { -1 };
        for &c in &node.children {
            let child = &self.nodes[c as usize];
            lo = lo.max(-child.hi);
            hi = hi.max(-child.lo);
        }
        let node = &mut self.nodes[id as usize];
        let changed = (lo, hi) != (node.lo, node.hi);
        node.lo = lo;
        node.hi = hi;
        changed
    }

    /// A proving move if the root is a proven win. Otherwise the most-visited
    /// move that secures the root's pessimistic bound, then the most-visited
    /// move that is not a proven loss, then the most-visited move.
    pub fn best_action(&self) -> Action {
        let root = &self.nodes[0];
        let child = |i: usize| root.children.get(i).map(|&c| &self.nodes[c as usize]);
        let visits = |i: usize| child(i).map_or(0, |c| c.visits);
        let pick = |allowed: &dyn Fn(usize) -> bool| {
            let mut best: Option<usize> = None;
            for i in 0..root.actions.len() {
                if allowed(i) && best.is_none_or(|b| visits(i) > visits(b)) {
                    best = Some(i);
                }
            }
            best
        };
        let secures = |i: usize| child(i).is_some_and(|c| -c.hi >= root.lo);
        if root.lo == 1 {
            if let Some(i) = (0..root.children.len()).find(|&i| secures(i)) {
                return root.actions[i];
            }
        }
        let i = (if root.lo > -1 { pick(&secures) } else { None })
            .or_else(|| pick(&|i| child(i).is_none_or(|c| c.lo < 1)))
            .or_else(|| pick(&|_| true))
            .expect("root has legal actions");
        root.actions[i]
    }
}

/// Fresh-tree MCTS-Solver move choice.
pub fn solver_search<S: GameState, R: Rng + ?Sized>(root: &S, iterations: u32, c_uct: f64, rng: &mut R) -> Action {
    let legal = root.legal_actions().expect("solver root must be nonterminal");
    if legal.len() == 1 {
        return legal[0];
    }
    let mut tree = SolverTree::new(root.clone(), c_uct);
    tree.search(iterations.max(1), rng);
    tree.best_action()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ConnectFour, TicTacToe};
    use crate::opponents::Minimax;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const C: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn finds_the_winning_cell() {
        // X holds 0 and 1, O holds 3 and 4; X to move wins at 2
        let s = TicTacToe::from_moves(&[0, 3, 1, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut tree = SolverTree::new(s, C);
        tree.search(50, &mut rng);
        assert_eq!(tree.root_proven(), Some(Proven::Win));
        assert_eq!(tree.best_action(), Action(2));
        assert_eq!(solver_search(&s, 50, C, &mut rng), Action(2));
    }

    #[test]
    fn single_legal_action_is_returned() {
        let s = TicTacToe::from_moves(&[0, 1, 2, 4, 3, 5, 7, 6]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(solver_search(&s, 1, C, &mut rng), Action(8));
    }

    #[test]
    fn drawn_midgame_is_proven_a_draw() {
        let s = TicTacToe::from_moves(&[4, 0, 8, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut tree = SolverTree::new(s, C);
        tree.search(100_000, &mut rng);
        assert_eq!(Minimax::new().value(&s), 0);
        assert_eq!(tree.root_proven(), Some(Proven::Draw));
        assert!(tree.iterations_run() < 100_000);
        // the only non-losing reply blocks the top row
        assert_eq!(tree.best_action(), Action(1));
    }

    #[test]
    fn empty_board_is_a_proven_draw() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tree = SolverTree::new(TicTacToe::initial(), C);
        tree.search(100_000, &mut rng);
        assert_eq!(tree.root_proven(), Some(Proven::Draw));
    }

    #[test]
    fn blocks_an_immediate_connect_four_threat() {
        // O has three stacked in column 6; X must block
        let s = ConnectFour::from_moves(&[0, 6, 1, 6, 0, 6]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(solver_search(&s, 2000, C, &mut rng), Action(6));
    }

    #[test]
    fn proofs_agree_with_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut oracle = Minimax::new();
        let mut checked = 0;
        for _ in 0..1000 {
            let mut s = TicTacToe::initial();
            let depth = rng.random_range(0..7);
            for _ in 0..depth {
                let legal = s.legal_actions().unwrap();
                let next = s.play(legal[rng.random_range(0..legal.len())]);
                if next.is_terminal() {
                    break;
                }
                s = next;
            }
            let mut tree = SolverTree::new(s, C);
            tree.search(rng.random_range(1..400), &mut rng);
            for (state, p) in tree.proven_states() {
                assert_eq!(p.value(), oracle.value(state) as f64, "{}", state.render());
                checked += 1;
            }
            for (state, lo, hi) in tree.bounded_states() {
                let v = oracle.value(state);
                assert!(lo <= v && v <= hi, "{lo} <= {v} <= {hi}\n{}", state.render());
            }
        }
        assert!(checked > 1000, "only {checked} proofs checked");
    }
}
