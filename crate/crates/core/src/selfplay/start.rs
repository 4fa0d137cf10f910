use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::{Branching, KatagoInit, Origin, Trajectory};
use crate::archive::SharedArchive;
use crate::game::{Action, GameState};
use crate::mcts::sample_action;
use crate::model::Evaluator;

/// Where an actor's trajectories may start.
#[derive(Debug, Clone)]
pub struct StartContext<S> {
    pub archive: Option<SharedArchive<S>>,
    pub lambda: f64,
    pub katago_init: Option<KatagoInit>,
    pub branching: Option<Branching>,
}

impl<S> StartContext<S> {
    /// Every trajectory starts at the initial state.
    pub fn initial_only() -> Self {
        StartContext {
            archive: None,
            lambda: 1.0,
            katago_init: None,
            branching: None,
        }
    }
}

/// `s0` with probability `lambda`, otherwise a uniform archive sample. The
/// flag reports whether the archive was consulted.
pub fn select_start_state<S: GameState, R: Rng + ?Sized>(
    archive: &SharedArchive<S>,
    lambda: f64,
    rng: &mut R,
) -> (S, bool) {
    if rng.random::<f64>() < lambda {
        return (S::initial(), false);
    }
    let a = archive.read().unwrap_or_else(|e| e.into_inner());
    (a.sample(rng), true)
}

/// Network prior restricted to legal actions and renormalized; uniform over
/// legal actions if the prior puts no mass there. Returns the value estimate.
pub fn masked_priors<S: GameState, E: Evaluator<S> + ?Sized>(state: &S, eval: &E, priors: &mut [f64]) -> f64 {
    let v = eval.evaluate(state, priors);
    let mut mass = 0.0;
    for (i, p) in priors.iter_mut().enumerate() {
        if state.is_legal(Action::from(i)) {
            *p = p.max(0.0);
            mass += *p;
        } else {
            *p = 0.0;
        }
    }
    if mass > 0.0 {
        priors.iter_mut().for_each(|p| *p /= mass);
    } else {
        for (i, p) in priors.iter_mut().enumerate() {
            *p = if state.is_legal(Action::from(i)) { 1.0 } else { 0.0 };
        }
    }
    v
}

/// Plays a random number of opening moves sampled from the masked prior, with
/// no search. Restarts from `s0` if the sampled line ends the game.
pub fn katago_init_start<S, E, R>(init: &KatagoInit, eval: &E, rng: &mut R) -> S
where
    S: GameState,
    E: Evaluator<S> + ?Sized,
    R: Rng + ?Sized,
{
    let m = rng.random_range(init.min_moves..=init.max_moves);
    let mut priors = vec![0.0; S::NUM_ACTIONS];
    let mut deepest = S::initial();
    for _ in 0..INIT_RESTARTS {
        let mut s = S::initial();
        let mut ended = false;
        for _ in 0..m {
            masked_priors(&s, eval, &mut priors);
            let next = s.play(sample_action(&priors, rng));
            if next.is_terminal() {
                ended = true;
                break;
            }
            s = next;
        }
        if !ended {
            return s;
        }
        if s.ply() > deepest.ply() {
            deepest = s;
        }
    }
    // `m` may be unreachable without ending the game (e.g. a full board)
    deepest
}

const INIT_RESTARTS: usize = 256;

// A branch that keeps producing terminal successors is abandoned after this
// many redraws and the actor falls back to its normal start distribution.
const BRANCH_REDRAWS: usize = 16;

/// Branches off `source`. Mode A (probability `p_alt`) plays a random
/// alternative to the action taken at a random step; mode B (probability
/// `p_value`) samples a few actions at a step inside the window and keeps the
/// successor the network likes best for the branching player. Returns `None`
/// when neither mode fires or no nonterminal branch is found.
pub fn katago_branch<S, E, R>(source: &Trajectory<S>, cfg: &Branching, eval: &E, rng: &mut R) -> Option<S>
where
    S: GameState,
    E: Evaluator<S> + ?Sized,
    R: Rng + ?Sized,
{
    if source.is_empty() {
        return None;
    }
    let r = rng.random::<f64>();
    if r < cfg.p_alt {
        branch_alternative(source, rng)
    } else if r < cfg.p_alt + cfg.p_value {
        branch_by_value(source, cfg, eval, rng)
    } else {
        None
    }
}

fn branch_alternative<S: GameState, R: Rng + ?Sized>(source: &Trajectory<S>, rng: &mut R) -> Option<S> {
    let mut legal = Vec::with_capacity(S::NUM_ACTIONS);
    for _ in 0..BRANCH_REDRAWS {
        let step = &source.steps[rng.random_range(0..source.len())];
        legal.clear();
        step.state.legal_actions_into(&mut legal);
        legal.retain(|a| *a != step.action);
        if legal.is_empty() {
            continue;
        }
        let next = step.state.play(legal[rng.random_range(0..legal.len())]);
        if !next.is_terminal() {
            return Some(next);
        }
    }
    None
}

fn branch_by_value<S, E, R>(source: &Trajectory<S>, cfg: &Branching, eval: &E, rng: &mut R) -> Option<S>
where
    S: GameState,
    E: Evaluator<S> + ?Sized,
    R: Rng + ?Sized,
{
    let window = (cfg.window as usize).min(source.len());
    let mut legal = Vec::with_capacity(S::NUM_ACTIONS);
    let mut scratch = vec![0.0; S::NUM_ACTIONS];
    for _ in 0..BRANCH_REDRAWS {
        let state = &source.steps[rng.random_range(0..window)].state;
        legal.clear();
        state.legal_actions_into(&mut legal);
        let n = (cfg.n_sampled_actions as usize).min(legal.len());
        let mut best: Option<(f64, S)> = None;
        for i in sample_indices(rng, legal.len(), n) {
            let next = state.play(legal[i]);
            if next.is_terminal() {
                continue;
            }
            // the value head scores the successor for the opponent
            let v = -eval.evaluate(&next, &mut scratch);
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, next));
            }
        }
        if let Some((_, s)) = best {
            return Some(s);
        }
    }
    None
}

/// Picks a start state and its origin for the next trajectory.
pub(crate) fn choose_start<S, E, R>(
    ctx: &StartContext<S>,
    eval: &E,
    last: Option<&Trajectory<S>>,
    rng: &mut R,
) -> (S, Origin)
where
    S: GameState,
    E: Evaluator<S> + ?Sized,
    R: Rng + ?Sized,
{
    if let (Some(cfg), Some(src)) = (&ctx.branching, last) {
        if let Some(s) = katago_branch(src, cfg, eval, rng) {
            return (s, Origin::Branch);
        }
    }
    if let Some(archive) = &ctx.archive {
        let (s, from_archive) = select_start_state(archive, ctx.lambda, rng);
        if from_archive {
            return (s, Origin::Archive);
        }
    }
    match &ctx.katago_init {
        Some(init) => (katago_init_start(init, eval, rng), Origin::KatagoInit),
        None => (S::initial(), Origin::InitialState),
    }
}
