use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::start::choose_start;
use super::{Origin, SelfplayError, StartContext, Trajectory, TrajectoryQueue, TrajectoryStep};
use crate::archive::SharedArchive;
use crate::game::{Action, GameState};
use crate::mcts::{run_search, sample_action, sample_playout_cap, SearchConfig, SearchResult};
use crate::model::Evaluator;

/// Latest-wins parameter snapshot shared between the learner and actors.
pub struct ParamsHandle<E>(Arc<RwLock<Arc<E>>>);

impl<E> Clone for ParamsHandle<E> {
    fn clone(&self) -> Self {
        ParamsHandle(Arc::clone(&self.0))
    }
}

impl<E> ParamsHandle<E> {
    pub fn new(initial: E) -> Self {
        ParamsHandle(Arc::new(RwLock::new(Arc::new(initial))))
    }

    pub fn publish(&self, params: E) {
        *self.0.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(params);
    }

    pub fn latest(&self) -> Arc<E> {
        Arc::clone(&self.0.read().unwrap_or_else(|e| e.into_inner()))
    }
}

/// Per-move search settings, with playout-cap randomization resolved.
struct MoveSearch {
    full: SearchConfig,
    small: Option<(SearchConfig, f64)>,
}

impl MoveSearch {
    fn new(cfg: &SearchConfig) -> Self {
        let mut full = cfg.clone();
        full.playout_cap = None;
        let small = cfg.playout_cap.map(|cap| {
            full.iterations = cap.full_iters;
            // cheap searches only feed the value target: no exploration aids
            let small = SearchConfig {
                iterations: cap.small_iters,
                use_root_noise: false,
                forced_playouts: None,
                playout_cap: None,
                ..cfg.clone()
            };
            (small, cap.p_full)
        });
        MoveSearch { full, small }
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> (&SearchConfig, bool) {
        match &self.small {
            None => (&self.full, true),
            Some((small, p_full)) => {
                let cap = crate::mcts::PlayoutCap {
                    p_full: *p_full,
                    full_iters: self.full.iterations,
                    small_iters: small.iterations,
                };
                if sample_playout_cap(&cap, rng).1 {
                    (&self.full, true)
                } else {
                    (small, false)
                }
            }
        }
    }
}

fn play_move<S, E, R>(
    state: &S,
    t: u32,
    k: u32,
    eval: &E,
    search: &MoveSearch,
    rng: &mut R,
) -> Result<(SearchResult<S>, Action, bool), SelfplayError>
where
    S: GameState,
    E: Evaluator<S> + ?Sized,
    R: Rng + ?Sized,
{
    let (cfg, full) = search.pick(rng);
    let res = run_search(state, eval, cfg, rng)?;
    let action = if t < k { sample_action(&res.policy, rng) } else { res.best_action() };
    Ok((res, action, full))
}

/// Plays one self-play trajectory from `start` to the end of the game.
///
/// The first `k` moves of the trajectory are sampled from the search policy,
/// later moves take the most-visited action.
pub fn generate_trajectory<S, E, R>(
    start: S,
    origin: Origin,
    id: u64,
    eval: &E,
    search: &SearchConfig,
    k: u32,
    rng: &mut R,
) -> Result<Trajectory<S>, SelfplayError>
where
    S: GameState,
    E: Evaluator<S> + ?Sized,
    R: Rng + ?Sized,
{
    if start.is_terminal() {
        return Err(SelfplayError::TerminalStart);
    }
    let search = MoveSearch::new(search);
    let mut s = start;
    let mut steps = Vec::new();
    let mut t = 0;
    let outcome = loop {
        if let Some(o) = s.outcome() {
            break o;
        }
        let (res, action, full) = play_move(&s, t, k, eval, &search, rng)?;
        let next = s.play(action);
        steps.push(TrajectoryStep {
            state: s,
            policy: res.policy,
            action,
            full_search: full,
        });
        s = next;
        t += 1;
    };
    Ok(Trajectory {
        id,
        origin,
        steps,
        outcome,
    })
}

/// Produces training trajectories.
pub struct TrainingActor<S, E> {
    start: StartContext<S>,
    search: SearchConfig,
    k: u32,
    params: ParamsHandle<E>,
    ids: Arc<AtomicU64>,
    rng: ChaCha8Rng,
    last: Option<Trajectory<S>>,
}

impl<S, E> TrainingActor<S, E>
where
    S: GameState,
    E: Evaluator<S>,
{
    pub fn new(
        start: StartContext<S>,
        search: SearchConfig,
        k: u32,
        params: ParamsHandle<E>,
        ids: Arc<AtomicU64>,
        rng: ChaCha8Rng,
    ) -> Self {
        TrainingActor {
            start,
            search,
            k,
            params,
            ids,
            rng,
            last: None,
        }
    }

    /// Fetches the latest parameters, picks a start state and plays it out.
    pub fn next_trajectory(&mut self) -> Result<Trajectory<S>, SelfplayError> {
        let eval = self.params.latest();
        let (s, origin) = choose_start(&self.start, &*eval, self.last.as_ref(), &mut self.rng);
        let id = self.ids.fetch_add(1, Ordering::Relaxed);
        let t = generate_trajectory(s, origin, id, &*eval, &self.search, self.k, &mut self.rng)?;
        if self.start.branching.is_some() {
            self.last = Some(t.clone());
        }
        Ok(t)
    }

    /// Generates until `stop` is set or the queue closes. Returns the number of
    /// trajectories delivered.
    pub fn run(mut self, queue: &TrajectoryQueue<Trajectory<S>>, stop: &AtomicBool) -> Result<u64, SelfplayError> {
        let mut delivered = 0;
        while !stop.load(Ordering::Relaxed) {
            let t = self.next_trajectory()?;
            if queue.push(t).is_err() {
                break;
            }
            delivered += 1;
        }
        Ok(delivered)
    }
}

/// Plays full games from the initial state and offers every state expanded
/// by their searches to the archive, once per finished game. Produces no
/// training data.
pub struct ArchiveActor<S, E> {
    archive: SharedArchive<S>,
    search: SearchConfig,
    k: u32,
    params: ParamsHandle<E>,
    rng: ChaCha8Rng,
    updates: Arc<AtomicU64>,
}

impl<S, E> ArchiveActor<S, E>
where
    S: GameState,
    E: Evaluator<S>,
{
    /// `updates` is incremented once per archive write.
    pub fn new(
        archive: SharedArchive<S>,
        search: SearchConfig,
        k: u32,
        params: ParamsHandle<E>,
        rng: ChaCha8Rng,
        updates: Arc<AtomicU64>,
    ) -> Self {
        ArchiveActor {
            archive,
            search,
            k,
            params,
            rng,
            updates,
        }
    }

    /// One complete game. Returns the number of states offered.
    pub fn play_match(&mut self) -> Result<usize, SelfplayError> {
        let eval = self.params.latest();
        let search = MoveSearch::new(&self.search);
        let mut temp = Vec::new();
        let mut s = S::initial();
        let mut t = 0;
        while !s.is_terminal() {
            let (res, action, _) = play_move(&s, t, self.k, &*eval, &search, &mut self.rng)?;
            temp.extend(res.search_states);
            s = s.play(action);
            t += 1;
        }
        self.archive
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .update(&temp, &mut self.rng)?;
        self.updates.fetch_add(1, Ordering::Relaxed);
        Ok(temp.len())
    }

    pub fn run(mut self, stop: &AtomicBool) -> Result<u64, SelfplayError> {
        let mut matches = 0;
        while !stop.load(Ordering::Relaxed) {
            self.play_match()?;
            matches += 1;
        }
        Ok(matches)
    }
}
