use serde::{Deserialize, Serialize};

use crate::game::{Action, GameState, Outcome};
use crate::model::{encode, TrainingSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    InitialState,
    Archive,
    KatagoInit,
    Branch,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::InitialState => "initial_state",
            Origin::Archive => "archive",
            Origin::KatagoInit => "katago_init",
            Origin::Branch => "branch",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep<S> {
    pub state: S,
    pub policy: Vec<f64>,
    pub action: Action,
    /// False for reduced playout-cap searches, whose policy is not a target.
    pub full_search: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub id: u64,
    pub origin: Origin,
    pub steps: Vec<TrajectoryStep<S>>,
    pub outcome: Outcome,
}

/// One line of the trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub id: u64,
    pub origin: Origin,
    pub start_ply: u32,
    pub length: usize,
    /// Outcome from player one's perspective.
    pub z: i8,
    /// `(ply, state key in hex)` for every visited state.
    pub states: Vec<(u32, String)>,
}

impl<S: GameState> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn start(&self) -> &S {
        &self.steps[0].state
    }

    pub fn final_state(&self) -> S {
        let last = self.steps.last().expect("trajectories have at least one step");
        last.state.play(last.action)
    }

    /// One training sample per step, value target seen from the player to move.
    pub fn to_samples(&self) -> Vec<TrainingSample> {
        self.steps
            .iter()
            .map(|st| TrainingSample {
                features: encode(&st.state),
                policy: st.policy.clone(),
                value: self.outcome.value_for(st.state.to_move()),
                policy_weight: if st.full_search { 1.0 } else { 0.0 },
                trajectory_id: self.id,
            })
            .collect()
    }

    /// Checks the legality chain, that every stored state is nonterminal,
    /// and that the final state is terminal with the recorded outcome.
    pub fn validate(&self) -> Result<(), String> {
        if self.steps.is_empty() {
            return Err(format!("trajectory {} is empty", self.id));
        }
        for (i, st) in self.steps.iter().enumerate() {
            if st.state.is_terminal() {
                return Err(format!("step {i} stores a terminal state"));
            }
            if !st.state.is_legal(st.action) {
                return Err(format!("step {i}: action {} is illegal", st.action));
            }
            if st.policy.len() != S::NUM_ACTIONS {
                return Err(format!("step {i}: policy has {} entries", st.policy.len()));
            }
            if let Some(next) = self.steps.get(i + 1) {
                if st.state.play(st.action) != next.state {
                    return Err(format!("step {i} does not lead to step {}", i + 1));
                }
            }
        }
        match self.final_state().outcome() {
            Some(o) if o == self.outcome => Ok(()),
            Some(o) => Err(format!("recorded outcome {:?} but the game ended {:?}", self.outcome, o)),
            None => Err("final state is not terminal".into()),
        }
    }

    pub fn record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            id: self.id,
            origin: self.origin,
            start_ply: self.start().ply(),
            length: self.len(),
            z: self.outcome.value() as i8,
            states: self.steps.iter().map(|s| (s.state.ply(), s.state.key().to_string())).collect(),
        }
    }
}
