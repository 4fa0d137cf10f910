//! Measurement: matches against the reference solver, windowed learning
//! curves and their AUC, checkpoint tournaments, unique-state histograms,
//! value-loss reports and trajectory throughput. Outputs are plain CSV.

mod agents;
mod curves;
mod matches;
mod stats;
mod tournament;

use thiserror::Error;

use crate::learner::LearnerError;
use crate::mcts::SearchError;
use crate::model::ModelError;

pub use agents::{Agent, MctsAgent, MinimaxAgent, RandomAgent, SolverAgent};
pub use curves::{
    aggregate_curves, auc, compute_auc, emit_curves, mean_ci95, AucRow, CurveRow, EmitSummary, LearningCurve,
    DEFAULT_WINDOW, EVAL_FILE,
};
pub use matches::{evaluate_agent, evaluate_checkpoint, evaluate_run, play_match, EvalSettings, LevelResult, MatchResult};
pub use stats::{
    trajectory_stats, unique_states_by_depth, unique_states_by_depth_file, value_loss, value_loss_report,
    DepthHistogram, DepthRow, TrajectoryStats, ValueLossMode, ValueLossReport,
};
pub use tournament::{tournament, tournament_runs, TournamentReport, TournamentRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}:{line}: {reason}")]
    MalformedLog { path: String, line: usize, reason: String },
    #[error("match count {0} is odd; each seat needs the same number of games")]
    OddMatchCount(usize),
    #[error("no states to measure")]
    EmptySample,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> EvalError {
    EvalError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn csv_err(path: &std::path::Path, source: csv::Error) -> EvalError {
    EvalError::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Writes serializable rows as CSV with a header.
pub fn write_csv<T: serde::Serialize>(path: &std::path::Path, rows: &[T]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes serializable rows as CSV with a header to any writer.
pub fn write_csv_to<T: serde::Serialize, W: std::io::Write>(out: W, rows: &[T]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(std::path::Path::new("<output>"), e))?;
    }
    w.flush().map_err(|e| io_err(std::path::Path::new("<output>"), e))
}

/// Reads every row of a headered CSV file.
pub fn read_csv<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<Vec<T>, EvalError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().collect::<Result<_, _>>().map_err(|e| csv_err(path, e))
}
