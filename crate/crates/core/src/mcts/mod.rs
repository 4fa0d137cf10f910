//! PUCT Monte Carlo tree search.
//!
//! A search owns its tree and runs single-threaded. Values are always from the
//! perspective of the player to move at the node they belong to, and backups
//! negate once per ply.

mod katago;
mod puct;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use katago::{policy_target_pruning, pruned_visits, sample_playout_cap};
pub use puct::{
    argmax_visits, mix_dirichlet, puct_score, puct_select, sample_action, sample_dirichlet, visits_to_policy,
    EdgeStats,
};
pub use search::{run_search, SearchResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("search requires at least one iteration")]
    ZeroIterations,
    #[error("cannot search from a terminal state")]
    TerminalRoot,
    #[error("visit counts sum to zero; no policy can be formed")]
    NoVisits,
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
}

/// Playout Cap Randomization: a full search with probability `p_full`,
/// otherwise a cheap search whose policy is not used as a training target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayoutCap {
    pub p_full: f64,
    pub full_iters: u32,
    pub small_iters: u32,
}

/// Forced root playouts with policy target pruning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcedPlayouts {
    pub k_forced: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub iterations: u32,
    pub c_puct: f64,
    pub dirichlet_alpha: f64,
    pub dirichlet_epsilon: f64,
    pub temperature: f64,
    #[serde(default)]
    pub use_root_noise: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub playout_cap: Option<PlayoutCap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_playouts: Option<ForcedPlayouts>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 100,
            c_puct: 1.0,
            dirichlet_alpha: 1.0,
            dirichlet_epsilon: 0.25,
            temperature: 1.0,
            use_root_noise: false,
            playout_cap: None,
            forced_playouts: None,
        }
    }
}

impl SearchConfig {
    /// Noise-free search for evaluation play.
    pub fn evaluation(iterations: u32, c_puct: f64) -> Self {
        SearchConfig {
            iterations,
            c_puct,
            ..SearchConfig::default()
        }
    }

    /// Checks every field against its domain; the error names the field.
    pub fn validate(&self) -> Result<(), String> {
        if self.iterations == 0 {
            return Err("search.iterations must be positive".into());
        }
        if !(self.c_puct > 0.0 && self.c_puct.is_finite()) {
            return Err(format!("search.c_puct must be positive, got {}", self.c_puct));
        }
        if !(self.dirichlet_alpha > 0.0 && self.dirichlet_alpha.is_finite()) {
            return Err(format!(
                "search.dirichlet_alpha must be positive, got {}",
                self.dirichlet_alpha
            ));
        }
        if !(0.0..1.0).contains(&self.dirichlet_epsilon) {
            return Err(format!(
                "search.dirichlet_epsilon must lie in [0, 1), got {}",
                self.dirichlet_epsilon
            ));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(format!("search.temperature must be positive, got {}", self.temperature));
        }
        if let Some(pc) = &self.playout_cap {
            if !(pc.p_full > 0.0 && pc.p_full < 1.0) {
                return Err(format!("search.playout_cap.p_full must lie in (0, 1), got {}", pc.p_full));
            }
            if pc.full_iters == 0 || pc.small_iters == 0 {
                return Err("search.playout_cap iteration counts must be positive".into());
            }
        }
        if let Some(fp) = &self.forced_playouts {
            if !(fp.k_forced >= 0.0 && fp.k_forced.is_finite()) {
                return Err(format!(
                    "search.forced_playouts.k_forced must be non-negative, got {}",
                    fp.k_forced
                ));
            }
        }
        Ok(())
    }
}
