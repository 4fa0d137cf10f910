//! The archive of start-state candidates, in three structural variants:
//! unbounded (Expanding), fixed-size FIFO ring (Circular), and a fixed-size
//! uniform sample of everything ever offered (Reservoir, Algorithm R).
//!
//! Duplicates are allowed; sampling is uniform over stored slots.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameState, StateKey};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArchiveError {
    #[error("archive capacity must be at least 1 for {0} archives")]
    ZeroCapacity(ArchiveKind),
    #[error("terminal state offered to the archive (ply {ply})")]
    TerminalState { ply: u32 },
    #[error("unknown archive kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchiveKind {
    Expanding,
    Circular,
    Reservoir,
}

impl fmt::Display for ArchiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArchiveKind::Expanding => "expanding",
            ArchiveKind::Circular => "circular",
            ArchiveKind::Reservoir => "reservoir",
        })
    }
}

impl FromStr for ArchiveKind {
    type Err = ArchiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expanding" => Ok(ArchiveKind::Expanding),
            "circular" => Ok(ArchiveKind::Circular),
            "reservoir" => Ok(ArchiveKind::Reservoir),
            other => Err(ArchiveError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveStats {
    pub size: usize,
    pub n_offered: u64,
    pub unique_keys: usize,
}

#[derive(Debug, Clone)]
pub struct Archive<S> {
    kind: ArchiveKind,
    capacity: usize,
    items: Vec<S>,
    // Circular only: slot holding the oldest item once full.
    head: usize,
    // Items ever offered, counting the seed state.
    n_offered: u64,
}

pub type SharedArchive<S> = Arc<RwLock<Archive<S>>>;

impl<S: GameState> Archive<S> {
    /// A new archive holding exactly `[s0]`. `capacity` is ignored by
    /// Expanding archives. The seed counts as the first offered item.
    pub fn new(kind: ArchiveKind, capacity: usize, s0: S) -> Result<Self, ArchiveError> {
        if capacity == 0 && kind != ArchiveKind::Expanding {
            return Err(ArchiveError::ZeroCapacity(kind));
        }
        if s0.is_terminal() {
            return Err(ArchiveError::TerminalState { ply: s0.ply() });
        }
        Ok(Archive {
            kind,
            capacity,
            items: vec![s0],
            head: 0,
            n_offered: 1,
        })
    }

    pub fn shared(self) -> SharedArchive<S> {
        Arc::new(RwLock::new(self))
    }

    pub fn kind(&self) -> ArchiveKind {
        self.kind
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn size(&self) -> usize {
        self.items.len()
    }

    pub fn n_offered(&self) -> u64 {
        self.n_offered
    }

    /// Uniform over stored slots, duplicates included.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        self.items[rng.random_range(0..self.items.len())].clone()
    }

    /// Offers states in order. The whole batch is rejected, leaving the
    /// archive untouched, if any state is terminal.
    pub fn update<R: Rng + ?Sized>(&mut self, new_states: &[S], rng: &mut R) -> Result<(), ArchiveError> {
        if let Some(t) = new_states.iter().find(|s| s.is_terminal()) {
            return Err(ArchiveError::TerminalState { ply: t.ply() });
        }
        for s in new_states {
            self.offer(s.clone(), rng);
        }
        Ok(())
    }

    fn offer<R: Rng + ?Sized>(&mut self, s: S, rng: &mut R) {
        self.n_offered += 1;
        match self.kind {
            ArchiveKind::Expanding => self.items.push(s),
            ArchiveKind::Circular => {
                if self.items.len() < self.capacity {
                    self.items.push(s);
                } else {
                    self.items[self.head] = s;
                    self.head = (self.head + 1) % self.capacity;
                }
            }
            ArchiveKind::Reservoir => {
                if self.items.len() < self.capacity {
                    self.items.push(s);
                } else {
                    // n_offered already counts this item: replace with
                    // probability capacity / n_offered.
                    let i = rng.random_range(0..self.n_offered);
                    if (i as usize) < self.capacity {
                        self.items[i as usize] = s;
                    }
                }
            }
        }
    }

    /// Stored items; for Circular archives, oldest first.
    pub fn contents(&self) -> Vec<&S> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer.iter()).collect()
    }

    pub fn snapshot_stats(&self) -> ArchiveStats {
        let unique: HashSet<StateKey> = self.items.iter().map(|s| s.key()).collect();
        ArchiveStats {
            size: self.items.len(),
            n_offered: self.n_offered,
            unique_keys: unique.len(),
        }
    }

    /// State keys with their multiplicities, for offline analysis.
    pub fn dump(&self) -> BTreeMap<StateKey, usize> {
        let mut out = BTreeMap::new();
        for s in &self.items {
            *out.entry(s.key()).or_insert(0) += 1;
        }
        out
    }
}
