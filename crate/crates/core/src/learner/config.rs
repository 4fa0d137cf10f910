//! Run configuration: variant presets, TOML loading with overrides, and
//! validation that names the offending field.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::archive::ArchiveKind;
use crate::game::GameId;
use crate::mcts::{ForcedPlayouts, PlayoutCap, SearchConfig};
use crate::selfplay::{Backpressure, Branching, KatagoInit, SelfplayConfig};

use super::LearnerError;

/// Training algorithm. The Go-Exploit variants fix the archive structure and
/// which states feed it; the KataGo variants switch on individual
/// search-control features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    AlphaZero,
    Geve,
    Gevc,
    Gesr,
    Gesc,
    Akti,
    Akb,
    Aktib,
    Gesckb,
    Gesckpcr,
    Gesckfp,
    Gesc3k,
}

impl Variant {
    pub const ALL: [Variant; 12] = [
        Variant::AlphaZero,
        Variant::Geve,
        Variant::Gevc,
        Variant::Gesr,
        Variant::Gesc,
        Variant::Akti,
        Variant::Akb,
        Variant::Aktib,
        Variant::Gesckb,
        Variant::Gesckpcr,
        Variant::Gesckfp,
        Variant::Gesc3k,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::AlphaZero => "alphazero",
            Variant::Geve => "geve",
            Variant::Gevc => "gevc",
            Variant::Gesr => "gesr",
            Variant::Gesc => "gesc",
            Variant::Akti => "akti",
            Variant::Akb => "akb",
            Variant::Aktib => "aktib",
            Variant::Gesckb => "gesckb",
            Variant::Gesckpcr => "gesckpcr",
            Variant::Gesckfp => "gesckfp",
            Variant::Gesc3k => "gesc3k",
        }
    }

    /// The archive structure, or `None` when trajectories always start at s0.
    pub fn archive_kind(self) -> Option<ArchiveKind> {
        match self {
            Variant::Geve => Some(ArchiveKind::Expanding),
            Variant::Gevc => Some(ArchiveKind::Circular),
            Variant::Gesr => Some(ArchiveKind::Reservoir),
            Variant::Gesc | Variant::Gesckb | Variant::Gesckpcr | Variant::Gesckfp | Variant::Gesc3k => {
                Some(ArchiveKind::Circular)
            }
            Variant::AlphaZero | Variant::Akti | Variant::Akb | Variant::Aktib => None,
        }
    }

    /// Archive fed by archive actors' search states (true) or by the
    /// learner with visited states (false). Meaningless without an archive.
    pub fn use_search_states(self) -> bool {
        matches!(
            self,
            Variant::Gesr | Variant::Gesc | Variant::Gesckb | Variant::Gesckpcr | Variant::Gesckfp | Variant::Gesc3k
        )
    }

    pub fn learner_writes_archive(self) -> bool {
        self.archive_kind().is_some() && !self.use_search_states()
    }

    pub fn katago_init(self) -> bool {
        matches!(self, Variant::Akti | Variant::Aktib)
    }

    pub fn branching(self) -> bool {
        matches!(self, Variant::Akb | Variant::Aktib | Variant::Gesckb | Variant::Gesc3k)
    }

    pub fn playout_cap(self) -> bool {
        matches!(self, Variant::Gesckpcr | Variant::Gesc3k)
    }

    pub fn forced_playouts(self) -> bool {
        matches!(self, Variant::Gesckfp | Variant::Gesc3k)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == lower)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayConfig {
    /// |B|
    pub capacity: usize,
    /// New samples ingested per learning step.
    pub b_step: usize,
    /// Mini-batches per learning step.
    pub batch_count: usize,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub lr: f64,
    /// L2 coefficient c.
    pub weight_decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveConfig {
    /// |A|; ignored by expanding archives.
    pub capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub game: GameId,
    pub variant: Variant,
    pub total_steps: u64,
    pub seed: u64,
    pub checkpoint_interval: u64,
    /// Single-threaded round-robin actor schedule; reproducible bit for bit.
    pub deterministic: bool,
    pub training_actors: usize,
    pub archive_actors: usize,
    pub queue_capacity: usize,
    pub backpressure: Backpressure,
    pub starvation_timeout_secs: f64,
    pub log_trajectories: bool,
    pub replay: ReplayConfig,
    pub model: ModelConfig,
    pub search: SearchConfig,
    pub selfplay: SelfplayConfig,
    pub archive: ArchiveConfig,
}

impl RunConfig {
    /// Defaults for `game` with the best known per-variant values. The
    /// KataGo variants take the values of the algorithm they extend.
    pub fn preset(game: GameId, variant: Variant) -> Self {
        let base = match variant {
            Variant::AlphaZero | Variant::Akti | Variant::Akb | Variant::Aktib => Variant::AlphaZero,
            Variant::Gesckb | Variant::Gesckpcr | Variant::Gesckfp | Variant::Gesc3k => Variant::Gesc,
            v => v,
        };
        let (epsilon, k, lambda, archive_capacity) = match base {
            Variant::Geve => (0.25, 5, 0.1, 0),
            Variant::Gevc => (0.1, 10, 0.1, 1_000_000),
            Variant::Gesr => (0.25, 2, 0.0, 1_000_000),
            Variant::Gesc => (0.25, 10, 0.01, 100_000),
            _ => (0.25, 10, 1.0, 0),
        };
        let (iterations, total_steps, replay, width, opening) = match game {
            GameId::ConnectFour => (
                100,
                600,
                ReplayConfig {
                    capacity: 1 << 17,
                    b_step: 1 << 12,
                    batch_count: 8,
                    batch_size: 1 << 9,
                },
                128,
                6,
            ),
            GameId::TicTacToe => (
                50,
                100,
                ReplayConfig {
                    capacity: 1 << 13,
                    b_step: 256,
                    batch_count: 8,
                    batch_size: 128,
                },
                64,
                2,
            ),
        };
        let k = match game {
            GameId::ConnectFour => k,
            // nine plies at most: sample fewer opening moves
            GameId::TicTacToe => k.min(3),
        };
        let search = SearchConfig {
            iterations,
            c_puct: 1.0,
            dirichlet_alpha: 1.0,
            dirichlet_epsilon: epsilon,
            temperature: 1.0,
            use_root_noise: true,
            playout_cap: variant.playout_cap().then_some(PlayoutCap {
                p_full: 0.25,
                full_iters: iterations,
                small_iters: (iterations / 5).max(1),
            }),
            forced_playouts: variant.forced_playouts().then_some(ForcedPlayouts { k_forced: 2.0 }),
        };
        RunConfig {
            game,
            variant,
            total_steps,
            seed: 0,
            checkpoint_interval: 25,
            deterministic: false,
            training_actors: 8,
            archive_actors: usize::from(variant.use_search_states()),
            queue_capacity: 64,
            backpressure: Backpressure::Block,
            starvation_timeout_secs: 600.0,
            log_trajectories: true,
            replay,
            model: ModelConfig {
                hidden_width: width,
                hidden_layers: 2,
                lr: 1e-3,
                weight_decay: 1e-5,
            },
            search,
            selfplay: SelfplayConfig {
                lambda,
                k,
                katago_init: variant.katago_init().then_some(KatagoInit {
                    min_moves: 0,
                    max_moves: opening,
                }),
                branching: variant.branching().then(Branching::default),
            },
            archive: ArchiveConfig {
                capacity: archive_capacity,
            },
        }
    }

    /// Parses TOML text layered over the preset named by its `game` and
    /// `variant` keys, then applies `key.path=value` overrides. Accepts a run
    /// manifest as well, in which case its `[config]` table is used.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, LearnerError> {
        let mut doc: Table = text.parse().map_err(|e| LearnerError::Config(format!("{e}")))?;
        if let Some(Value::Table(inner)) = doc.get("config") {
            if doc.contains_key("summary") {
                doc = inner.clone();
            }
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let game = match doc.get("game") {
            Some(Value::String(s)) => s.parse::<GameId>().map_err(|e| LearnerError::Config(format!("game: {e}")))?,
            Some(other) => return Err(LearnerError::Config(format!("game must be a string, got {other}"))),
            None => GameId::ConnectFour,
        };
        let variant = match doc.get("variant") {
            Some(Value::String(s)) => s.parse::<Variant>().map_err(|e| LearnerError::Config(format!("variant: {e}")))?,
            Some(other) => return Err(LearnerError::Config(format!("variant must be a string, got {other}"))),
            None => Variant::AlphaZero,
        };
        let preset = Table::try_from(RunConfig::preset(game, variant))
            .map_err(|e| LearnerError::Config(format!("serializing preset: {e}")))?;
        let merged = merge(preset, doc);
        let cfg: RunConfig = Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| LearnerError::Config(e.message().to_string()))?;
        cfg.validate().map_err(LearnerError::Config)?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, LearnerError> {
        let text = std::fs::read_to_string(path).map_err(|source| LearnerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, overrides).map_err(|e| match e {
            LearnerError::Config(msg) => LearnerError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Checks every field against its domain and that the variant's features
    /// are exactly the ones configured.
    pub fn validate(&self) -> Result<(), String> {
        let v = self.variant;
        if self.total_steps == 0 {
            return Err("total_steps must be positive".into());
        }
        if self.checkpoint_interval == 0 {
            return Err("checkpoint_interval must be positive".into());
        }
        if self.training_actors == 0 {
            return Err("training_actors must be at least 1".into());
        }
        if self.queue_capacity == 0 {
            return Err("queue_capacity must be positive".into());
        }
        if !(self.starvation_timeout_secs > 0.0 && self.starvation_timeout_secs.is_finite()) {
            return Err(format!(
                "starvation_timeout_secs must be positive, got {}",
                self.starvation_timeout_secs
            ));
        }
        let r = &self.replay;
        for (name, n) in [
            ("replay.capacity", r.capacity),
            ("replay.b_step", r.b_step),
            ("replay.batch_count", r.batch_count),
            ("replay.batch_size", r.batch_size),
        ] {
            if n == 0 {
                return Err(format!("{name} must be positive"));
            }
        }
        let m = &self.model;
        if m.hidden_width == 0 {
            return Err("model.hidden_width must be positive".into());
        }
        if !(m.lr > 0.0 && m.lr.is_finite()) {
            return Err(format!("model.lr must be positive, got {}", m.lr));
        }
        if !(m.weight_decay >= 0.0 && m.weight_decay.is_finite()) {
            return Err(format!("model.weight_decay must be non-negative, got {}", m.weight_decay));
        }
        self.search.validate()?;
        self.selfplay.validate()?;

        if v.use_search_states() && self.archive_actors == 0 {
            return Err(format!("archive_actors must be at least 1 for variant {v}"));
        }
        if !v.use_search_states() && self.archive_actors > 0 {
            return Err(format!(
                "archive_actors must be 0 for variant {v}: only search-state variants run archive actors"
            ));
        }
        if let Some(kind) = v.archive_kind() {
            if kind != ArchiveKind::Expanding && self.archive.capacity == 0 {
                return Err(format!("archive.capacity must be positive for variant {v}"));
            }
        }
        let features = [
            ("selfplay.katago_init", self.selfplay.katago_init.is_some(), v.katago_init()),
            ("selfplay.branching", self.selfplay.branching.is_some(), v.branching()),
            ("search.playout_cap", self.search.playout_cap.is_some(), v.playout_cap()),
            ("search.forced_playouts", self.search.forced_playouts.is_some(), v.forced_playouts()),
        ];
        for (name, present, wanted) in features {
            if present && !wanted {
                return Err(format!("{name} is not part of variant {v}"));
            }
            if wanted && !present {
                return Err(format!("{name} is required by variant {v}"));
            }
        }
        Ok(())
    }
}

fn merge(mut base: Table, over: Table) -> Table {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => {
                let merged = merge(std::mem::take(b), o);
                *b = merged;
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

/// `a.b.c=value`; the value is read as a TOML literal, or as a bare string
/// if it does not parse as one.
fn apply_override(doc: &mut Table, spec: &str) -> Result<(), LearnerError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| LearnerError::Config(format!("override `{spec}` is not key=value")))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(LearnerError::Config(format!("override key `{path}` is malformed")));
    }
    let mut table = doc;
    for k in &keys[..keys.len() - 1] {
        let entry = table.entry(k.to_string()).or_insert_with(|| Value::Table(Table::new()));
        table = match entry {
            Value::Table(t) => t,
            _ => return Err(LearnerError::Config(format!("override `{path}`: `{k}` is not a table"))),
        };
    }
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_for_every_variant_and_game() {
        for game in [GameId::ConnectFour, GameId::TicTacToe] {
            for v in Variant::ALL {
                let cfg = RunConfig::preset(game, v);
                cfg.validate().unwrap_or_else(|e| panic!("{game} {v}: {e}"));
                let back = RunConfig::from_toml_str(&cfg.to_toml(), &[]).unwrap();
                assert_eq!(back, cfg);
            }
        }
    }

    #[test]
    fn connect_four_best_values() {
        let gesc = RunConfig::preset(GameId::ConnectFour, Variant::Gesc);
        assert_eq!(gesc.selfplay.lambda, 0.01);
        assert_eq!(gesc.selfplay.k, 10);
        assert_eq!(gesc.archive.capacity, 100_000);
        assert_eq!(gesc.model.lr, 1e-3);
        assert_eq!(gesc.model.weight_decay, 1e-5);
        assert_eq!(gesc.search.dirichlet_epsilon, 0.25);
        let gevc = RunConfig::preset(GameId::ConnectFour, Variant::Gevc);
        assert_eq!(gevc.search.dirichlet_epsilon, 0.1);
        let gesr = RunConfig::preset(GameId::ConnectFour, Variant::Gesr);
        assert_eq!((gesr.selfplay.lambda, gesr.selfplay.k), (0.0, 2));
        assert_eq!(RunConfig::preset(GameId::ConnectFour, Variant::Geve).selfplay.k, 5);
        let az = RunConfig::preset(GameId::ConnectFour, Variant::AlphaZero);
        assert_eq!(az.archive_actors, 0);
        assert_eq!(az.search.iterations, 100);
        assert_eq!(az.replay.b_step, 4096);
        assert_eq!((az.replay.batch_count, az.replay.batch_size), (8, 512));
    }

    #[test]
    fn file_values_override_the_preset() {
        let text = r#"
            game = "tictactoe"
            variant = "gesc"
            seed = 7
            [search]
            iterations = 20
            [archive]
            capacity = 50
        "#;
        let cfg = RunConfig::from_toml_str(text, &["selfplay.k=4".into(), "model.lr=0.01".into()]).unwrap();
        assert_eq!(cfg.game, GameId::TicTacToe);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.search.iterations, 20);
        assert_eq!(cfg.search.c_puct, 1.0);
        assert_eq!(cfg.archive.capacity, 50);
        assert_eq!(cfg.selfplay.k, 4);
        assert_eq!(cfg.model.lr, 0.01);
    }

    #[test]
    fn errors_name_the_field() {
        let err = |text: &str, o: &[&str]| {
            let o: Vec<String> = o.iter().map(|s| s.to_string()).collect();
            match RunConfig::from_toml_str(text, &o) {
                Err(LearnerError::Config(m)) => m,
                other => panic!("expected a config error, got {other:?}"),
            }
        };
        assert!(err("", &["search.dirichlet_epsilon=1.5"]).contains("search.dirichlet_epsilon"));
        assert!(err("variant = \"gevc\"\narchive_actors = 2", &[]).contains("archive_actors"));
        assert!(err("variant = \"gesc\"\narchive_actors = 0", &[]).contains("archive_actors"));
        assert!(err("", &["selfplay.lambda=2"]).contains("selfplay.lambda"));
        assert!(err("bogus = 1", &[]).contains("bogus"));
        assert!(err("variant = \"nope\"", &[]).contains("variant"));
        assert!(err("[selfplay.branching]\np_alt = 0.1\np_value = 0.1\nwindow = 3\nn_sampled_actions = 2", &[])
            .contains("selfplay.branching"));
        assert!(err("", &["search.forced_playouts.k_forced=2"]).contains("search.forced_playouts"));
        assert!(err("", &["replay.b_step=0"]).contains("replay.b_step"));
    }

    #[test]
    fn variant_gating_tables() {
        for v in Variant::ALL {
            if v.use_search_states() {
                assert!(v.archive_kind().is_some());
                assert!(!v.learner_writes_archive());
            }
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!(Variant::Geve.learner_writes_archive());
        assert!(!Variant::AlphaZero.learner_writes_archive());
        assert_eq!(Variant::Gesr.archive_kind(), Some(ArchiveKind::Reservoir));
    }
}
