//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "SCTLCKPT"
//! version  u32
//! game     u8
//! input, hidden_width, hidden_layers, actions   u32 x 4
//! step, updates, param_count                    u64 x 3
//! params   f64 x param_count
//! checksum u64      FNV-1a over every preceding byte
//! ```

use std::path::Path;

use super::{ModelError, NetShape, Network};
use crate::game::GameId;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"SCTLCKPT";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

impl Network {
    pub fn to_bytes(&self) -> Vec<u8> {
        let shape = self.shape();
        let mut out = Vec::with_capacity(64 + 8 * self.params().len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(self.game().code());
        for d in [shape.input, shape.hidden_width, shape.hidden_layers, shape.actions] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.step().to_le_bytes());
        out.extend_from_slice(&self.updates().to_le_bytes());
        out.extend_from_slice(&(self.params().len() as u64).to_le_bytes());
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        let sum = fnv1a(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Network, ModelError> {
        let corrupt = |reason: &str| ModelError::Corrupt {
            path: origin.to_string(),
            reason: reason.to_string(),
        };
        if bytes.len() < 8 {
            return Err(corrupt("file too short"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(8) != Some(&MAGIC[..]) {
            return Err(corrupt("bad magic"));
        }
        let version = r.u32().ok_or_else(|| corrupt("truncated header"))?;
        if version != CHECKPOINT_VERSION {
            return Err(corrupt(&format!(
                "format version {version}, this build reads {CHECKPOINT_VERSION}"
            )));
        }
        if u64::from_le_bytes(tail.try_into().unwrap()) != fnv1a(body) {
            return Err(corrupt("checksum mismatch"));
        }
        let game = r
            .take(1)
            .and_then(|b| GameId::from_code(b[0]))
            .ok_or_else(|| corrupt("unknown game code"))?;
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = r.u32().ok_or_else(|| corrupt("truncated header"))? as usize;
        }
        let shape = NetShape {
            input: dims[0],
            hidden_width: dims[1],
            hidden_layers: dims[2],
            actions: dims[3],
        };
        let step = r.u64().ok_or_else(|| corrupt("truncated header"))?;
        let updates = r.u64().ok_or_else(|| corrupt("truncated header"))?;
        let count = r.u64().ok_or_else(|| corrupt("truncated header"))? as usize;
        if count != shape.param_count() || r.buf.len() - r.pos != 8 * count {
            return Err(corrupt("parameter count does not match architecture"));
        }
        let params = (0..count)
            .map(|_| f64::from_le_bytes(r.take(8).unwrap().try_into().unwrap()))
            .collect();
        Network::from_parts(game, shape, params, step, updates)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network, ModelError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Network::from_bytes(&bytes, &path.display().to_string())
    }

    /// Loads a checkpoint and refuses it unless it matches `game` and, when
    /// given, the expected architecture.
    pub fn load_checked(
        path: impl AsRef<Path>,
        game: GameId,
        shape: Option<NetShape>,
    ) -> Result<Network, ModelError> {
        let path = path.as_ref();
        let net = Network::load(path)?;
        if net.game() != game {
            return Err(ModelError::WrongGame {
                path: path.display().to_string(),
                found: net.game(),
                expected: game,
            });
        }
        if let Some(expected) = shape {
            if net.shape() != expected {
                return Err(ModelError::Corrupt {
                    path: path.display().to_string(),
                    reason: format!("architecture {:?} does not match {expected:?}", net.shape()),
                });
            }
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ConnectFour, GameState};
    use crate::model::{encode, Evaluator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trained_like_net() -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut n = Network::new(GameId::ConnectFour, NetShape::for_game::<ConnectFour>(12, 2), &mut rng).unwrap();
        for (i, p) in n.params_mut().iter_mut().enumerate() {
            *p += (i as f64 * 0.37).sin() * 0.1;
        }
        n.set_step(300);
        n
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ckpt");
        let n = trained_like_net();
        n.save(&path).unwrap();
        let m = Network::load(&path).unwrap();
        assert_eq!(m.step(), 300);
        assert!(n.params().iter().zip(m.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
        let s = ConnectFour::from_moves(&[3, 2, 4]).unwrap();
        let (mut pa, mut pb) = ([0.0; 7], [0.0; 7]);
        let va = n.evaluate(&s, &mut pa);
        let vb = m.evaluate(&s, &mut pb);
        assert_eq!(va.to_bits(), vb.to_bits());
        assert_eq!(pa, pb);
        assert_eq!(n.forward(&encode(&s)).unwrap(), m.forward(&encode(&s)).unwrap());
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = Network::load("/nonexistent/dir/x.ckpt").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/x.ckpt"));
    }

    #[test]
    fn corruption_is_detected() {
        let n = trained_like_net();
        let mut bytes = n.to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(Network::from_bytes(&bytes, "mem"), Err(ModelError::Corrupt { .. })));
        let truncated = &n.to_bytes()[..100];
        assert!(Network::from_bytes(truncated, "mem").is_err());
    }

    #[test]
    fn refuses_other_game_or_architecture() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.ckpt");
        trained_like_net().save(&path).unwrap();
        assert!(matches!(
            Network::load_checked(&path, GameId::TicTacToe, None),
            Err(ModelError::WrongGame { .. })
        ));
        let other = NetShape::for_game::<ConnectFour>(16, 2);
        assert!(Network::load_checked(&path, GameId::ConnectFour, Some(other)).is_err());
        assert!(Network::load_checked(&path, ConnectFour::ID, None).is_ok());
    }
}
