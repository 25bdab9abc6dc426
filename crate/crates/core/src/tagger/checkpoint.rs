//! Tagger weight persistence: a compact binary form and a JSON form.
//!
//! Binary layout: magic `CCTG`, then little-endian `u32` version and the
//! three layer widths, then every `f64` of `w1` followed by `w2`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{MlpTagger, HIDDEN_DIM, INPUT_DIM, OUTPUT_DIM};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CCTG";
pub const VERSION: u32 = 1;
const DIMS: [usize; 3] = [INPUT_DIM, HIDDEN_DIM, OUTPUT_DIM];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonCheckpoint {
    version: u32,
    dims: [usize; 3],
    #[serde(rename = "W1")]
    w1: Vec<f64>,
    #[serde(rename = "W2")]
    w2: Vec<f64>,
}

impl MlpTagger {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 8 * self.parameter_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for d in DIMS {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for w in self.w1().iter().chain(self.w2()) {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..4] != MAGIC {
            return Err(Error::Checkpoint("missing magic header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = word(0);
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "version {version}, expected {VERSION}"
            )));
        }
        let dims = [word(1) as usize, word(2) as usize, word(3) as usize];
        if dims != DIMS {
            return Err(Error::Checkpoint(format!(
                "dims {dims:?}, expected {DIMS:?}"
            )));
        }
        let n1 = HIDDEN_DIM * (INPUT_DIM + 1);
        let n2 = OUTPUT_DIM * (HIDDEN_DIM + 1);
        let body = &bytes[20..];
        if body.len() != 8 * (n1 + n2) {
            return Err(Error::Checkpoint(format!(
                "payload is {} bytes, expected {}",
                body.len(),
                8 * (n1 + n2)
            )));
        }
        let mut values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let w1: Vec<f64> = values.by_ref().take(n1).collect();
        let w2: Vec<f64> = values.collect();
        Self::from_weights(w1, w2)
    }

    pub fn to_json(&self) -> Result<String> {
        let ck = JsonCheckpoint {
            version: VERSION,
            dims: DIMS,
            w1: self.w1().to_vec(),
            w2: self.w2().to_vec(),
        };
        Ok(serde_json::to_string(&ck)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: JsonCheckpoint = serde_json::from_str(text)?;
        if ck.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "version {}, expected {VERSION}",
                ck.version
            )));
        }
        if ck.dims != DIMS {
            return Err(Error::Checkpoint(format!(
                "dims {:?}, expected {DIMS:?}",
                ck.dims
            )));
        }
        Self::from_weights(ck.w1, ck.w2)
    }

    /// Save by extension: `.json` writes JSON, anything else binary.
    pub fn save(&self, path: &Path) -> Result<()> {
        if is_json(path) {
            std::fs::write(path, self.to_json()?)?;
        } else {
            std::fs::write(path, self.to_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if is_json(path) {
            Self::from_json(&std::fs::read_to_string(path)?)
        } else {
            Self::from_bytes(&std::fs::read(path)?)
        }
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}
