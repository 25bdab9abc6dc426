//! Affect-tagged experience replay for program-generating agents.
//!
//! Trajectories are tagged with valence and arousal, stored in a
//! priority buffer that favours vivid failures, replayed offline in
//! consolidation cycles and pruned when they carry little signal.

pub mod buffer;
pub mod config;
pub mod error;
pub mod harness;
pub mod miniworld;
pub mod nocturnal;
pub mod rng;
pub mod tagger;
pub mod types;

pub use error::{Error, Result};
