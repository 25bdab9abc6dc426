//! Affect taggers: map a trajectory and its TD error to valence and arousal.

mod checkpoint;
mod heuristic;
mod mlp;

pub use checkpoint::{MAGIC as CHECKPOINT_MAGIC, VERSION as CHECKPOINT_VERSION};
pub use heuristic::{
    heuristic_tag, heuristic_tag_with_reward, HeuristicTagger, RewardSignal, SEMANTIC_VALENCE_CAP,
    SYNTAX_VALENCE_CAP,
};
pub use mlp::{
    GradientCheck, Gradients, MlpTagger, Sample, TaggerTrainConfig, TrainReport, HIDDEN_DIM,
    INPUT_DIM, OUTPUT_DIM,
};

use crate::error::Result;
use crate::types::{AffectTag, Trajectory};

pub trait Tagger {
    fn tag(&self, trajectory: &Trajectory, td_error: f64) -> Result<AffectTag>;
}

impl Tagger for MlpTagger {
    fn tag(&self, trajectory: &Trajectory, _td_error: f64) -> Result<AffectTag> {
        self.forward(&trajectory.prompt_features)
    }
}
