//! Trajectories, affect tags and buffer entries.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::miniworld::Program;

/// Width of the feature vector fed to the tagger.
pub const FEATURE_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Pass,
    SyntaxError,
    SemanticError,
    RuntimeError,
}

impl FeedbackKind {
    pub fn is_error(self) -> bool {
        !matches!(self, FeedbackKind::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionFeedback {
    pub kind: FeedbackKind,
    pub detail: String,
}

/// One generation episode: what was asked, what was produced, how it ran.
///
/// `task_id`, `context` and `action` identify where the program came from so a
/// learner can replay the entry later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task_id: String,
    pub context: String,
    pub action: usize,
    pub prompt_features: Vec<f64>,
    pub generated_program: Program,
    pub execution_feedback: ExecutionFeedback,
    pub reward: f64,
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.prompt_features.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                got: self.prompt_features.len(),
            });
        }
        if self.prompt_features.iter().any(|x| !x.is_finite()) {
            return Err(validation("prompt_features contain non-finite values"));
        }
        if !self.reward.is_finite() || !(-1.0..=1.0).contains(&self.reward) {
            return Err(validation(format!(
                "reward {} outside [-1, 1]",
                self.reward
            )));
        }
        if self.execution_feedback.kind == FeedbackKind::Pass && self.reward <= 0.0 {
            return Err(validation(
                "passing trajectory must carry a positive reward",
            ));
        }
        Ok(())
    }
}

/// Valence in `[-1, 1]`, arousal in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectTag {
    pub valence: f64,
    pub arousal: f64,
}

impl AffectTag {
    pub fn new(valence: f64, arousal: f64) -> Result<Self> {
        let tag = Self { valence, arousal };
        tag.validate()?;
        Ok(tag)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.valence.is_finite() || !(-1.0..=1.0).contains(&self.valence) {
            return Err(validation(format!(
                "valence {} outside [-1, 1]",
                self.valence
            )));
        }
        if !self.arousal.is_finite() || !(0.0..=1.0).contains(&self.arousal) {
            return Err(validation(format!(
                "arousal {} outside [0, 1]",
                self.arousal
            )));
        }
        Ok(())
    }
}

/// Replay priority: `|td| + lambda * |valence| * arousal`.
pub fn compute_priority(td_error: f64, tag: AffectTag, lambda_weight: f64) -> Result<f64> {
    if !td_error.is_finite() || !tag.valence.is_finite() || !tag.arousal.is_finite() {
        return Err(validation("priority inputs must be finite"));
    }
    if !lambda_weight.is_finite() || lambda_weight < 0.0 {
        return Err(validation(format!(
            "lambda_weight {lambda_weight} must be finite and >= 0"
        )));
    }
    Ok(td_error.abs() + lambda_weight * tag.valence.abs() * tag.arousal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferEntry {
    pub trajectory: Trajectory,
    pub tag: AffectTag,
    pub td_error: f64,
    pub priority: f64,
    /// Assigned by the buffer on insert.
    pub seq: u64,
}

impl BufferEntry {
    pub fn new(
        trajectory: Trajectory,
        tag: AffectTag,
        td_error: f64,
        lambda_weight: f64,
    ) -> Result<Self> {
        let priority = compute_priority(td_error, tag, lambda_weight)?;
        Ok(Self {
            trajectory,
            tag,
            td_error,
            priority,
            seq: 0,
        })
    }

    pub(crate) fn set_td_error(&mut self, td_error: f64, lambda_weight: f64) -> Result<()> {
        self.priority = compute_priority(td_error, self.tag, lambda_weight)?;
        self.td_error = td_error;
        Ok(())
    }
}
