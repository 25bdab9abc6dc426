//! Rule-based affect from execution feedback and TD error.

use crate::error::{validation, Result};
use crate::types::{AffectTag, FeedbackKind, Trajectory};

/// Valence ceiling for programs that fail to parse or type-check.
pub const SYNTAX_VALENCE_CAP: f64 = -0.8;
/// Valence ceiling for programs that run but give the wrong answer or crash.
pub const SEMANTIC_VALENCE_CAP: f64 = -0.6;

/// Tag from a feedback kind, a reward signal and a TD error.
///
/// Valence is the reward clamped to `[-1, 1]`, forced below the matching cap
/// for failures. Arousal is `|td| / td_scale` clamped to `[0, 1]`.
pub fn heuristic_tag_with_reward(
    kind: FeedbackKind,
    reward: f64,
    td_error: f64,
    td_scale: f64,
) -> Result<AffectTag> {
    if !(td_scale > 0.0 && td_scale.is_finite()) {
        return Err(validation(format!("td_scale {td_scale} must be positive")));
    }
    if !reward.is_finite() || !td_error.is_finite() {
        return Err(validation("reward and td_error must be finite"));
    }
    let mut valence = reward.clamp(-1.0, 1.0);
    match kind {
        FeedbackKind::Pass => {}
        FeedbackKind::SyntaxError => valence = valence.min(SYNTAX_VALENCE_CAP),
        FeedbackKind::SemanticError | FeedbackKind::RuntimeError => {
            valence = valence.min(SEMANTIC_VALENCE_CAP)
        }
    }
    let arousal = (td_error.abs() / td_scale).clamp(0.0, 1.0);
    Ok(AffectTag { valence, arousal })
}

/// Tag using the trajectory's own reward.
pub fn heuristic_tag(trajectory: &Trajectory, td_error: f64, td_scale: f64) -> Result<AffectTag> {
    heuristic_tag_with_reward(
        trajectory.execution_feedback.kind,
        trajectory.reward,
        td_error,
        td_scale,
    )
}

/// Which reward signal drives valence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSignal {
    /// The raw task reward.
    Raw,
    /// The TD error `r - V`, i.e. how much better or worse than expected.
    #[default]
    Advantage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicTagger {
    pub td_scale: f64,
    pub signal: RewardSignal,
}

impl Default for HeuristicTagger {
    fn default() -> Self {
        Self {
            td_scale: 1.0,
            signal: RewardSignal::Advantage,
        }
    }
}

impl super::Tagger for HeuristicTagger {
    fn tag(&self, trajectory: &Trajectory, td_error: f64) -> Result<AffectTag> {
        let reward = match self.signal {
            RewardSignal::Raw => trajectory.reward,
            RewardSignal::Advantage => td_error,
        };
        heuristic_tag_with_reward(
            trajectory.execution_feedback.kind,
            reward,
            td_error,
            self.td_scale,
        )
    }
}
