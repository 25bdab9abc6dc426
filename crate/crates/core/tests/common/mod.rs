#![allow(dead_code)]

use cosmocore::buffer::{CosmoBuffer, GateConfig};
use cosmocore::miniworld::Program;
use cosmocore::types::{
    AffectTag, BufferEntry, ExecutionFeedback, FeedbackKind, Trajectory, FEATURE_DIM,
};

pub fn trajectory(context: &str, action: usize, reward: f64) -> Trajectory {
    let kind = if reward > 0.0 {
        FeedbackKind::Pass
    } else {
        FeedbackKind::SemanticError
    };
    Trajectory {
        task_id: format!("{context}-task"),
        context: context.to_string(),
        action,
        prompt_features: vec![0.0; FEATURE_DIM],
        generated_program: Program::empty(),
        execution_feedback: ExecutionFeedback {
            kind,
            detail: String::new(),
        },
        reward,
    }
}

pub fn entry(td: f64, valence: f64, arousal: f64) -> BufferEntry {
    let tag = AffectTag { valence, arousal };
    BufferEntry::new(trajectory("c", 0, -1.0), tag, td, 0.6).unwrap()
}

pub fn buffer_of(entries: impl IntoIterator<Item = BufferEntry>) -> CosmoBuffer {
    let mut buf = CosmoBuffer::new(10_000, GateConfig::default()).unwrap();
    for e in entries {
        buf.insert(e).unwrap();
    }
    buf
}
