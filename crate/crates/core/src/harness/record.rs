use serde::{Deserialize, Serialize};

use crate::nocturnal::ConsolidationReport;
use crate::types::FeedbackKind;

/// One agent iteration on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub arm: String,
    pub seed: u64,
    pub task_id: String,
    pub context: String,
    /// Iteration within the task, starting at 0.
    pub iteration: usize,
    /// Position within the seed's whole run, starting at 0.
    pub step: usize,
    pub program: String,
    pub action: usize,
    pub feedback: FeedbackKind,
    pub reward: f64,
    pub valence: f64,
    pub arousal: f64,
    pub td_error: f64,
    /// True when the entry received the elevated immediate replay.
    pub replayed: bool,
    pub policy_entropy: f64,
    /// Buffer length right after the insert.
    pub occupancy: usize,
}

/// What happened to the buffer at the end of one task block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEnd {
    pub arm: String,
    pub seed: u64,
    pub task_id: String,
    /// Policy entropy of the task's context after the block.
    pub policy_entropy: f64,
    /// Entries removed by the per-task prune step.
    pub task_pruned: usize,
    pub consolidation: ConsolidationReport,
}

impl TaskEnd {
    /// Buffer length once the block is fully processed.
    pub fn occupancy(&self) -> usize {
        self.consolidation.occupancy_after
    }
}
