//! Experiment configuration.
//!
//! Every threshold, rate and ablation switch lives here so that ablations are
//! pure configuration changes. The JSON form uses exactly these field names and
//! rejects anything else.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lambda_weight: f64,
    pub dream_valence_threshold: f64,
    pub dream_arousal_threshold: f64,
    pub prune_valence_threshold: f64,
    pub prune_arousal_threshold: f64,
    pub entropy_keep_threshold: f64,
    pub dream_multiplier: u32,
    pub capacity: usize,
    pub dream_mix_fraction: f64,
    pub variance_floor: f64,
    pub immediate_replay_gate: f64,
    pub success_break_reward: f64,
    pub seeds: Vec<u64>,
    pub iterations_per_prompt: usize,
    pub use_prioritization: bool,
    pub use_pruning: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lambda_weight: 0.6,
            dream_valence_threshold: 0.5,
            dream_arousal_threshold: 0.7,
            prune_valence_threshold: 0.2,
            prune_arousal_threshold: 0.3,
            entropy_keep_threshold: 0.3,
            dream_multiplier: 5,
            capacity: 1_000_000,
            dream_mix_fraction: 0.8,
            variance_floor: 0.1,
            immediate_replay_gate: -0.5,
            success_break_reward: 0.9,
            seeds: vec![1, 2, 3, 4, 5],
            iterations_per_prompt: 100,
            use_prioritization: true,
            use_pruning: true,
        }
    }
}

impl ExperimentConfig {
    /// Capacity used for desk-scale runs.
    pub const DESK_CAPACITY: usize = 10_000;

    pub fn desk() -> Self {
        Self {
            capacity: Self::DESK_CAPACITY,
            ..Self::default()
        }
    }

    /// Every violated range constraint, in field order. Empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut unit = |name: &str, x: f64| {
            if !(x.is_finite() && (0.0..=1.0).contains(&x)) {
                out.push(format!("{name} ∉ [0,1]"));
            }
        };
        unit("dream_valence_threshold", self.dream_valence_threshold);
        unit("dream_arousal_threshold", self.dream_arousal_threshold);
        unit("prune_valence_threshold", self.prune_valence_threshold);
        unit("prune_arousal_threshold", self.prune_arousal_threshold);
        unit("entropy_keep_threshold", self.entropy_keep_threshold);
        unit("dream_mix_fraction", self.dream_mix_fraction);

        if !(self.lambda_weight.is_finite() && self.lambda_weight >= 0.0) {
            out.insert(0, "lambda_weight < 0".to_string());
        }
        if self.dream_multiplier < 1 {
            out.push("dream_multiplier < 1".to_string());
        }
        if self.capacity < 1 {
            out.push("capacity < 1".to_string());
        }
        if !(self.variance_floor.is_finite() && self.variance_floor >= 0.0) {
            out.push("variance_floor < 0".to_string());
        }
        if !(self.immediate_replay_gate.is_finite()
            && (-1.0..=1.0).contains(&self.immediate_replay_gate))
        {
            out.push("immediate_replay_gate ∉ [-1,1]".to_string());
        }
        if !(self.success_break_reward.is_finite()
            && (-1.0..=1.0).contains(&self.success_break_reward))
        {
            out.push("success_break_reward ∉ [-1,1]".to_string());
        }
        if self.seeds.is_empty() {
            out.push("seeds is empty".to_string());
        }
        if self.iterations_per_prompt < 1 {
            out.push("iterations_per_prompt < 1".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(validation(v.join("; ")))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Alias matching the operation name used throughout the docs.
pub fn validate_config(cfg: &ExperimentConfig) -> std::result::Result<(), Vec<String>> {
    let v = cfg.violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}
