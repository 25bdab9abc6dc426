//! The four-arm comparison and paired per-seed deltas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::MeanStd;
use super::run::{run_arm, ArmRun, RunOptions};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::miniworld::TaskSpec;
use crate::tagger::Tagger;

/// `(name, use_prioritization, use_pruning)`.
pub const ARMS: [(&str, bool, bool); 4] = [
    ("baseline", false, false),
    ("full", true, true),
    ("no_prioritization", false, true),
    ("no_pruning", true, false),
];

/// `(treatment, reference)` pairs reported as deltas.
pub const COMPARISONS: [(&str, &str); 3] = [
    ("full", "baseline"),
    ("no_prioritization", "full"),
    ("no_pruning", "full"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDelta {
    pub treatment: String,
    pub reference: String,
    /// Seeds that completed in both arms.
    pub seeds: Vec<u64>,
    /// `treatment - reference` per metric, aggregated over paired seeds.
    pub deltas: BTreeMap<String, MeanStd>,
    /// Per seed, the smallest `treatment - reference` occupancy gap over all
    /// task checkpoints.
    pub min_occupancy_gap: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRun {
    pub arms: Vec<ArmRun>,
    pub deltas: Vec<PairedDelta>,
}

impl AblationRun {
    pub fn arm(&self, name: &str) -> Option<&ArmRun> {
        self.arms.iter().find(|a| a.arm == name)
    }
}

pub fn arm_config(
    base: &ExperimentConfig,
    prioritization: bool,
    pruning: bool,
) -> ExperimentConfig {
    ExperimentConfig {
        use_prioritization: prioritization,
        use_pruning: pruning,
        ..base.clone()
    }
}

pub fn paired_delta(treatment: &ArmRun, reference: &ArmRun) -> PairedDelta {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut seeds = Vec::new();
    let mut gaps = Vec::new();
    for t in &treatment.seeds {
        let Some(r) = reference.seeds.iter().find(|r| r.seed == t.seed) else {
            continue;
        };
        seeds.push(t.seed);
        for ((name, tv), (_, rv)) in t.metrics.scalars().into_iter().zip(r.metrics.scalars()) {
            if let (Some(a), Some(b)) = (tv, rv) {
                columns.entry(name.to_string()).or_default().push(a - b);
            }
        }
        let gap = t
            .metrics
            .occupancy_curve
            .iter()
            .zip(&r.metrics.occupancy_curve)
            .map(|(&a, &b)| a as i64 - b as i64)
            .min()
            .unwrap_or(0);
        gaps.push(gap);
    }
    PairedDelta {
        treatment: treatment.arm.clone(),
        reference: reference.arm.clone(),
        seeds,
        deltas: columns
            .into_iter()
            .filter_map(|(k, v)| MeanStd::of(&v).map(|m| (k, m)))
            .collect(),
        min_occupancy_gap: gaps,
    }
}

/// Run all four arms with the base configuration's seeds.
pub fn run_ablations(
    base: &ExperimentConfig,
    opts: &RunOptions,
    corpus: &[TaskSpec],
    tagger: &(dyn Tagger + Sync),
) -> Result<AblationRun> {
    let arms = ARMS
        .iter()
        .map(|&(name, p, q)| run_arm(&arm_config(base, p, q), opts, corpus, tagger, name))
        .collect::<Result<Vec<_>>>()?;
    let find = |n: &str| arms.iter().find(|a| a.arm == n).expect("every arm ran");
    let deltas = COMPARISONS
        .iter()
        .map(|&(t, r)| paired_delta(find(t), find(r)))
        .collect();
    Ok(AblationRun { arms, deltas })
}
