//! Per-seed metrics and cross-seed aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::{EpisodeRecord, TaskEnd};
use crate::error::{validation, Result};

/// Fraction of iterations whose reward is not positive.
pub fn hallucination_rate(rewards: &[f64]) -> Result<f64> {
    if rewards.is_empty() {
        return Err(validation(
            "hallucination_rate needs at least one iteration",
        ));
    }
    let failures = rewards.iter().filter(|&&r| r <= 0.0).count();
    Ok(failures as f64 / rewards.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycles {
    pub cycles: usize,
    /// No clean window was ever observed; `cycles` is the total count.
    pub censored: bool,
}

/// Episodes elapsed before the first run of `window` consecutive error-free
/// episodes.
pub fn cycles_to_zero_error(rewards: &[f64], window: usize) -> Result<Cycles> {
    if window == 0 {
        return Err(validation("window must be >= 1"));
    }
    let mut run = 0;
    for (i, &r) in rewards.iter().enumerate() {
        run = if r > 0.0 { run + 1 } else { 0 };
        if run == window {
            return Ok(Cycles {
                cycles: i + 1 - window,
                censored: false,
            });
        }
    }
    Ok(Cycles {
        cycles: rewards.len(),
        censored: true,
    })
}

/// Regressions after a context is first solved, over all episodes in that
/// context after its first success. Zero when nothing was ever solved.
pub fn bug_recurrence_rate<'a>(episodes: impl IntoIterator<Item = (&'a str, f64)>) -> f64 {
    let mut solved: BTreeMap<&str, bool> = BTreeMap::new();
    let (mut post, mut regressions) = (0usize, 0usize);
    for (context, reward) in episodes {
        let seen = solved.entry(context).or_insert(false);
        if *seen {
            post += 1;
            if reward <= 0.0 {
                regressions += 1;
            }
        } else if reward > 0.0 {
            *seen = true;
        }
    }
    if post == 0 {
        0.0
    } else {
        regressions as f64 / post as f64
    }
}

/// Number of episodes until the trailing `window` first reaches `target`
/// pass rate, or `None` if it never does.
pub fn episodes_to_pass_rate(rewards: &[f64], target: f64, window: usize) -> Option<usize> {
    if window == 0 || rewards.len() < window {
        return None;
    }
    let mut passes = rewards[..window].iter().filter(|&&r| r > 0.0).count();
    if passes as f64 >= target * window as f64 {
        return Some(window);
    }
    for i in window..rewards.len() {
        passes += usize::from(rewards[i] > 0.0);
        passes -= usize::from(rewards[i - window] > 0.0);
        if passes as f64 >= target * window as f64 {
            return Some(i + 1);
        }
    }
    None
}

pub const PASS_RATE_TARGET: f64 = 0.8;
pub const PASS_RATE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub episodes: usize,
    pub hallucination_rate: f64,
    pub mean_reward: f64,
    pub mean_entropy: f64,
    pub cycles_to_zero_error: Cycles,
    pub bug_recurrence_rate: f64,
    pub episodes_to_80_pass: Option<usize>,
    pub final_occupancy: usize,
    /// Occupancy after each task block.
    pub occupancy_curve: Vec<usize>,
    /// Confidence spread measured by each consolidation cycle.
    pub confidence_variance_curve: Vec<Option<f64>>,
    pub pruned_total: usize,
}

impl SeedMetrics {
    /// Build from one seed's records, in run order.
    pub fn from_records(
        seed: u64,
        records: &[EpisodeRecord],
        ends: &[TaskEnd],
        window: usize,
    ) -> Result<Self> {
        let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
        let n = rewards.len() as f64;
        let occupancy_curve: Vec<usize> = ends.iter().map(TaskEnd::occupancy).collect();
        let final_occupancy = occupancy_curve
            .last()
            .copied()
            .or_else(|| records.last().map(|r| r.occupancy))
            .unwrap_or(0);
        Ok(Self {
            seed,
            episodes: records.len(),
            hallucination_rate: hallucination_rate(&rewards)?,
            mean_reward: rewards.iter().sum::<f64>() / n,
            mean_entropy: records.iter().map(|r| r.policy_entropy).sum::<f64>() / n,
            cycles_to_zero_error: cycles_to_zero_error(&rewards, window)?,
            bug_recurrence_rate: bug_recurrence_rate(
                records.iter().map(|r| (r.context.as_str(), r.reward)),
            ),
            episodes_to_80_pass: episodes_to_pass_rate(
                &rewards,
                PASS_RATE_TARGET,
                PASS_RATE_WINDOW,
            ),
            final_occupancy,
            occupancy_curve,
            confidence_variance_curve: ends
                .iter()
                .map(|e| e.consolidation.confidence_variance)
                .collect(),
            pruned_total: ends
                .iter()
                .map(|e| e.task_pruned + e.consolidation.pruned)
                .sum(),
        })
    }

    /// Scalar fields by name, for aggregation and paired deltas.
    pub fn scalars(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("hallucination_rate", Some(self.hallucination_rate)),
            ("mean_reward", Some(self.mean_reward)),
            ("mean_entropy", Some(self.mean_entropy)),
            (
                "cycles_to_zero_error",
                Some(self.cycles_to_zero_error.cycles as f64),
            ),
            ("bug_recurrence_rate", Some(self.bug_recurrence_rate)),
            (
                "episodes_to_80_pass",
                self.episodes_to_80_pass.map(|e| e as f64),
            ),
            ("final_occupancy", Some(self.final_occupancy as f64)),
            ("pruned_total", Some(self.pruned_total as f64)),
            ("episodes", Some(self.episodes as f64)),
        ]
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Zero when fewer than two values are present.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(Self { mean, std, n })
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

/// Aggregate every scalar metric across seeds. Metrics with no value for any
/// seed are omitted.
pub fn aggregate(seeds: &[SeedMetrics]) -> BTreeMap<String, MeanStd> {
    let mut columns: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    for s in seeds {
        for (name, value) in s.scalars() {
            let col = columns.entry(name).or_default();
            if let Some(v) = value {
                col.push(v);
            }
        }
    }
    columns
        .into_iter()
        .filter_map(|(k, v)| MeanStd::of(&v).map(|m| (k.to_string(), m)))
        .collect()
}
