//! Sleep-like consolidation: replay mixture batches into a learner, then
//! retune and apply pruning from the learner's confidence spread.

use serde::{Deserialize, Serialize};

use crate::buffer::{CosmoBuffer, Provenance};
use crate::error::{validation, Result};
use crate::rng::Rng;
use crate::types::BufferEntry;

/// Anything that can learn from replayed buffer entries.
pub trait Learner {
    /// Apply one replay of `entry`; returns its TD error before the update.
    fn replay_update(&mut self, entry: &BufferEntry) -> Result<f64>;

    /// Spread of the learner's value estimates over the given entries.
    fn confidence_variance(&self, entries: &[&BufferEntry]) -> f64;
}

pub const PRUNE_SCALE_MIN: f64 = 0.5;
pub const PRUNE_SCALE_MAX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub cycle: usize,
    pub confidence_variance: Option<f64>,
    pub prune_scale: f64,
    pub pruned_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NocturnalState {
    prune_scale: f64,
    pub eta: f64,
    pub history: Vec<HistoryRow>,
}

impl Default for NocturnalState {
    fn default() -> Self {
        Self {
            prune_scale: 1.0,
            eta: 0.5,
            history: Vec::new(),
        }
    }
}

impl NocturnalState {
    pub fn new(prune_scale: f64, eta: f64) -> Self {
        Self {
            prune_scale: prune_scale.clamp(PRUNE_SCALE_MIN, PRUNE_SCALE_MAX),
            eta,
            history: Vec::new(),
        }
    }

    pub fn prune_scale(&self) -> f64 {
        self.prune_scale
    }

    /// `scale += eta * (floor - variance)`, clamped to `[0.5, 2.0]`. Variance
    /// below the floor raises the scale (more pruning); above it lowers it.
    pub fn update_prune_scale(
        &mut self,
        confidence_variance: f64,
        variance_floor: f64,
    ) -> Result<f64> {
        if !(confidence_variance >= 0.0 && confidence_variance.is_finite()) {
            return Err(validation(format!(
                "confidence variance {confidence_variance} must be >= 0"
            )));
        }
        self.prune_scale = (self.prune_scale + self.eta * (variance_floor - confidence_variance))
            .clamp(PRUNE_SCALE_MIN, PRUNE_SCALE_MAX);
        Ok(self.prune_scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayMode {
    /// Dream-share by priority plus uniform remainder.
    Mixture,
    /// Plain uniform replay.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidateParams {
    pub batch_size: usize,
    pub n_batches: usize,
    pub policy_entropy: f64,
    pub variance_floor: f64,
    pub mode: ReplayMode,
    /// When false the prune step is skipped (pruning ablation).
    pub prune: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidationReport {
    pub cycle: usize,
    pub batches: usize,
    /// `(dream, uniform)` draw counts per batch.
    pub batch_provenance: Vec<(usize, usize)>,
    pub dream_draws: usize,
    pub uniform_draws: usize,
    pub confidence_variance: Option<f64>,
    pub prune_scale: f64,
    pub pruned: usize,
    pub occupancy_before: usize,
    pub occupancy_after: usize,
}

/// Run one consolidation cycle.
///
/// Each of `n_batches` batches is sampled, replayed entry by entry into the
/// learner, and the replayed entries' TD errors (hence priorities) are
/// refreshed. The confidence spread is then measured over everything just
/// replayed, the prune scale is updated from it, and the buffer is pruned.
/// An empty buffer produces a no-op report.
pub fn consolidate<L: Learner + ?Sized>(
    buf: &mut CosmoBuffer,
    learner: &mut L,
    state: &mut NocturnalState,
    params: &ConsolidateParams,
    rng: &mut Rng,
) -> Result<ConsolidationReport> {
    let cycle = state.history.len();
    let occupancy_before = buf.len();
    let mut report = ConsolidationReport {
        cycle,
        batches: 0,
        batch_provenance: Vec::new(),
        dream_draws: 0,
        uniform_draws: 0,
        confidence_variance: None,
        prune_scale: state.prune_scale,
        pruned: 0,
        occupancy_before,
        occupancy_after: occupancy_before,
    };
    if buf.is_empty() {
        return Ok(report);
    }

    let mut replayed = Vec::new();
    for _ in 0..params.n_batches {
        let batch = match params.mode {
            ReplayMode::Mixture => buf.sample_mixture(params.batch_size, rng)?,
            ReplayMode::Uniform => buf.sample_uniform(params.batch_size, rng)?,
        };
        let mut tds = Vec::with_capacity(batch.len());
        for item in &batch.items {
            let entry = buf.get(item.index).expect("sampled index is resident");
            tds.push((item.seq, learner.replay_update(entry)?));
        }
        for (seq, td) in tds {
            buf.update_td(seq, td)?;
        }
        let dream = batch.count(Provenance::Dream);
        report.batch_provenance.push((dream, batch.len() - dream));
        report.dream_draws += dream;
        report.uniform_draws += batch.len() - dream;
        report.batches += 1;
        replayed.extend(batch.items.iter().map(|i| i.seq));
    }

    if !replayed.is_empty() {
        let entries: Vec<&BufferEntry> = replayed.iter().filter_map(|&s| buf.find(s)).collect();
        let variance = learner.confidence_variance(&entries);
        state.update_prune_scale(variance, params.variance_floor)?;
        report.confidence_variance = Some(variance);
    }
    report.prune_scale = state.prune_scale;
    if params.prune {
        report.pruned = buf.prune(params.policy_entropy, state.prune_scale)?;
    }
    report.occupancy_after = buf.len();
    state.history.push(HistoryRow {
        cycle,
        confidence_variance: report.confidence_variance,
        prune_scale: state.prune_scale,
        pruned_count: report.pruned,
    });
    Ok(report)
}
