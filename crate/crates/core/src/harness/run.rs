//! The per-seed episode loop and multi-seed runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{aggregate, MeanStd, SeedMetrics};
use super::record::{EpisodeRecord, TaskEnd};
use crate::buffer::CosmoBuffer;
use crate::config::ExperimentConfig;
use crate::error::{validation, Result};
use crate::miniworld::{encode_features, execute, Agent, AgentConfig, TaskSpec};
use crate::nocturnal::{consolidate, ConsolidateParams, NocturnalState, ReplayMode};
use crate::rng::Rng;
use crate::tagger::Tagger;
use crate::types::{BufferEntry, ExecutionFeedback, Trajectory};
use std::collections::BTreeMap;

/// Harness knobs that sit outside the experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Clean-run length for `cycles_to_zero_error`.
    pub window: usize,
    /// Replace the canonical prune rule with the coin-flip variant.
    pub alg1_compat: bool,
    pub consolidation_batch_size: usize,
    pub consolidation_batches: usize,
    pub nocturnal_eta: f64,
    pub agent: AgentConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            window: 5,
            alg1_compat: false,
            consolidation_batch_size: 10,
            consolidation_batches: 2,
            nocturnal_eta: 0.5,
            agent: AgentConfig::default(),
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(validation("window must be >= 1"));
        }
        if self.consolidation_batch_size == 0 {
            return Err(validation("consolidation_batch_size must be >= 1"));
        }
        if !(self.nocturnal_eta >= 0.0 && self.nocturnal_eta.is_finite()) {
            return Err(validation("nocturnal_eta must be >= 0"));
        }
        Ok(())
    }
}

/// Everything one seed produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
    pub task_ends: Vec<TaskEnd>,
    pub metrics: SeedMetrics,
}

/// A seed that aborted, with its diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmRun {
    pub arm: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedRun>,
    pub failures: Vec<SeedFailure>,
}

/// Serializable summary of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub arm: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedMetrics>,
    pub failures: Vec<SeedFailure>,
    pub aggregate: BTreeMap<String, MeanStd>,
}

impl ArmRun {
    pub fn summary(&self) -> MetricsSummary {
        let seeds: Vec<SeedMetrics> = self.seeds.iter().map(|s| s.metrics.clone()).collect();
        MetricsSummary {
            arm: self.arm.clone(),
            config: self.config.clone(),
            aggregate: aggregate(&seeds),
            seeds,
            failures: self.failures.clone(),
        }
    }
}

/// Run the episode loop for one seed over the whole corpus.
///
/// Per iteration the agent acts, the program is executed and tagged, the
/// entry is stored and learned from once, or `dream_multiplier` times when
/// prioritization is on and its valence is below the immediate-replay gate.
/// A task stops at the first reward above the success threshold. After each
/// task the buffer is pruned (when enabled) and one consolidation cycle runs.
pub fn run_seed(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    corpus: &[TaskSpec],
    tagger: &dyn Tagger,
    arm: &str,
    seed: u64,
) -> Result<SeedRun> {
    cfg.validate()?;
    opts.validate()?;
    if corpus.is_empty() {
        return Err(validation("corpus is empty"));
    }
    let mut rng = Rng::new(seed);
    let mut replay_rng = rng.fork();
    let mut agent = Agent::for_corpus(opts.agent.clone(), corpus)?;
    let mut buf = CosmoBuffer::from_config(cfg)?;
    let mut nocturnal = NocturnalState::new(1.0, opts.nocturnal_eta);
    let mut records = Vec::new();
    let mut task_ends = Vec::with_capacity(corpus.len());

    for task in corpus {
        for iteration in 0..cfg.iterations_per_prompt {
            let action = agent.act(task, &mut rng)?;
            let outcome = execute(&action.program, &task.tables, &task.expected);
            let td_error = outcome.reward - agent.expected_value(&task.context)?;
            let trajectory = Trajectory {
                task_id: task.id.clone(),
                context: task.context.clone(),
                action: action.action,
                prompt_features: encode_features(&task.prompt, &action.program, outcome.reward),
                generated_program: action.program.clone(),
                execution_feedback: ExecutionFeedback {
                    kind: outcome.kind,
                    detail: outcome.detail,
                },
                reward: outcome.reward,
            };
            let tag = tagger.tag(&trajectory, td_error)?;
            let entry = BufferEntry::new(trajectory, tag, td_error, cfg.lambda_weight)?;
            let replayed = cfg.use_prioritization && tag.valence < cfg.immediate_replay_gate;
            let updates = if replayed { cfg.dream_multiplier } else { 1 };
            for _ in 0..updates {
                agent.learn_update(&entry)?;
            }
            buf.insert(entry)?;
            records.push(EpisodeRecord {
                arm: arm.to_string(),
                seed,
                task_id: task.id.clone(),
                context: task.context.clone(),
                iteration,
                step: records.len(),
                program: action.program.to_string(),
                action: action.action,
                feedback: outcome.kind,
                reward: outcome.reward,
                valence: tag.valence,
                arousal: tag.arousal,
                td_error,
                replayed,
                policy_entropy: action.entropy,
                occupancy: buf.len(),
            });
            if outcome.reward > cfg.success_break_reward {
                break;
            }
        }

        let policy_entropy = agent.entropy(&task.context)?;
        let task_pruned = match (cfg.use_pruning, opts.alg1_compat) {
            (false, _) => 0,
            (true, false) => buf.prune(policy_entropy, nocturnal.prune_scale())?,
            (true, true) => buf.prune_coin_flip(&mut replay_rng),
        };
        let params = ConsolidateParams {
            batch_size: opts.consolidation_batch_size,
            n_batches: opts.consolidation_batches,
            policy_entropy,
            variance_floor: cfg.variance_floor,
            mode: if cfg.use_prioritization {
                ReplayMode::Mixture
            } else {
                ReplayMode::Uniform
            },
            prune: cfg.use_pruning && !opts.alg1_compat,
        };
        let consolidation = consolidate(
            &mut buf,
            &mut agent,
            &mut nocturnal,
            &params,
            &mut replay_rng,
        )?;
        task_ends.push(TaskEnd {
            arm: arm.to_string(),
            seed,
            task_id: task.id.clone(),
            policy_entropy,
            task_pruned,
            consolidation,
        });
    }

    let metrics = SeedMetrics::from_records(seed, &records, &task_ends, opts.window)?;
    Ok(SeedRun {
        seed,
        records,
        task_ends,
        metrics,
    })
}

/// Run every seed in `cfg.seeds` in parallel. Failed seeds are reported but
/// do not stop the others; results keep seed order.
pub fn run_arm(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    corpus: &[TaskSpec],
    tagger: &(dyn Tagger + Sync),
    arm: &str,
) -> Result<ArmRun> {
    cfg.validate()?;
    opts.validate()?;
    let results: Vec<(u64, Result<SeedRun>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(cfg, opts, corpus, tagger, arm, seed)))
        .collect();
    let mut seeds = Vec::new();
    let mut failures = Vec::new();
    for (seed, result) in results {
        match result {
            Ok(run) => seeds.push(run),
            Err(e) => failures.push(SeedFailure {
                seed,
                error: e.to_string(),
            }),
        }
    }
    Ok(ArmRun {
        arm: arm.to_string(),
        config: cfg.clone(),
        seeds,
        failures,
    })
}

/// Arm name implied by the two ablation switches.
pub fn arm_name(cfg: &ExperimentConfig) -> &'static str {
    match (cfg.use_prioritization, cfg.use_pruning) {
        (true, true) => "full",
        (false, false) => "baseline",
        (false, true) => "no_prioritization",
        (true, false) => "no_pruning",
    }
}
