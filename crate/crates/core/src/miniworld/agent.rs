//! Softmax preference learner over per-task candidate programs.
//!
//! Every task exposes the same number of candidate slots as the other tasks
//! of its context, and slot `i` is produced by the same generation strategy
//! throughout the context. Preferences and action values are therefore kept
//! per (context, slot) and transfer across the tasks of a context.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::corpus::TaskSpec;
use super::program::Program;
use crate::error::{validation, Error, Result};
use crate::nocturnal::Learner;
use crate::rng::Rng;
use crate::types::{BufferEntry, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    /// Step size of the preference update.
    pub learning_rate: f64,
    /// Step size of the per-slot action-value estimate.
    pub value_rate: f64,
    pub temperature: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            value_rate: 0.5,
            temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ContextState {
    preferences: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub program: Program,
    pub action: usize,
    pub probability: f64,
    /// Shannon entropy of the policy divided by `ln K`.
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    contexts: BTreeMap<String, ContextState>,
    candidates: BTreeMap<String, Vec<Program>>,
}

pub fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .map(|l| ((l - max) / temperature).exp())
        .collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn normalized_entropy(probs: &[f64]) -> f64 {
    if probs.len() < 2 {
        return 0.0;
    }
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    (h / (probs.len() as f64).ln()).clamp(0.0, 1.0)
}

impl Agent {
    pub fn new(config: AgentConfig) -> Result<Self> {
        if !(config.temperature > 0.0 && config.temperature.is_finite()) {
            return Err(validation("temperature must be positive"));
        }
        if !(config.learning_rate >= 0.0 && config.value_rate >= 0.0 && config.value_rate <= 1.0) {
            return Err(validation(
                "learning rates must be non-negative and value_rate <= 1",
            ));
        }
        Ok(Self {
            config,
            contexts: BTreeMap::new(),
            candidates: BTreeMap::new(),
        })
    }

    pub fn for_corpus(config: AgentConfig, tasks: &[TaskSpec]) -> Result<Self> {
        let mut agent = Self::new(config)?;
        for t in tasks {
            agent.register(t)?;
        }
        Ok(agent)
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    /// Add a context with `k` zero-initialised slots (no-op if present).
    pub fn add_context(&mut self, context: &str, k: usize) -> Result<()> {
        if k == 0 {
            return Err(validation("candidate set must be nonempty"));
        }
        match self.contexts.get(context) {
            Some(state) if state.preferences.len() != k => Err(validation(format!(
                "context `{context}` has {} slots, task offers {k}",
                state.preferences.len()
            ))),
            Some(_) => Ok(()),
            None => {
                self.contexts.insert(
                    context.to_string(),
                    ContextState {
                        preferences: vec![0.0; k],
                        values: vec![0.0; k],
                    },
                );
                Ok(())
            }
        }
    }

    pub fn register(&mut self, task: &TaskSpec) -> Result<()> {
        let candidates = task.candidates()?;
        self.add_context(&task.context, candidates.len())?;
        self.candidates.insert(task.id.clone(), candidates);
        Ok(())
    }

    pub fn candidates(&self, task_id: &str) -> Option<&[Program]> {
        self.candidates.get(task_id).map(Vec::as_slice)
    }

    fn state(&self, context: &str) -> Result<&ContextState> {
        self.contexts
            .get(context)
            .ok_or_else(|| Error::UnknownContext(context.to_string()))
    }

    pub fn set_preferences(&mut self, context: &str, preferences: Vec<f64>) -> Result<()> {
        let state = self
            .contexts
            .get_mut(context)
            .ok_or_else(|| Error::UnknownContext(context.to_string()))?;
        if preferences.len() != state.preferences.len()
            || preferences.iter().any(|p| !p.is_finite())
        {
            return Err(validation(
                "preference vector has wrong length or non-finite values",
            ));
        }
        state.preferences = preferences;
        Ok(())
    }

    pub fn preferences(&self, context: &str) -> Result<&[f64]> {
        Ok(&self.state(context)?.preferences)
    }

    pub fn values(&self, context: &str) -> Result<&[f64]> {
        Ok(&self.state(context)?.values)
    }

    pub fn policy(&self, context: &str) -> Result<Vec<f64>> {
        Ok(softmax(
            &self.state(context)?.preferences,
            self.config.temperature,
        ))
    }

    pub fn entropy(&self, context: &str) -> Result<f64> {
        Ok(normalized_entropy(&self.policy(context)?))
    }

    /// Expected reward of the current policy in `context`.
    pub fn expected_value(&self, context: &str) -> Result<f64> {
        let state = self.state(context)?;
        let probs = softmax(&state.preferences, self.config.temperature);
        Ok(probs.iter().zip(&state.values).map(|(p, q)| p * q).sum())
    }

    pub fn act(&self, task: &TaskSpec, rng: &mut Rng) -> Result<Action> {
        let candidates = self
            .candidates
            .get(&task.id)
            .ok_or_else(|| Error::UnknownContext(task.id.clone()))?;
        let probs = self.policy(&task.context)?;
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let action = rng.pick_cumulative(&cumulative);
        Ok(Action {
            program: candidates[action].clone(),
            action,
            probability: probs[action],
            entropy: normalized_entropy(&probs),
        })
    }

    /// One replay of a trajectory. Returns the TD error `reward - v̄`, where
    /// `v̄` is the policy's expected value before the update.
    pub fn learn(&mut self, trajectory: &Trajectory) -> Result<f64> {
        let v_bar = self.expected_value(&trajectory.context)?;
        let state = self
            .contexts
            .get_mut(&trajectory.context)
            .expect("checked by expected_value");
        let a = trajectory.action;
        if a >= state.preferences.len() {
            return Err(validation(format!(
                "action {a} out of range for context `{}`",
                trajectory.context
            )));
        }
        let td = trajectory.reward - v_bar;
        state.preferences[a] += self.config.learning_rate * td;
        state.values[a] += self.config.value_rate * (trajectory.reward - state.values[a]);
        Ok(td)
    }

    pub fn learn_update(&mut self, entry: &BufferEntry) -> Result<f64> {
        self.learn(&entry.trajectory)
    }
}

impl Learner for Agent {
    fn replay_update(&mut self, entry: &BufferEntry) -> Result<f64> {
        self.learn_update(entry)
    }

    /// Standard deviation of the state values `v̄(context)` over the entries.
    fn confidence_variance(&self, entries: &[&BufferEntry]) -> f64 {
        let vals: Vec<f64> = entries
            .iter()
            .filter_map(|e| self.expected_value(&e.trajectory.context).ok())
            .collect();
        if vals.is_empty() {
            return 0.0;
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }
}
