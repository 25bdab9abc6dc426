//! The affect-gated replay buffer.
//!
//! One ordered store holds every entry; the dream queue and the prune bin are
//! gated views over it. Entries are kept in insertion order (ascending `seq`)
//! and a rank index ordered by `(priority, seq)` serves eviction.

use std::collections::BTreeSet;
use std::path::Path;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{validation, Error, Result};
use crate::rng::Rng;
use crate::types::{compute_priority, AffectTag, BufferEntry, FEATURE_DIM};

/// The slice of [`ExperimentConfig`] the buffer needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    pub lambda_weight: f64,
    pub dream_valence_threshold: f64,
    pub dream_arousal_threshold: f64,
    pub prune_valence_threshold: f64,
    pub prune_arousal_threshold: f64,
    pub entropy_keep_threshold: f64,
    pub dream_multiplier: u32,
    pub dream_mix_fraction: f64,
}

impl From<&ExperimentConfig> for GateConfig {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            lambda_weight: c.lambda_weight,
            dream_valence_threshold: c.dream_valence_threshold,
            dream_arousal_threshold: c.dream_arousal_threshold,
            prune_valence_threshold: c.prune_valence_threshold,
            prune_arousal_threshold: c.prune_arousal_threshold,
            entropy_keep_threshold: c.entropy_keep_threshold,
            dream_multiplier: c.dream_multiplier,
            dream_mix_fraction: c.dream_mix_fraction,
        }
    }
}

impl Default for GateConfig {
    fn default() -> Self {
        (&ExperimentConfig::default()).into()
    }
}

/// High-impact gate: `|v| > dream_valence_threshold` and `a > dream_arousal_threshold`.
pub fn is_dream(tag: AffectTag, cfg: &GateConfig) -> bool {
    tag.valence.abs() > cfg.dream_valence_threshold && tag.arousal > cfg.dream_arousal_threshold
}

/// Low-impact gate at the configured thresholds.
pub fn is_prunable(tag: AffectTag, policy_entropy: f64, cfg: &GateConfig) -> bool {
    is_prunable_scaled(tag, policy_entropy, cfg, 1.0)
}

/// Prune thresholds multiplied by `scale`, capped at the dream thresholds so
/// that the two gates stay disjoint.
pub fn scaled_prune_thresholds(cfg: &GateConfig, scale: f64) -> (f64, f64) {
    (
        (cfg.prune_valence_threshold * scale).min(cfg.dream_valence_threshold),
        (cfg.prune_arousal_threshold * scale).min(cfg.dream_arousal_threshold),
    )
}

pub fn is_prunable_scaled(
    tag: AffectTag,
    policy_entropy: f64,
    cfg: &GateConfig,
    scale: f64,
) -> bool {
    let (v_max, a_max) = scaled_prune_thresholds(cfg, scale);
    tag.valence.abs() < v_max && tag.arousal < a_max && policy_entropy <= cfg.entropy_keep_threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Dream,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledItem {
    /// Position in [`CosmoBuffer::entries`] at sampling time.
    pub index: usize,
    pub seq: u64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SampleBatch {
    pub items: Vec<SampledItem>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.items
            .iter()
            .filter(|i| i.provenance == provenance)
            .count()
    }

    pub fn entries<'a>(&self, buf: &'a CosmoBuffer) -> Vec<&'a BufferEntry> {
        self.items.iter().map(|i| &buf.entries[i.index]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub count: usize,
    pub fraction: f64,
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CosmoBuffer {
    gates: GateConfig,
    capacity: usize,
    entries: Vec<BufferEntry>,
    rank: BTreeSet<(OrderedFloat<f64>, u64)>,
    next_seq: u64,
}

impl CosmoBuffer {
    pub fn new(capacity: usize, gates: GateConfig) -> Result<Self> {
        if capacity < 1 {
            return Err(validation("capacity < 1"));
        }
        Ok(Self {
            gates,
            capacity,
            entries: Vec::new(),
            rank: BTreeSet::new(),
            next_seq: 0,
        })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(cfg.capacity, cfg.into())
    }

    pub fn gates(&self) -> &GateConfig {
        &self.gates
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BufferEntry] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&BufferEntry> {
        self.entries.get(index)
    }

    fn position(&self, seq: u64) -> Option<usize> {
        self.entries.binary_search_by_key(&seq, |e| e.seq).ok()
    }

    pub fn find(&self, seq: u64) -> Option<&BufferEntry> {
        self.position(seq).map(|i| &self.entries[i])
    }

    pub fn is_dream_entry(&self, entry: &BufferEntry) -> bool {
        is_dream(entry.tag, &self.gates)
    }

    pub fn dream_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| self.is_dream_entry(e))
            .count()
    }

    fn remove_at(&mut self, index: usize) -> BufferEntry {
        let e = self.entries.remove(index);
        self.rank.remove(&(OrderedFloat(e.priority), e.seq));
        e
    }

    /// Store `entry` (its seq is assigned here and its priority recomputed).
    /// When the buffer is full, the lowest-priority resident entry, oldest
    /// first on ties, is evicted and returned.
    pub fn insert(&mut self, mut entry: BufferEntry) -> Result<Option<BufferEntry>> {
        entry.tag.validate()?;
        entry.priority = compute_priority(entry.td_error, entry.tag, self.gates.lambda_weight)?;
        let evicted = if self.entries.len() >= self.capacity {
            let &(_, seq) = self.rank.first().expect("full buffer has a minimum");
            let idx = self.position(seq).expect("rank index in sync");
            Some(self.remove_at(idx))
        } else {
            None
        };
        entry.seq = self.next_seq;
        self.next_seq += 1;
        self.rank.insert((OrderedFloat(entry.priority), entry.seq));
        self.entries.push(entry);
        Ok(evicted)
    }

    /// Replace an entry's TD error and recompute its priority.
    pub fn update_td(&mut self, seq: u64, td_error: f64) -> Result<()> {
        let idx = self
            .position(seq)
            .ok_or_else(|| validation(format!("no entry with seq {seq}")))?;
        let lambda = self.gates.lambda_weight;
        let e = &mut self.entries[idx];
        let old = (OrderedFloat(e.priority), e.seq);
        e.set_td_error(td_error, lambda)?;
        let new = (OrderedFloat(e.priority), e.seq);
        self.rank.remove(&old);
        self.rank.insert(new);
        Ok(())
    }

    /// Per-entry draw weights of [`Self::sample_multiplier`].
    pub fn multiplier_weights(&self) -> Vec<f64> {
        let m = f64::from(self.gates.dream_multiplier);
        self.entries
            .iter()
            .map(|e| if self.is_dream_entry(e) { m } else { 1.0 })
            .collect()
    }

    /// Draw with replacement; dream entries weigh `dream_multiplier`, the
    /// rest weigh 1.
    pub fn sample_multiplier(&self, batch_size: usize, rng: &mut Rng) -> Result<SampleBatch> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let cum = cumulative(self.multiplier_weights().into_iter());
        let items = (0..batch_size)
            .map(|_| {
                let index = rng.pick_cumulative(&cum);
                let e = &self.entries[index];
                SampledItem {
                    index,
                    seq: e.seq,
                    provenance: if self.is_dream_entry(e) {
                        Provenance::Dream
                    } else {
                        Provenance::Uniform
                    },
                }
            })
            .collect();
        Ok(SampleBatch { items })
    }

    fn uniform_items(&self, n: usize, rng: &mut Rng) -> Vec<SampledItem> {
        (0..n)
            .map(|_| {
                let index = rng.index(self.entries.len());
                SampledItem {
                    index,
                    seq: self.entries[index].seq,
                    provenance: Provenance::Uniform,
                }
            })
            .collect()
    }

    /// Uniform draws with replacement over the whole buffer.
    pub fn sample_uniform(&self, batch_size: usize, rng: &mut Rng) -> Result<SampleBatch> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok(SampleBatch {
            items: self.uniform_items(batch_size, rng),
        })
    }

    /// Number of dream-sourced draws in a mixture batch: `ceil(fraction * batch)`.
    pub fn dream_share(&self, batch_size: usize) -> usize {
        // Tolerance keeps e.g. 0.8 * 10 from rounding up to 9.
        let raw = self.gates.dream_mix_fraction * batch_size as f64 - 1e-9;
        (raw.ceil().max(0.0) as usize).min(batch_size)
    }

    /// `ceil(dream_mix_fraction * batch)` draws from the dream set in
    /// proportion to priority, the rest uniform over the whole buffer. An
    /// empty dream set hands its share to uniform draws.
    pub fn sample_mixture(&self, batch_size: usize, rng: &mut Rng) -> Result<SampleBatch> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let dream: Vec<usize> = (0..self.entries.len())
            .filter(|&i| self.is_dream_entry(&self.entries[i]))
            .collect();
        if dream.is_empty() {
            return self.sample_uniform(batch_size, rng);
        }
        let share = self.dream_share(batch_size);
        let total: f64 = dream.iter().map(|&i| self.entries[i].priority).sum();
        let cum = if total > 0.0 {
            cumulative(dream.iter().map(|&i| self.entries[i].priority))
        } else {
            cumulative(dream.iter().map(|_| 1.0))
        };
        let mut items: Vec<SampledItem> = (0..share)
            .map(|_| {
                let index = dream[rng.pick_cumulative(&cum)];
                SampledItem {
                    index,
                    seq: self.entries[index].seq,
                    provenance: Provenance::Dream,
                }
            })
            .collect();
        items.extend(self.uniform_items(batch_size - share, rng));
        Ok(SampleBatch { items })
    }

    /// Remove every entry in the prune bin under thresholds scaled by
    /// `prune_scale`. Returns the number removed.
    pub fn prune(&mut self, policy_entropy: f64, prune_scale: f64) -> Result<usize> {
        if !(prune_scale > 0.0 && prune_scale.is_finite()) {
            return Err(validation(format!(
                "prune_scale must be > 0, got {prune_scale}"
            )));
        }
        let gates = self.gates.clone();
        Ok(self.remove_where(|e| is_prunable_scaled(e.tag, policy_entropy, &gates, prune_scale)))
    }

    /// The literal evaluation-loop rule: keep an entry if its valence is below
    /// -0.2 or a fresh coin exceeds 0.3, otherwise drop it.
    pub fn prune_coin_flip(&mut self, rng: &mut Rng) -> usize {
        self.remove_where(|e| !(e.tag.valence < -0.2 || rng.uniform() > 0.3))
    }

    fn remove_where(&mut self, mut doomed: impl FnMut(&BufferEntry) -> bool) -> usize {
        let before = self.entries.len();
        let mut kept = Vec::with_capacity(before);
        for e in self.entries.drain(..) {
            if doomed(&e) {
                self.rank.remove(&(OrderedFloat(e.priority), e.seq));
            } else {
                kept.push(e);
            }
        }
        self.entries = kept;
        before - self.entries.len()
    }

    pub fn occupancy(&self) -> Occupancy {
        Occupancy {
            count: self.entries.len(),
            fraction: self.entries.len() as f64 / self.capacity as f64,
        }
    }

    pub fn snapshot(&self, elide_features: bool) -> BufferSnapshot {
        let mut entries = self.entries.clone();
        if elide_features {
            for e in &mut entries {
                e.trajectory.prompt_features.clear();
            }
        }
        BufferSnapshot {
            version: BufferSnapshot::VERSION,
            gates: self.gates.clone(),
            capacity: self.capacity,
            next_seq: self.next_seq,
            features_elided: elide_features,
            entries,
        }
    }

    pub fn from_snapshot(snap: BufferSnapshot) -> Result<Self> {
        if snap.version != BufferSnapshot::VERSION {
            return Err(validation(format!(
                "unsupported snapshot version {}",
                snap.version
            )));
        }
        let mut buf = Self::new(snap.capacity, snap.gates)?;
        if snap.entries.len() > snap.capacity {
            return Err(validation("snapshot holds more entries than its capacity"));
        }
        for mut e in snap.entries {
            if snap.features_elided {
                e.trajectory.prompt_features = vec![0.0; FEATURE_DIM];
            }
            if buf.entries.last().is_some_and(|last| last.seq >= e.seq) || e.seq >= snap.next_seq {
                return Err(validation("snapshot entries out of sequence order"));
            }
            e.priority = compute_priority(e.td_error, e.tag, buf.gates.lambda_weight)?;
            buf.rank.insert((OrderedFloat(e.priority), e.seq));
            buf.entries.push(e);
        }
        buf.next_seq = snap.next_seq;
        Ok(buf)
    }

    pub fn save_snapshot(&self, path: &Path, elide_features: bool) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.snapshot(elide_features))?)?;
        Ok(())
    }

    pub fn load_snapshot(path: &Path) -> Result<Self> {
        Self::from_snapshot(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferSnapshot {
    pub version: u32,
    pub gates: GateConfig,
    pub capacity: usize,
    pub next_seq: u64,
    pub features_elided: bool,
    pub entries: Vec<BufferEntry>,
}

impl BufferSnapshot {
    pub const VERSION: u32 = 1;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miniworld::Program;
    use crate::types::{ExecutionFeedback, FeedbackKind, Trajectory};

    fn tag(v: f64, a: f64) -> AffectTag {
        AffectTag {
            valence: v,
            arousal: a,
        }
    }

    fn entry_with(td: f64, t: AffectTag) -> BufferEntry {
        let traj = Trajectory {
            task_id: "t".into(),
            context: "c".into(),
            action: 0,
            prompt_features: vec![0.0; FEATURE_DIM],
            generated_program: Program::empty(),
            execution_feedback: ExecutionFeedback {
                kind: FeedbackKind::SyntaxError,
                detail: String::new(),
            },
            reward: -1.0,
        };
        BufferEntry::new(traj, t, td, 0.6).unwrap()
    }

    /// Entry whose priority is exactly `p` (zero valence, so p = |td|).
    fn entry_p(p: f64) -> BufferEntry {
        entry_with(p, tag(0.0, 0.5))
    }

    fn buf(capacity: usize) -> CosmoBuffer {
        CosmoBuffer::new(capacity, GateConfig::default()).unwrap()
    }

    #[test]
    fn dream_gate_examples() {
        let g = GateConfig::default();
        assert!(is_dream(tag(-0.8, 0.9), &g));
        assert!(!is_dream(tag(-0.8, 0.5), &g));
        assert!(!is_dream(tag(0.0, 0.0), &g));
        // strict at the boundary
        assert!(!is_dream(tag(0.5, 0.9), &g));
        assert!(!is_dream(tag(0.9, 0.7), &g));
    }

    #[test]
    fn prune_gate_examples() {
        let g = GateConfig::default();
        assert!(is_prunable(tag(0.1, 0.2), 0.1, &g));
        assert!(!is_prunable(tag(0.1, 0.2), 0.5, &g));
        assert!(!is_prunable(tag(-0.9, 0.9), 0.0, &g));
        // 0.3 itself does not exceed 0.3
        assert!(is_prunable(tag(0.1, 0.2), 0.3, &g));
        assert!(!is_prunable(tag(0.2, 0.1), 0.0, &g));
    }

    #[test]
    fn eviction_takes_minimum_priority() {
        let mut b = buf(2);
        assert!(b.insert(entry_p(0.9)).unwrap().is_none());
        assert!(b.insert(entry_p(0.5)).unwrap().is_none());
        let ev = b.insert(entry_p(0.7)).unwrap().unwrap();
        assert_eq!(ev.priority, 0.5);
        assert_eq!(b.len(), 2);
        let mut left: Vec<f64> = b.entries().iter().map(|e| e.priority).collect();
        left.sort_by(f64::total_cmp);
        assert_eq!(left, [0.7, 0.9]);
    }

    #[test]
    fn eviction_ties_go_oldest_first() {
        let mut b = buf(2);
        b.insert(entry_p(0.5)).unwrap();
        b.insert(entry_p(0.5)).unwrap();
        let ev = b.insert(entry_p(0.7)).unwrap().unwrap();
        assert_eq!(ev.seq, 0);
    }

    #[test]
    fn eviction_matches_brute_force_over_permutations() {
        // Oracle: among residents pick min priority, then min seq.
        let prios = [0.5, 0.5, 0.2, 0.9, 0.2];
        let mut perm: Vec<usize> = (0..prios.len()).collect();
        let mut count = 0;
        permute(&mut perm, 0, &mut |order| {
            count += 1;
            let mut b = buf(3);
            let mut resident: Vec<(f64, u64)> = Vec::new();
            for (seq, &i) in order.iter().enumerate() {
                let expected = if resident.len() == 3 {
                    let (k, _) = resident
                        .iter()
                        .enumerate()
                        .min_by(|(_, a), (_, b)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                        .unwrap();
                    Some(resident.remove(k))
                } else {
                    None
                };
                resident.push((prios[i], seq as u64));
                let got = b
                    .insert(entry_p(prios[i]))
                    .unwrap()
                    .map(|e| (e.priority, e.seq));
                assert_eq!(got, expected, "order {order:?}");
            }
        });
        assert_eq!(count, 120);
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn eviction_spares_dream_entries_while_lower_non_dream_exists() {
        let mut b = buf(3);
        b.insert(entry_with(0.05, tag(-0.9, 0.9))).unwrap(); // dream, p = 0.536
        b.insert(entry_with(0.3, tag(0.1, 0.1))).unwrap(); // p = 0.306
        b.insert(entry_with(0.0, tag(0.0, 0.0))).unwrap(); // p = 0
        let ev = b.insert(entry_p(0.4)).unwrap().unwrap();
        assert!(!b.is_dream_entry(&ev));
        assert_eq!(ev.priority, 0.0);
    }

    #[test]
    fn multiplier_uniform_cases() {
        let mut b = buf(10);
        for _ in 0..4 {
            b.insert(entry_p(0.1)).unwrap();
        }
        assert_eq!(b.multiplier_weights(), [1.0; 4]);
        let mut d = buf(10);
        for _ in 0..4 {
            d.insert(entry_with(0.0, tag(-0.9, 0.9))).unwrap();
        }
        assert_eq!(d.multiplier_weights(), [5.0; 4]);
    }

    #[test]
    fn empty_buffer_sampling_errors() {
        let b = buf(4);
        let mut rng = Rng::new(1);
        assert!(matches!(
            b.sample_multiplier(4, &mut rng),
            Err(Error::EmptyBuffer)
        ));
        assert!(matches!(
            b.sample_mixture(4, &mut rng),
            Err(Error::EmptyBuffer)
        ));
    }

    #[test]
    fn mixture_split_and_fallback() {
        let mut b = buf(10);
        b.insert(entry_p(0.2)).unwrap();
        b.insert(entry_p(0.3)).unwrap();
        let mut rng = Rng::new(3);
        let batch = b.sample_mixture(10, &mut rng).unwrap();
        assert_eq!(batch.count(Provenance::Uniform), 10);
        b.insert(entry_with(0.1, tag(-0.9, 0.9))).unwrap();
        for _ in 0..50 {
            let batch = b.sample_mixture(10, &mut rng).unwrap();
            assert_eq!(batch.count(Provenance::Dream), 8);
            assert_eq!(batch.count(Provenance::Uniform), 2);
            for item in batch
                .items
                .iter()
                .filter(|i| i.provenance == Provenance::Dream)
            {
                assert!(b.is_dream_entry(b.get(item.index).unwrap()));
            }
        }
    }

    #[test]
    fn dream_share_rounds_up() {
        let b = buf(1);
        let shares: Vec<usize> = (0..=10).map(|n| b.dream_share(n)).collect();
        assert_eq!(shares, [0, 1, 2, 3, 4, 4, 5, 6, 7, 8, 8]);
    }

    fn prune_fixture() -> CosmoBuffer {
        let mut b = buf(10);
        b.insert(entry_with(0.0, tag(0.1, 0.2))).unwrap(); // prunable
        b.insert(entry_with(0.0, tag(-0.15, 0.05))).unwrap(); // prunable
        b.insert(entry_with(0.0, tag(0.1, 0.5))).unwrap(); // arousal too high
        b.insert(entry_with(0.0, tag(-0.9, 0.9))).unwrap(); // dream
        b
    }

    #[test]
    fn prune_truth_table() {
        let g = GateConfig::default();
        let mut b = prune_fixture();
        let expected = b
            .entries()
            .iter()
            .filter(|e| is_prunable(e.tag, 0.1, &g))
            .count();
        assert_eq!(expected, 2);
        assert_eq!(b.prune(0.1, 1.0).unwrap(), 2);
        assert_eq!(b.len(), 2);
        assert_eq!(b.prune(0.1, 1.0).unwrap(), 0);
    }

    #[test]
    fn prune_respects_entropy_escape() {
        let mut b = prune_fixture();
        assert_eq!(b.prune(0.9, 1.0).unwrap(), 0);
        assert_eq!(b.len(), 4);
    }

    #[test]
    fn prune_scale_must_be_positive() {
        let mut b = prune_fixture();
        assert!(b.prune(0.1, 0.0).is_err());
        assert!(b.prune(0.1, -1.0).is_err());
        assert!(b.prune(0.1, f64::NAN).is_err());
    }

    #[test]
    fn huge_prune_scale_never_touches_dream() {
        let mut b = prune_fixture();
        b.prune(0.0, 1e6).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.is_dream_entry(&b.entries()[0]));
    }

    #[test]
    fn occupancy_cases() {
        let mut b = buf(100);
        assert_eq!(
            b.occupancy(),
            Occupancy {
                count: 0,
                fraction: 0.0
            }
        );
        for _ in 0..25 {
            b.insert(entry_p(0.1)).unwrap();
        }
        assert_eq!(
            b.occupancy(),
            Occupancy {
                count: 25,
                fraction: 0.25
            }
        );
        let mut full = buf(3);
        for _ in 0..5 {
            full.insert(entry_p(0.1)).unwrap();
        }
        assert_eq!(full.occupancy().fraction, 1.0);
    }

    #[test]
    fn update_td_keeps_priority_invariant() {
        let mut b = buf(4);
        b.insert(entry_with(0.1, tag(-0.9, 0.9))).unwrap();
        b.insert(entry_p(0.3)).unwrap();
        b.update_td(0, -0.05).unwrap();
        let e = b.find(0).unwrap();
        assert_eq!(e.priority, compute_priority(-0.05, e.tag, 0.6).unwrap());
        assert!(b.update_td(99, 0.0).is_err());
        // the rank index follows: the updated entry (p = 0.536) now outranks 0.3
        b.insert(entry_p(0.9)).unwrap();
        b.insert(entry_p(0.9)).unwrap();
        assert_eq!(b.insert(entry_p(0.9)).unwrap().unwrap().seq, 1);
    }

    #[test]
    fn snapshot_reproduces_sampling() {
        let mut b = buf(50);
        for i in 0..20 {
            let v = if i % 3 == 0 { -0.9 } else { 0.1 };
            b.insert(entry_with(i as f64 / 20.0, tag(v, 0.8))).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        for elide in [false, true] {
            let path = dir.path().join(format!("snap-{elide}.json"));
            b.save_snapshot(&path, elide).unwrap();
            let loaded = CosmoBuffer::load_snapshot(&path).unwrap();
            assert_eq!(loaded.len(), b.len());
            let mut r1 = Rng::new(11);
            let mut r2 = Rng::new(11);
            for _ in 0..5 {
                assert_eq!(
                    b.sample_mixture(16, &mut r1).unwrap(),
                    loaded.sample_mixture(16, &mut r2).unwrap()
                );
                assert_eq!(
                    b.sample_multiplier(16, &mut r1).unwrap(),
                    loaded.sample_multiplier(16, &mut r2).unwrap()
                );
            }
            if !elide {
                assert_eq!(loaded.entries(), b.entries());
            }
        }
    }

    #[test]
    fn coin_flip_prune_keeps_negative_valence() {
        let mut b = buf(100);
        for _ in 0..50 {
            b.insert(entry_with(0.0, tag(-0.5, 0.5))).unwrap();
            b.insert(entry_with(0.0, tag(0.5, 0.5))).unwrap();
        }
        let mut rng = Rng::new(2);
        let removed = b.prune_coin_flip(&mut rng);
        assert!(removed > 0 && removed < 50);
        assert_eq!(
            b.entries().iter().filter(|e| e.tag.valence < 0.0).count(),
            50
        );
    }
}
