mod common;

use common::{entry, trajectory};
use cosmocore::buffer::{
    is_dream, is_prunable, scaled_prune_thresholds, CosmoBuffer, GateConfig, Provenance,
};
use cosmocore::miniworld::{Agent, AgentConfig};
use cosmocore::nocturnal::{consolidate, ConsolidateParams, NocturnalState, ReplayMode};
use cosmocore::rng::Rng;
use cosmocore::types::{AffectTag, BufferEntry};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Insert { td: f64, v: f64, a: f64 },
    Prune { entropy: f64, scale: f64 },
    UpdateTd { pick: usize, td: f64 },
    Sample { batch: usize, mixture: bool },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (-2.0..2.0f64, -1.0..=1.0f64, 0.0..=1.0f64).prop_map(|(td, v, a)| Op::Insert { td, v, a }),
        1 => (0.0..=1.0f64, 0.1..3.0f64).prop_map(|(entropy, scale)| Op::Prune { entropy, scale }),
        1 => (any::<usize>(), -2.0..2.0f64).prop_map(|(pick, td)| Op::UpdateTd { pick, td }),
        1 => (1usize..20, any::<bool>()).prop_map(|(batch, mixture)| Op::Sample { batch, mixture }),
    ]
}

fn tag() -> impl Strategy<Value = AffectTag> {
    (-1.0..=1.0f64, 0.0..=1.0f64).prop_map(|(valence, arousal)| AffectTag { valence, arousal })
}

proptest! {
    #[test]
    fn random_op_sequences_keep_invariants(cap in 1usize..12, ops in prop::collection::vec(op(), 1..80), seed in any::<u64>()) {
        let mut buf = CosmoBuffer::new(cap, GateConfig::default()).unwrap();
        let mut rng = Rng::new(seed);
        for op in ops {
            match op {
                Op::Insert { td, v, a } => {
                    let before: Vec<BufferEntry> = buf.entries().to_vec();
                    let e = entry(td, v, a);
                    let evicted = buf.insert(e).unwrap();
                    if let Some(ev) = evicted {
                        prop_assert_eq!(before.len(), cap);
                        // The evicted entry had the minimum priority, oldest on ties.
                        for other in &before {
                            prop_assert!(ev.priority < other.priority || (ev.priority == other.priority && ev.seq <= other.seq));
                        }
                        // Never a dream entry while a strictly lower non-dream one existed.
                        if buf.is_dream_entry(&ev) {
                            prop_assert!(!before.iter().any(|o| !buf.is_dream_entry(o) && o.priority < ev.priority));
                        }
                    }
                }
                Op::Prune { entropy, scale } => {
                    let dreams: Vec<u64> = buf.entries().iter().filter(|e| buf.is_dream_entry(e)).map(|e| e.seq).collect();
                    buf.prune(entropy, scale).unwrap();
                    for s in dreams {
                        prop_assert!(buf.find(s).is_some());
                    }
                    let (v_max, a_max) = scaled_prune_thresholds(buf.gates(), scale);
                    if entropy <= 0.3 {
                        prop_assert!(!buf.entries().iter().any(|e| e.tag.valence.abs() < v_max && e.tag.arousal < a_max));
                    }
                }
                Op::UpdateTd { pick, td } => {
                    if !buf.is_empty() {
                        let seq = buf.entries()[pick % buf.len()].seq;
                        buf.update_td(seq, td).unwrap();
                        let e = buf.find(seq).unwrap();
                        prop_assert!((e.priority - (td.abs() + 0.6 * e.tag.valence.abs() * e.tag.arousal)).abs() < 1e-12);
                    }
                }
                Op::Sample { batch, mixture } => {
                    if buf.is_empty() {
                        prop_assert!(buf.sample_uniform(batch, &mut rng).is_err());
                    } else if mixture {
                        let b = buf.sample_mixture(batch, &mut rng).unwrap();
                        prop_assert_eq!(b.len(), batch);
                        let expected = if buf.dream_count() > 0 { buf.dream_share(batch) } else { 0 };
                        prop_assert_eq!(b.count(Provenance::Dream), expected);
                    } else {
                        let b = buf.sample_multiplier(batch, &mut rng).unwrap();
                        prop_assert_eq!(b.len(), batch);
                        prop_assert!(b.items.iter().all(|i| i.index < buf.len()));
                    }
                }
            }
            prop_assert!(buf.len() <= cap);
            prop_assert_eq!(buf.occupancy().count, buf.len());
        }
    }

    #[test]
    fn gates_never_overlap(t in tag(), e in 0.0..=1.0f64, scale in 0.01..50.0f64) {
        let g = GateConfig::default();
        prop_assert!(!(is_dream(t, &g) && is_prunable(t, e, &g)));
        let (v, a) = scaled_prune_thresholds(&g, scale);
        prop_assert!(v <= g.dream_valence_threshold && a <= g.dream_arousal_threshold);
    }

    #[test]
    fn snapshot_reload_reproduces_draws(tags in prop::collection::vec(tag(), 1..15), seed in any::<u64>(), elide in any::<bool>()) {
        let mut buf = CosmoBuffer::new(100, GateConfig::default()).unwrap();
        for (i, t) in tags.iter().enumerate() {
            buf.insert(entry(i as f64 * 0.1, t.valence, t.arousal)).unwrap();
        }
        let back = CosmoBuffer::from_snapshot(buf.snapshot(elide)).unwrap();
        let (mut r1, mut r2) = (Rng::new(seed), Rng::new(seed));
        prop_assert_eq!(buf.sample_mixture(16, &mut r1).unwrap(), back.sample_mixture(16, &mut r2).unwrap());
        prop_assert_eq!(buf.sample_multiplier(16, &mut r1).unwrap(), back.sample_multiplier(16, &mut r2).unwrap());
    }

    #[test]
    fn consolidation_never_grows_buffer_and_splits_exactly(
        tags in prop::collection::vec(tag(), 1..30),
        batch in 1usize..16,
        n_batches in 0usize..4,
        entropy in 0.0..=1.0f64,
        seed in any::<u64>(),
    ) {
        let mut agent = Agent::new(AgentConfig::default()).unwrap();
        agent.add_context("c", 3).unwrap();
        let mut buf = CosmoBuffer::new(1000, GateConfig::default()).unwrap();
        for (i, t) in tags.iter().enumerate() {
            let reward = if t.valence > 0.0 { 1.0 } else { -0.5 };
            let e = BufferEntry::new(trajectory("c", i % 3, reward), *t, reward, 0.6).unwrap();
            buf.insert(e).unwrap();
        }
        let had_dream = buf.dream_count() > 0;
        let mut state = NocturnalState::default();
        let params = ConsolidateParams {
            batch_size: batch,
            n_batches,
            policy_entropy: entropy,
            variance_floor: 0.1,
            mode: ReplayMode::Mixture,
            prune: true,
        };
        let before = buf.len();
        let report = consolidate(&mut buf, &mut agent, &mut state, &params, &mut Rng::new(seed)).unwrap();
        prop_assert!(buf.len() <= before);
        prop_assert_eq!(report.occupancy_after, buf.len());
        prop_assert_eq!(report.batches, n_batches);
        let share = buf.dream_share(batch);
        for &(d, u) in &report.batch_provenance {
            if had_dream {
                prop_assert_eq!((d, u), (share, batch - share));
            } else {
                prop_assert_eq!((d, u), (0, batch));
            }
        }
        prop_assert!((0.5..=2.0).contains(&state.prune_scale()));
    }
}
