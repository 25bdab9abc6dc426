use std::collections::BTreeSet;
use std::path::PathBuf;

use cosmocore::miniworld::{
    builtin_corpus, execute, load_corpus, save_corpus, validate_corpus, BugKind, Op, REWARD_PASS,
};
use cosmocore::types::FeedbackKind;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus")
}

#[test]
fn shipped_fixtures_match_the_generator() {
    assert_eq!(load_corpus(&fixtures()).unwrap(), builtin_corpus());
}

#[test]
fn shipped_fixtures_validate() {
    let tasks = load_corpus(&fixtures()).unwrap();
    assert!(tasks.len() >= 20);
    for check in validate_corpus(&tasks) {
        assert!(check.ok, "{}: {}", check.id, check.detail);
    }
    for t in &tasks {
        let out = execute(&t.reference, &t.tables, &t.expected);
        assert_eq!((out.kind, out.reward), (FeedbackKind::Pass, REWARD_PASS));
    }
}

#[test]
fn corpus_spans_every_op_and_bug_kind() {
    let tasks = builtin_corpus();
    let ops: BTreeSet<&str> = tasks
        .iter()
        .flat_map(|t| t.reference.ops.iter().map(Op::kind))
        .collect();
    assert_eq!(ops.len(), 4);
    let bugs: BTreeSet<BugKind> = tasks
        .iter()
        .flat_map(|t| t.candidate_bugs.iter().copied())
        .collect();
    assert_eq!(bugs.len(), BugKind::ALL.len());
}

#[test]
fn every_candidate_but_the_reference_fails() {
    for t in builtin_corpus() {
        let cands = t.candidates().unwrap();
        assert_eq!(cands[0], t.reference);
        for c in &cands[1..] {
            let out = execute(c, &t.tables, &t.expected);
            assert!(out.reward < 0.0, "{} candidate {c} passes", t.id);
        }
    }
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = builtin_corpus();
    save_corpus(&tasks, dir.path()).unwrap();
    assert_eq!(load_corpus(dir.path()).unwrap(), tasks);
}
