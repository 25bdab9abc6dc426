//! Task corpus: generation, fixture files and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::stable_hash;
use super::mutate::{mutation_space, BugKind};
use super::program::{execute, run, AggFn, Cmp, Op, Program};
use super::table::{Cell, NamedTable, Table};
use crate::error::{validation, Result};
use crate::rng::Rng;
use crate::types::FeedbackKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    /// Tasks sharing a context share the agent's preference weights.
    pub context: String,
    pub prompt: String,
    pub tables: Vec<NamedTable>,
    pub reference: Program,
    /// Hidden test: the table a correct program must produce.
    pub expected: Table,
    /// Bug kind injected into each non-reference candidate slot.
    pub candidate_bugs: Vec<BugKind>,
}

impl TaskSpec {
    /// Candidate programs: the reference in slot 0, then one failing mutant per
    /// entry of `candidate_bugs`. Deterministic in the task id.
    pub fn candidates(&self) -> Result<Vec<Program>> {
        let mut rng = Rng::new(stable_hash(&self.id));
        let mut out = vec![self.reference.clone()];
        for &kind in &self.candidate_bugs {
            let failing: Vec<Program> = mutation_space(&self.reference, kind, &self.tables)?
                .into_iter()
                .filter(|p| execute(p, &self.tables, &self.expected).kind != FeedbackKind::Pass)
                .collect();
            let fresh: Vec<&Program> = failing.iter().filter(|p| !out.contains(p)).collect();
            let pick = if !fresh.is_empty() {
                fresh[rng.index(fresh.len())].clone()
            } else if !failing.is_empty() {
                failing[rng.index(failing.len())].clone()
            } else {
                return Err(validation(format!(
                    "task {}: no failing {kind} mutant",
                    self.id
                )));
            };
            out.push(pick);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let outcome = execute(&self.reference, &self.tables, &self.expected);
        if outcome.kind != FeedbackKind::Pass {
            return Err(validation(format!(
                "task {}: reference program does not pass its hidden test ({:?}: {})",
                self.id, outcome.kind, outcome.detail
            )));
        }
        self.candidates()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusCheck {
    pub id: String,
    pub ok: bool,
    pub detail: String,
}

/// Re-execute every reference program against its hidden test.
pub fn validate_corpus(tasks: &[TaskSpec]) -> Vec<CorpusCheck> {
    tasks
        .iter()
        .map(|t| match t.validate() {
            Ok(()) => CorpusCheck {
                id: t.id.clone(),
                ok: true,
                detail: String::new(),
            },
            Err(e) => CorpusCheck {
                id: t.id.clone(),
                ok: false,
                detail: e.to_string(),
            },
        })
        .collect()
}

pub fn save_corpus(tasks: &[TaskSpec], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in tasks {
        let mut body = serde_json::to_string_pretty(t)?;
        body.push('\n');
        std::fs::write(dir.join(format!("{}.json", t.id)), body)?;
    }
    Ok(())
}

/// Load every `*.json` task in `dir`, ordered by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<TaskSpec>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut tasks = Vec::with_capacity(paths.len());
    for p in paths {
        tasks.push(serde_json::from_str(&std::fs::read_to_string(&p)?)?);
    }
    if tasks.is_empty() {
        return Err(validation(format!("no task files in {}", dir.display())));
    }
    Ok(tasks)
}

pub const CORPUS_SEED: u64 = 20;
pub const TASKS_PER_CONTEXT: usize = 6;
pub const CONTEXTS: [&str; 4] = ["filter", "join", "aggregate", "pipeline"];

const REGIONS: [&str; 4] = ["north", "south", "east", "west"];
const TIERS: [&str; 3] = ["gold", "silver", "bronze"];
const NAMES: [&str; 6] = ["ada", "bo", "cy", "dee", "eli", "fay"];
const PRODUCTS: [&str; 4] = ["lamp", "desk", "sofa", "rug"];

fn s(x: &str) -> String {
    x.to_string()
}

fn orders(rng: &mut Rng, customers: usize) -> NamedTable {
    let n = 6 + rng.index(4);
    let rows = (0..n)
        .map(|i| {
            vec![
                Cell::Int(i as i64 + 1),
                Cell::Int(10 + rng.index(customers) as i64),
                Cell::Int(1 + rng.index(20) as i64),
                Cell::from(REGIONS[rng.index(REGIONS.len())]),
            ]
        })
        .collect();
    NamedTable {
        name: s("orders"),
        table: Table::new(vec![s("id"), s("cust_id"), s("amount"), s("region")], rows)
            .expect("rectangular"),
    }
}

fn customers(rng: &mut Rng, count: usize) -> NamedTable {
    let rows = (0..count)
        .map(|i| {
            vec![
                Cell::Int(10 + i as i64),
                Cell::from(NAMES[(i + rng.index(2)) % NAMES.len()]),
                Cell::from(TIERS[rng.index(TIERS.len())]),
            ]
        })
        .collect();
    NamedTable {
        name: s("customers"),
        table: Table::new(vec![s("cid"), s("name"), s("tier")], rows).expect("rectangular"),
    }
}

fn sales(rng: &mut Rng) -> NamedTable {
    let n = 6 + rng.index(4);
    let rows = (0..n)
        .map(|_| {
            vec![
                Cell::from(REGIONS[rng.index(REGIONS.len())]),
                Cell::from(PRODUCTS[rng.index(PRODUCTS.len())]),
                Cell::Int(1 + rng.index(9) as i64),
                Cell::Int(5 + rng.index(30) as i64),
            ]
        })
        .collect();
    NamedTable {
        name: s("sales"),
        table: Table::new(
            vec![s("region"), s("product"), s("units"), s("price")],
            rows,
        )
        .expect("rectangular"),
    }
}

fn draft(context: &str, rng: &mut Rng) -> (String, Vec<NamedTable>, Program, Vec<BugKind>) {
    use BugKind::*;
    match context {
        "filter" => {
            let cmp = [Cmp::Gt, Cmp::Ge, Cmp::Lt, Cmp::Le][rng.index(4)];
            let lit = 4 + rng.index(12) as i64;
            let cols = if rng.index(2) == 0 {
                vec![s("id"), s("amount")]
            } else {
                vec![s("id"), s("region"), s("amount")]
            };
            let prompt = format!(
                "From orders keep rows where amount {} {lit} and return {}",
                cmp.symbol(),
                cols.join(", ")
            );
            let n_cust = 3;
            let tables = vec![orders(rng, n_cust)];
            let program = Program::new(vec![
                Op::Filter {
                    column: s("amount"),
                    cmp,
                    value: Cell::Int(lit),
                },
                Op::Project { columns: cols },
            ]);
            (
                prompt,
                tables,
                program,
                vec![
                    WrongPredicate,
                    WrongPredicate,
                    MalformedOp,
                    WrongPredicate,
                    MalformedOp,
                ],
            )
        }
        "join" => {
            let n_cust = 3 + rng.index(2);
            let tables = vec![orders(rng, n_cust), customers(rng, n_cust)];
            let extra = [s("name"), s("tier")][rng.index(2)].clone();
            let prompt =
                format!("Join orders with customers on cust_id = cid and return id, {extra}");
            let program = Program::new(vec![
                Op::Join {
                    table: s("customers"),
                    left_key: s("cust_id"),
                    right_key: s("cid"),
                },
                Op::Project {
                    columns: vec![s("id"), extra],
                },
            ]);
            (
                prompt,
                tables,
                program,
                vec![
                    WrongJoinKey,
                    WrongJoinKey,
                    MalformedOp,
                    WrongJoinKey,
                    MalformedOp,
                ],
            )
        }
        "aggregate" => {
            let agg_fn = [AggFn::Sum, AggFn::Count][rng.index(2)];
            let target = [s("units"), s("price")][rng.index(2)].clone();
            let prompt = match agg_fn {
                AggFn::Sum => format!("Total {target} per region in sales"),
                AggFn::Count => "Count sales rows per region".to_string(),
            };
            let tables = vec![sales(rng)];
            let program = Program::new(vec![Op::Aggregate {
                group_col: s("region"),
                agg_fn,
                target_col: target,
            }]);
            (
                prompt,
                tables,
                program,
                vec![
                    WrongAggregation,
                    WrongAggregation,
                    MalformedOp,
                    WrongAggregation,
                    MalformedOp,
                ],
            )
        }
        "pipeline" => {
            let lit = 5 + rng.index(8) as i64;
            let n_cust = 3 + rng.index(2);
            let tables = vec![orders(rng, n_cust), customers(rng, n_cust)];
            let prompt = format!(
                "For orders with amount >= {lit}, join customers on cust_id = cid and sum amount per tier"
            );
            let program = Program::new(vec![
                Op::Filter {
                    column: s("amount"),
                    cmp: Cmp::Ge,
                    value: Cell::Int(lit),
                },
                Op::Join {
                    table: s("customers"),
                    left_key: s("cust_id"),
                    right_key: s("cid"),
                },
                Op::Aggregate {
                    group_col: s("tier"),
                    agg_fn: AggFn::Sum,
                    target_col: s("amount"),
                },
            ]);
            (
                prompt,
                tables,
                program,
                vec![
                    WrongPredicate,
                    WrongJoinKey,
                    WrongAggregation,
                    MalformedOp,
                    MalformedOp,
                ],
            )
        }
        other => unreachable!("unknown context {other}"),
    }
}

/// Generate `per_context` tasks for each context, interleaved by context.
///
/// Drafts whose reference output is empty, or whose candidate slots cannot
/// all be filled with failing mutants, are redrawn.
pub fn generate_corpus(seed: u64, per_context: usize) -> Vec<TaskSpec> {
    let mut rng = Rng::new(seed);
    let mut tasks = Vec::with_capacity(per_context * CONTEXTS.len());
    for _ in 0..per_context {
        for context in CONTEXTS {
            let id = format!("t{:02}_{context}", tasks.len());
            let task = loop {
                let (prompt, tables, reference, candidate_bugs) = draft(context, &mut rng);
                let Ok(expected) = run(&reference, &tables) else {
                    continue;
                };
                if expected.is_empty() {
                    continue;
                }
                let task = TaskSpec {
                    id: id.clone(),
                    context: context.to_string(),
                    prompt,
                    tables,
                    reference,
                    expected,
                    candidate_bugs,
                };
                if task.validate().is_ok() {
                    break task;
                }
            };
            tasks.push(task);
        }
    }
    tasks
}

/// The corpus shipped under `fixtures/corpus`.
pub fn builtin_corpus() -> Vec<TaskSpec> {
    generate_corpus(CORPUS_SEED, TASKS_PER_CONTEXT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn builtin_corpus_is_valid_and_covers_everything() {
        let tasks = builtin_corpus();
        assert!(tasks.len() >= 20);
        assert!(validate_corpus(&tasks).iter().all(|c| c.ok));
        let kinds: BTreeSet<&str> = tasks
            .iter()
            .flat_map(|t| t.reference.ops.iter().map(Op::kind))
            .collect();
        assert_eq!(kinds.len(), 4);
        let bugs: BTreeSet<BugKind> = tasks
            .iter()
            .flat_map(|t| t.candidate_bugs.iter().copied())
            .collect();
        assert_eq!(bugs.len(), 4);
    }

    #[test]
    fn candidates_are_reference_plus_failing_mutants() {
        for task in builtin_corpus() {
            let c = task.candidates().unwrap();
            assert_eq!(c.len(), 1 + task.candidate_bugs.len());
            assert_eq!(c[0], task.reference);
            for p in &c[1..] {
                assert_ne!(
                    execute(p, &task.tables, &task.expected).kind,
                    FeedbackKind::Pass
                );
            }
            assert_eq!(c, task.candidates().unwrap());
        }
    }

    #[test]
    fn corrupted_hidden_test_is_reported() {
        let mut tasks = builtin_corpus();
        tasks[0].expected = Table::new(tasks[0].expected.columns().to_vec(), vec![]).unwrap();
        let checks = validate_corpus(&tasks);
        assert!(!checks[0].ok);
        assert!(checks[1..].iter().all(|c| c.ok));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tasks = builtin_corpus();
        save_corpus(&tasks, dir.path()).unwrap();
        assert_eq!(load_corpus(dir.path()).unwrap(), tasks);
    }
}
