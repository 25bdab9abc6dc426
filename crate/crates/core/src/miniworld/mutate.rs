//! Systematic bug injection.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::program::{schemas, AggFn, Cmp, Op, Program};
use super::table::{Cell, NamedTable};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BugKind {
    WrongPredicate,
    WrongJoinKey,
    WrongAggregation,
    MalformedOp,
}

impl BugKind {
    pub const ALL: [BugKind; 4] = [
        BugKind::WrongPredicate,
        BugKind::WrongJoinKey,
        BugKind::WrongAggregation,
        BugKind::MalformedOp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BugKind::WrongPredicate => "wrong_predicate",
            BugKind::WrongJoinKey => "wrong_join_key",
            BugKind::WrongAggregation => "wrong_aggregation",
            BugKind::MalformedOp => "malformed_op",
        }
    }
}

impl fmt::Display for BugKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn inapplicable(kind: BugKind, reason: &str) -> Error {
    Error::InapplicableMutation {
        kind: kind.name().to_string(),
        reason: reason.to_string(),
    }
}

fn flip_strictness(cmp: Cmp) -> Cmp {
    match cmp {
        Cmp::Gt => Cmp::Ge,
        Cmp::Ge => Cmp::Gt,
        Cmp::Lt => Cmp::Le,
        Cmp::Le => Cmp::Lt,
        Cmp::Eq => Cmp::Ne,
        Cmp::Ne => Cmp::Eq,
    }
}

fn with_op(reference: &Program, i: usize, op: Op) -> Program {
    let mut p = reference.clone();
    p.ops[i] = op;
    p
}

fn input_schemas(
    reference: &Program,
    tables: &[NamedTable],
    kind: BugKind,
) -> Result<Vec<Vec<String>>> {
    schemas(reference, tables).map_err(|e| {
        inapplicable(
            kind,
            &format!("reference does not type-check: {}", e.detail),
        )
    })
}

/// Every program reachable from `reference` by one bug of the given kind.
///
/// The reference itself is never part of the space. Order is deterministic.
pub fn mutation_space(
    reference: &Program,
    kind: BugKind,
    tables: &[NamedTable],
) -> Result<Vec<Program>> {
    let mut space = Vec::new();
    match kind {
        BugKind::WrongPredicate => {
            for (i, op) in reference.ops.iter().enumerate() {
                if let Op::Filter { column, cmp, value } = op {
                    if let Cell::Int(v) = value {
                        for lit in [v - 1, v + 1] {
                            space.push(with_op(
                                reference,
                                i,
                                Op::Filter {
                                    column: column.clone(),
                                    cmp: *cmp,
                                    value: Cell::Int(lit),
                                },
                            ));
                        }
                    }
                    space.push(with_op(
                        reference,
                        i,
                        Op::Filter {
                            column: column.clone(),
                            cmp: flip_strictness(*cmp),
                            value: value.clone(),
                        },
                    ));
                }
            }
            if space.is_empty() {
                return Err(inapplicable(kind, "program has no filter"));
            }
        }
        BugKind::WrongJoinKey => {
            let schemas = input_schemas(reference, tables, kind)?;
            for (i, op) in reference.ops.iter().enumerate() {
                if let Op::Join {
                    table,
                    left_key,
                    right_key,
                } = op
                {
                    let join = |l: &str, r: &str| Op::Join {
                        table: table.clone(),
                        left_key: l.to_string(),
                        right_key: r.to_string(),
                    };
                    if left_key != right_key {
                        space.push(with_op(reference, i, join(right_key, left_key)));
                    }
                    for c in schemas[i].iter().filter(|c| *c != left_key) {
                        space.push(with_op(reference, i, join(c, right_key)));
                    }
                    let right = tables
                        .iter()
                        .find(|t| &t.name == table)
                        .map(|t| t.table.columns().to_vec());
                    for c in right.unwrap_or_default().iter().filter(|c| *c != right_key) {
                        space.push(with_op(reference, i, join(left_key, c)));
                    }
                }
            }
            if space.is_empty() {
                return Err(inapplicable(kind, "program has no join"));
            }
        }
        BugKind::WrongAggregation => {
            let schemas = input_schemas(reference, tables, kind)?;
            for (i, op) in reference.ops.iter().enumerate() {
                if let Op::Aggregate {
                    group_col,
                    agg_fn,
                    target_col,
                } = op
                {
                    let agg = |g: &str, f: AggFn, t: &str| Op::Aggregate {
                        group_col: g.to_string(),
                        agg_fn: f,
                        target_col: t.to_string(),
                    };
                    let flipped = match agg_fn {
                        AggFn::Count => AggFn::Sum,
                        AggFn::Sum => AggFn::Count,
                    };
                    space.push(with_op(reference, i, agg(group_col, flipped, target_col)));
                    for c in schemas[i].iter().filter(|c| *c != group_col) {
                        space.push(with_op(reference, i, agg(c, *agg_fn, target_col)));
                    }
                    for c in schemas[i].iter().filter(|c| *c != target_col) {
                        space.push(with_op(reference, i, agg(group_col, *agg_fn, c)));
                    }
                }
            }
            if space.is_empty() {
                return Err(inapplicable(kind, "program has no aggregate"));
            }
        }
        BugKind::MalformedOp => {
            let typo = |s: &str| format!("{s}_");
            for (i, op) in reference.ops.iter().enumerate() {
                let broken = match op {
                    Op::Filter { column, cmp, value } => Op::Filter {
                        column: typo(column),
                        cmp: *cmp,
                        value: value.clone(),
                    },
                    Op::Project { .. } => Op::Project {
                        columns: Vec::new(),
                    },
                    Op::Join {
                        table,
                        left_key,
                        right_key,
                    } => Op::Join {
                        table: typo(table),
                        left_key: left_key.clone(),
                        right_key: right_key.clone(),
                    },
                    Op::Aggregate {
                        group_col,
                        agg_fn,
                        target_col,
                    } => Op::Aggregate {
                        group_col: typo(group_col),
                        agg_fn: *agg_fn,
                        target_col: target_col.clone(),
                    },
                };
                let mut p = with_op(reference, i, broken);
                p.well_formed = false;
                space.push(p);
            }
            if space.is_empty() {
                space.push(Program {
                    ops: vec![Op::Project {
                        columns: Vec::new(),
                    }],
                    well_formed: false,
                });
            }
        }
    }
    space.retain(|p| p != reference);
    let mut seen = Vec::with_capacity(space.len());
    for p in space {
        if !seen.contains(&p) {
            seen.push(p);
        }
    }
    Ok(seen)
}

/// Inject one bug of `kind` into `reference`, chosen uniformly from the
/// mutation space.
pub fn mutate(
    reference: &Program,
    kind: BugKind,
    tables: &[NamedTable],
    rng: &mut Rng,
) -> Result<Program> {
    let space = mutation_space(reference, kind, tables)?;
    if space.is_empty() {
        return Err(inapplicable(kind, "no distinct mutant exists"));
    }
    Ok(space[rng.index(space.len())].clone())
}
