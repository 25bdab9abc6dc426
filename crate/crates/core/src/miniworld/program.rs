//! The pipeline DSL and its interpreter.
//!
//! A program runs over the first input table and applies its ops in order.
//! Static problems (unknown table or column, empty projection, a cleared
//! well-formedness flag) are syntax errors and are detected before any row is
//! touched. Type clashes discovered while evaluating are runtime errors.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::table::{Cell, NamedTable, Table};
use crate::types::FeedbackKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
        }
    }

    fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Cmp::Gt => ord == Greater,
            Cmp::Ge => ord != Less,
            Cmp::Lt => ord == Less,
            Cmp::Le => ord != Greater,
            Cmp::Eq => ord == Equal,
            Cmp::Ne => ord != Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggFn {
    Count,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Filter {
        column: String,
        cmp: Cmp,
        value: Cell,
    },
    Project {
        columns: Vec<String>,
    },
    Join {
        table: String,
        left_key: String,
        right_key: String,
    },
    Aggregate {
        group_col: String,
        agg_fn: AggFn,
        target_col: String,
    },
}

impl Op {
    pub fn kind(&self) -> &'static str {
        match self {
            Op::Filter { .. } => "filter",
            Op::Project { .. } => "project",
            Op::Join { .. } => "join",
            Op::Aggregate { .. } => "aggregate",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Filter { column, cmp, value } => {
                write!(f, "filter({column} {} {value})", cmp.symbol())
            }
            Op::Project { columns } => write!(f, "project({})", columns.join(", ")),
            Op::Join {
                table,
                left_key,
                right_key,
            } => write!(f, "join({table}, {left_key} = {right_key})"),
            Op::Aggregate {
                group_col,
                agg_fn,
                target_col,
            } => {
                let name = match agg_fn {
                    AggFn::Count => "count",
                    AggFn::Sum => "sum",
                };
                write!(f, "aggregate({group_col}, {name}({target_col}))")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Program {
    pub ops: Vec<Op>,
    pub well_formed: bool,
}

impl Program {
    pub fn new(ops: Vec<Op>) -> Self {
        Self {
            ops,
            well_formed: true,
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new())
    }

    /// Op kinds joined with `>`, e.g. `filter>project`.
    pub fn shape(&self) -> String {
        self.ops.iter().map(Op::kind).collect::<Vec<_>>().join(">")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = self
            .ops
            .iter()
            .map(|o| o.to_string())
            .collect::<Vec<_>>()
            .join(" | ");
        if self.well_formed {
            write!(f, "{body}")
        } else {
            write!(f, "!malformed {body}")
        }
    }
}

/// Why a program failed to produce a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecFailure {
    pub kind: FeedbackKind,
    pub detail: String,
}

impl ExecFailure {
    fn syntax(detail: impl Into<String>) -> Self {
        Self {
            kind: FeedbackKind::SyntaxError,
            detail: detail.into(),
        }
    }

    fn runtime(detail: impl Into<String>) -> Self {
        Self {
            kind: FeedbackKind::RuntimeError,
            detail: detail.into(),
        }
    }
}

fn lookup<'a>(tables: &'a [NamedTable], name: &str) -> Option<&'a Table> {
    tables.iter().find(|t| t.name == name).map(|t| &t.table)
}

fn joined_columns(
    left: &[String],
    right_name: &str,
    right: &[String],
    right_key: &str,
) -> Vec<String> {
    let mut cols = left.to_vec();
    for c in right.iter().filter(|c| c.as_str() != right_key) {
        if left.contains(c) {
            cols.push(format!("{right_name}.{c}"));
        } else {
            cols.push(c.clone());
        }
    }
    cols
}

fn aggregate_column(agg_fn: AggFn) -> &'static str {
    match agg_fn {
        AggFn::Count => "count",
        AggFn::Sum => "sum",
    }
}

/// Column names flowing out of every op prefix: `schemas[i]` is the input
/// schema of op `i`, and the last element is the output schema.
pub fn schemas(program: &Program, tables: &[NamedTable]) -> Result<Vec<Vec<String>>, ExecFailure> {
    let source = tables
        .first()
        .ok_or_else(|| ExecFailure::syntax("no input table"))?;
    let mut current = source.table.columns().to_vec();
    let mut out = vec![current.clone()];
    let has = |cols: &[String], c: &str| cols.iter().any(|x| x == c);
    for (i, op) in program.ops.iter().enumerate() {
        current = match op {
            Op::Filter { column, .. } => {
                if !has(&current, column) {
                    return Err(ExecFailure::syntax(format!(
                        "op {i}: unknown column `{column}`"
                    )));
                }
                current
            }
            Op::Project { columns } => {
                if columns.is_empty() {
                    return Err(ExecFailure::syntax(format!(
                        "op {i}: project needs at least one column"
                    )));
                }
                if let Some(c) = columns.iter().find(|c| !has(&current, c)) {
                    return Err(ExecFailure::syntax(format!("op {i}: unknown column `{c}`")));
                }
                for (j, c) in columns.iter().enumerate() {
                    if columns[..j].contains(c) {
                        return Err(ExecFailure::syntax(format!(
                            "op {i}: duplicate column `{c}`"
                        )));
                    }
                }
                columns.clone()
            }
            Op::Join {
                table,
                left_key,
                right_key,
            } => {
                let right = lookup(tables, table).ok_or_else(|| {
                    ExecFailure::syntax(format!("op {i}: unknown table `{table}`"))
                })?;
                if !has(&current, left_key) {
                    return Err(ExecFailure::syntax(format!(
                        "op {i}: unknown column `{left_key}`"
                    )));
                }
                if right.column_index(right_key).is_none() {
                    return Err(ExecFailure::syntax(format!(
                        "op {i}: unknown column `{table}.{right_key}`"
                    )));
                }
                joined_columns(&current, table, right.columns(), right_key)
            }
            Op::Aggregate {
                group_col,
                agg_fn,
                target_col,
            } => {
                for c in [group_col, target_col] {
                    if !has(&current, c) {
                        return Err(ExecFailure::syntax(format!("op {i}: unknown column `{c}`")));
                    }
                }
                vec![group_col.clone(), aggregate_column(*agg_fn).to_string()]
            }
        };
        out.push(current.clone());
    }
    Ok(out)
}

fn apply(op: &Op, input: Table, tables: &[NamedTable]) -> Result<Table, ExecFailure> {
    let idx = |t: &Table, c: &str| t.column_index(c).expect("schema checked");
    let table = match op {
        Op::Filter { column, cmp, value } => {
            let ci = idx(&input, column);
            let mut rows = Vec::new();
            for row in input.rows() {
                let ord = row[ci].compare(value).ok_or_else(|| {
                    ExecFailure::runtime(format!(
                        "cannot compare {} column `{column}` with {} literal",
                        row[ci].type_name(),
                        value.type_name()
                    ))
                })?;
                if cmp.holds(ord) {
                    rows.push(row.clone());
                }
            }
            Table::new(input.columns().to_vec(), rows)
        }
        Op::Project { columns } => {
            let picks: Vec<usize> = columns.iter().map(|c| idx(&input, c)).collect();
            let rows = input
                .rows()
                .iter()
                .map(|r| picks.iter().map(|&i| r[i].clone()).collect())
                .collect();
            Table::new(columns.clone(), rows)
        }
        Op::Join {
            table,
            left_key,
            right_key,
        } => {
            let right = lookup(tables, table).expect("schema checked");
            let li = idx(&input, left_key);
            let ri = idx(right, right_key);
            let mut rows = Vec::new();
            for l in input.rows() {
                for r in right.rows() {
                    if l[li] == r[ri] {
                        let mut row = l.clone();
                        row.extend(
                            r.iter()
                                .enumerate()
                                .filter(|(j, _)| *j != ri)
                                .map(|(_, c)| c.clone()),
                        );
                        rows.push(row);
                    }
                }
            }
            Table::new(
                joined_columns(input.columns(), table, right.columns(), right_key),
                rows,
            )
        }
        Op::Aggregate {
            group_col,
            agg_fn,
            target_col,
        } => {
            let gi = idx(&input, group_col);
            let ti = idx(&input, target_col);
            let mut groups: BTreeMap<Cell, i64> = BTreeMap::new();
            for row in input.rows() {
                let add = match agg_fn {
                    AggFn::Count => 1,
                    AggFn::Sum => match &row[ti] {
                        Cell::Int(v) => *v,
                        other => {
                            return Err(ExecFailure::runtime(format!(
                                "cannot sum {} column `{target_col}`",
                                other.type_name()
                            )))
                        }
                    },
                };
                *groups.entry(row[gi].clone()).or_insert(0) += add;
            }
            let rows = groups
                .into_iter()
                .map(|(k, v)| vec![k, Cell::Int(v)])
                .collect();
            Table::new(
                vec![group_col.clone(), aggregate_column(*agg_fn).to_string()],
                rows,
            )
        }
    };
    Ok(table.expect("operators preserve table invariants"))
}

/// Evaluate a program over `tables` (the first table is the pipeline source).
pub fn run(program: &Program, tables: &[NamedTable]) -> Result<Table, ExecFailure> {
    if !program.well_formed {
        return Err(ExecFailure::syntax("program is flagged ill-formed"));
    }
    schemas(program, tables)?;
    let mut current = tables[0].table.clone();
    for op in &program.ops {
        current = apply(op, current, tables)?;
    }
    Ok(current)
}

pub const REWARD_PASS: f64 = 1.0;
pub const REWARD_SEMANTIC: f64 = -0.5;
pub const REWARD_FAILED: f64 = -1.0;

/// Result of running a candidate against a hidden test.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub kind: FeedbackKind,
    pub detail: String,
    pub output: Option<Table>,
    pub reward: f64,
}

/// Run `program` and grade it against `expected`.
///
/// Syntax and runtime errors earn -1.0, a wrong table -0.5, an exact
/// (row-order-insensitive) match +1.0.
pub fn execute(program: &Program, tables: &[NamedTable], expected: &Table) -> Outcome {
    match run(program, tables) {
        Err(fail) => Outcome {
            kind: fail.kind,
            detail: fail.detail,
            output: None,
            reward: REWARD_FAILED,
        },
        Ok(out) if out.same_contents(expected) => Outcome {
            kind: FeedbackKind::Pass,
            detail: String::new(),
            output: Some(out),
            reward: REWARD_PASS,
        },
        Ok(out) => Outcome {
            kind: FeedbackKind::SemanticError,
            detail: format!("output has {} rows, expected {}", out.len(), expected.len()),
            output: Some(out),
            reward: REWARD_SEMANTIC,
        },
    }
}
