//! Fixed-width feature encoding of (prompt, program, reward).

use super::program::{AggFn, Op, Program};
use crate::types::FEATURE_DIM;

pub const PROMPT_DIMS: usize = 256;
pub const PROGRAM_DIMS: usize = 255;

// 64-bit FNV-1a; stable across platforms and releases, unlike std's hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn stable_hash(s: &str) -> u64 {
    fnv1a(s.as_bytes())
}

pub fn prompt_tokens(prompt: &str) -> Vec<String> {
    prompt
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

pub fn program_tokens(program: &Program) -> Vec<String> {
    let mut toks = Vec::new();
    if !program.well_formed {
        toks.push("malformed".to_string());
    }
    for (i, op) in program.ops.iter().enumerate() {
        let k = op.kind();
        toks.push(format!("op:{k}"));
        toks.push(format!("{k}@{i}"));
        match op {
            Op::Filter { column, cmp, value } => {
                toks.push(format!("{k}.col:{column}"));
                toks.push(format!("{k}.cmp:{}", cmp.symbol()));
                toks.push(format!("{k}.lit:{value}"));
            }
            Op::Project { columns } => {
                toks.push(format!("{k}.arity:{}", columns.len()));
                toks.extend(columns.iter().map(|c| format!("{k}.col:{c}")));
            }
            Op::Join {
                table,
                left_key,
                right_key,
            } => {
                toks.push(format!("{k}.table:{table}"));
                toks.push(format!("{k}.lkey:{left_key}"));
                toks.push(format!("{k}.rkey:{right_key}"));
            }
            Op::Aggregate {
                group_col,
                agg_fn,
                target_col,
            } => {
                let f = match agg_fn {
                    AggFn::Count => "count",
                    AggFn::Sum => "sum",
                };
                toks.push(format!("{k}.fn:{f}"));
                toks.push(format!("{k}.group:{group_col}"));
                toks.push(format!("{k}.target:{target_col}"));
            }
        }
    }
    toks
}

fn hashed_bag(tokens: &[String], out: &mut [f64]) {
    let dims = out.len() as u64;
    for t in tokens {
        out[(stable_hash(t) % dims) as usize] += 1.0;
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.iter_mut().for_each(|x| *x /= norm);
    }
}

/// 256 hashed prompt dims, 255 hashed program dims, then the reward.
/// Each hashed block is L2-normalised (or all zero when its bag is empty).
pub fn encode_features(prompt: &str, program: &Program, reward: f64) -> Vec<f64> {
    let mut v = vec![0.0; FEATURE_DIM];
    hashed_bag(&prompt_tokens(prompt), &mut v[..PROMPT_DIMS]);
    hashed_bag(
        &program_tokens(program),
        &mut v[PROMPT_DIMS..PROMPT_DIMS + PROGRAM_DIMS],
    );
    v[FEATURE_DIM - 1] = reward;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miniworld::{Cell, Cmp};

    fn block_norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn fnv_reference_values() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn empty_inputs() {
        let v = encode_features("", &Program::empty(), -0.5);
        assert_eq!(v.len(), FEATURE_DIM);
        assert!(v[..FEATURE_DIM - 1].iter().all(|&x| x == 0.0));
        assert_eq!(v[FEATURE_DIM - 1], -0.5);
    }

    #[test]
    fn deterministic_and_normalised() {
        let p = Program::new(vec![Op::Filter {
            column: "id".into(),
            cmp: Cmp::Gt,
            value: Cell::Int(1),
        }]);
        let a = encode_features("Write a filter id > 1", &p, 1.0);
        let b = encode_features("Write a filter id > 1", &p, 1.0);
        assert_eq!(a, b);
        assert!((block_norm(&a[..PROMPT_DIMS]) - 1.0).abs() < 1e-12);
        assert!((block_norm(&a[PROMPT_DIMS..FEATURE_DIM - 1]) - 1.0).abs() < 1e-12);
    }
}
