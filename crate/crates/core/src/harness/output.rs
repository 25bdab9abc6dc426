//! Experiment files: JSON-lines logs, the metrics document and the CSV.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ablation::PairedDelta;
use super::metrics::SeedMetrics;
use super::record::{EpisodeRecord, TaskEnd};
use super::run::{ArmRun, MetricsSummary, RunOptions};
use crate::error::Result;

pub const EPISODES_FILE: &str = "episodes.jsonl";
pub const CONSOLIDATION_FILE: &str = "consolidation.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const SUMMARY_FILE: &str = "summary.csv";

pub const SUMMARY_HEADER: &str =
    "arm,seed,hallucination_rate,mean_reward,mean_entropy,cycles_to_zero_error,recurrence_rate,final_occupancy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub options: RunOptions,
    pub arms: Vec<MetricsSummary>,
    pub deltas: Vec<PairedDelta>,
}

pub fn summary_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a SeedMetrics)>) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (arm, m) in rows {
        writeln!(
            out,
            "{arm},{},{},{},{},{},{},{}",
            m.seed,
            m.hallucination_rate,
            m.mean_reward,
            m.mean_entropy,
            m.cycles_to_zero_error.cycles,
            m.bug_recurrence_rate,
            m.final_occupancy
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Write all four experiment files into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    options: &RunOptions,
    arms: &[ArmRun],
    deltas: &[PairedDelta],
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let seeds = || arms.iter().flat_map(|a| &a.seeds);
    write_jsonl(&dir.join(EPISODES_FILE), seeds().flat_map(|s| &s.records))?;
    write_jsonl(
        &dir.join(CONSOLIDATION_FILE),
        seeds().flat_map(|s| &s.task_ends),
    )?;
    let metrics = MetricsFile {
        options: options.clone(),
        arms: arms.iter().map(ArmRun::summary).collect(),
        deltas: deltas.to_vec(),
    };
    std::fs::write(
        dir.join(METRICS_FILE),
        serde_json::to_string_pretty(&metrics)? + "\n",
    )?;
    let rows = arms
        .iter()
        .flat_map(|a| a.seeds.iter().map(move |s| (a.arm.as_str(), &s.metrics)));
    std::fs::write(dir.join(SUMMARY_FILE), summary_csv(rows))?;
    Ok(())
}

/// Recompute per-seed metrics from the JSON-lines logs in `dir`, in order of
/// first appearance of each (arm, seed).
pub fn metrics_from_logs(dir: &Path, window: usize) -> Result<Vec<(String, SeedMetrics)>> {
    let records: Vec<EpisodeRecord> = read_jsonl(&dir.join(EPISODES_FILE))?;
    let ends: Vec<TaskEnd> = read_jsonl(&dir.join(CONSOLIDATION_FILE))?;
    let mut keys: Vec<(String, u64)> = Vec::new();
    for r in &records {
        let key = (r.arm.clone(), r.seed);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(arm, seed)| {
            let recs: Vec<EpisodeRecord> = records
                .iter()
                .filter(|r| r.arm == arm && r.seed == seed)
                .cloned()
                .collect();
            let te: Vec<TaskEnd> = ends
                .iter()
                .filter(|e| e.arm == arm && e.seed == seed)
                .cloned()
                .collect();
            Ok((arm, SeedMetrics::from_records(seed, &recs, &te, window)?))
        })
        .collect()
}

/// Rebuild `summary.csv` from the logs in `dir` and return its contents.
pub fn report(dir: &Path, window: usize) -> Result<String> {
    let metrics = metrics_from_logs(dir, window)?;
    let csv = summary_csv(metrics.iter().map(|(a, m)| (a.as_str(), m)));
    std::fs::write(dir.join(SUMMARY_FILE), &csv)?;
    Ok(csv)
}

/// The window recorded in `metrics.json`, if that file is present.
pub fn recorded_window(dir: &Path) -> Result<Option<usize>> {
    let path = dir.join(METRICS_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let file: MetricsFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok(Some(file.options.window))
}
