//! Experiment orchestration: the episode loop, metrics, ablations and
//! output files.

mod ablation;
mod distill;
mod metrics;
mod output;
mod record;
mod run;

pub use ablation::{
    arm_config, paired_delta, run_ablations, AblationRun, PairedDelta, ARMS, COMPARISONS,
};
pub use distill::distill_dataset;
pub use metrics::{
    aggregate, bug_recurrence_rate, cycles_to_zero_error, episodes_to_pass_rate,
    hallucination_rate, median, Cycles, MeanStd, SeedMetrics, PASS_RATE_TARGET, PASS_RATE_WINDOW,
};
pub use output::{
    metrics_from_logs, recorded_window, report, summary_csv, write_outputs, MetricsFile,
    CONSOLIDATION_FILE, EPISODES_FILE, METRICS_FILE, SUMMARY_FILE, SUMMARY_HEADER,
};
pub use record::{EpisodeRecord, TaskEnd};
pub use run::{
    arm_name, run_arm, run_seed, ArmRun, MetricsSummary, RunOptions, SeedFailure, SeedRun,
};
