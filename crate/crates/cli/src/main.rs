use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cosmocore::config::ExperimentConfig;
use cosmocore::harness::{
    arm_name, recorded_window, report, run_ablations, run_arm, write_outputs, RunOptions,
    CONSOLIDATION_FILE, EPISODES_FILE, METRICS_FILE, SUMMARY_FILE,
};
use cosmocore::miniworld::{
    builtin_corpus, generate_corpus, load_corpus, save_corpus, validate_corpus, TaskSpec,
};
use cosmocore::rng::Rng;
use cosmocore::tagger::{HeuristicTagger, MlpTagger, Tagger, TaggerTrainConfig};

#[derive(Parser)]
#[command(
    name = "cosmocore",
    version,
    about = "Affect-tagged replay experiments on a toy dataframe world"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one arm over every seed.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        no_prioritization: bool,
        #[arg(long)]
        no_pruning: bool,
    },
    /// Run baseline, full, no-prioritization and no-pruning with shared seeds.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
    /// Re-execute every reference program against its hidden test.
    ValidateCorpus {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Rebuild summary.csv from the JSON-lines logs in a run directory.
    Report {
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the window recorded in metrics.json, else 5.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Write a generated corpus as one JSON file per task.
    WriteCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        per_context: Option<usize>,
    },
    /// Fit the MLP tagger to heuristic labels of every candidate program.
    TrainTagger {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds, overriding the configuration.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    out: PathBuf,
    /// Use the coin-flip prune rule instead of the gated one.
    #[arg(long)]
    alg1_compat: bool,
    /// Corpus directory; the built-in corpus is used when omitted.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Harness options JSON (window, consolidation sizes, agent rates).
    #[arg(long)]
    options: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TaggerKind::Heuristic)]
    tagger: TaggerKind,
    /// Weights for `--tagger mlp` (.json or binary).
    #[arg(long)]
    tagger_checkpoint: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaggerKind {
    Heuristic,
    Mlp,
}

fn corpus(dir: Option<&Path>) -> Result<Vec<TaskSpec>> {
    match dir {
        Some(d) => load_corpus(d).with_context(|| format!("loading corpus from {}", d.display())),
        None => Ok(builtin_corpus()),
    }
}

struct Setup {
    cfg: ExperimentConfig,
    opts: RunOptions,
    corpus: Vec<TaskSpec>,
    tagger: Box<dyn Tagger + Sync>,
}

fn setup(c: &Common) -> Result<Setup> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seeds) = &c.seeds {
        cfg.seeds = seeds.clone();
    }
    cfg.validate()?;
    let mut opts: RunOptions = match &c.options {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
            .with_context(|| format!("reading {}", p.display()))?,
        None => RunOptions::default(),
    };
    opts.alg1_compat |= c.alg1_compat;
    opts.validate()?;
    let tagger: Box<dyn Tagger + Sync> = match (c.tagger, &c.tagger_checkpoint) {
        (TaggerKind::Heuristic, _) => Box::new(HeuristicTagger::default()),
        (TaggerKind::Mlp, Some(p)) => {
            Box::new(MlpTagger::load(p).with_context(|| format!("loading {}", p.display()))?)
        }
        (TaggerKind::Mlp, None) => bail!("--tagger mlp needs --tagger-checkpoint"),
    };
    Ok(Setup {
        cfg,
        opts,
        corpus: corpus(c.corpus.as_deref())?,
        tagger,
    })
}

fn print_written(out: &Path) {
    for f in [
        EPISODES_FILE,
        CONSOLIDATION_FILE,
        METRICS_FILE,
        SUMMARY_FILE,
    ] {
        println!("wrote {}", out.join(f).display());
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns `false` when the command completed but reported failures.
fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            common,
            no_prioritization,
            no_pruning,
        } => {
            let mut s = setup(&common)?;
            s.cfg.use_prioritization &= !no_prioritization;
            s.cfg.use_pruning &= !no_pruning;
            let arm = run_arm(
                &s.cfg,
                &s.opts,
                &s.corpus,
                s.tagger.as_ref(),
                arm_name(&s.cfg),
            )?;
            write_outputs(&common.out, &s.opts, std::slice::from_ref(&arm), &[])?;
            print_written(&common.out);
            for f in &arm.failures {
                eprintln!("seed {} aborted: {}", f.seed, f.error);
            }
            Ok(arm.failures.is_empty())
        }
        Command::Ablate { common } => {
            let s = setup(&common)?;
            let run = run_ablations(&s.cfg, &s.opts, &s.corpus, s.tagger.as_ref())?;
            write_outputs(&common.out, &s.opts, &run.arms, &run.deltas)?;
            print_written(&common.out);
            let mut ok = true;
            for arm in &run.arms {
                for f in &arm.failures {
                    eprintln!("{} seed {} aborted: {}", arm.arm, f.seed, f.error);
                    ok = false;
                }
            }
            Ok(ok)
        }
        Command::ValidateCorpus { corpus: dir } => {
            let tasks = corpus(dir.as_deref())?;
            let checks = validate_corpus(&tasks);
            for c in &checks {
                println!(
                    "{} {} {}",
                    if c.ok { "ok  " } else { "FAIL" },
                    c.id,
                    c.detail
                );
            }
            let bad = checks.iter().filter(|c| !c.ok).count();
            println!("{} tasks, {bad} failing", checks.len());
            Ok(bad == 0)
        }
        Command::Report { out, window } => {
            let window = match window {
                Some(w) => w,
                None => recorded_window(&out)?.unwrap_or(RunOptions::default().window),
            };
            print!("{}", report(&out, window)?);
            Ok(true)
        }
        Command::WriteCorpus {
            out,
            seed,
            per_context,
        } => {
            let tasks = match (seed, per_context) {
                (None, None) => builtin_corpus(),
                (s, k) => generate_corpus(
                    s.unwrap_or(cosmocore::miniworld::CORPUS_SEED),
                    k.unwrap_or(cosmocore::miniworld::TASKS_PER_CONTEXT),
                ),
            };
            save_corpus(&tasks, &out)?;
            println!("wrote {} tasks to {}", tasks.len(), out.display());
            Ok(true)
        }
        Command::TrainTagger {
            out,
            corpus: dir,
            seed,
            epochs,
            learning_rate,
        } => {
            let tasks = corpus(dir.as_deref())?;
            let data = cosmocore::harness::distill_dataset(&tasks, &HeuristicTagger::default())?;
            let mut rng = Rng::new(seed);
            let mut tagger = MlpTagger::init(&mut rng);
            let cfg = TaggerTrainConfig {
                learning_rate,
                epochs,
                ..TaggerTrainConfig::default()
            };
            let report = tagger.train(&data, &cfg, &mut rng)?;
            tagger.save(&out)?;
            println!(
                "{} samples, loss {} -> {}, wrote {}",
                data.len(),
                report.initial_loss,
                report.final_loss(),
                out.display()
            );
            Ok(true)
        }
    }
}
