use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use tom_teach::harness::{
    belief_traces, build_contexts, curves, pairwise_pvalues, read_raw_csv, replay_trial, run_experiment,
    run_sweep, summarize, write_curves_csv, write_pvalues_csv, write_raw_csv, write_summary_csv,
    ExperimentConfig, ObsRegime, Setting, SummaryRow,
};
use tom_teach::teachers::{BehaviorModel, TeacherKind};
use tom_teach::toy::{run_toy_experiment, summarize_toy, write_toy_csv, ToyConfig};

#[derive(Parser)]
#[command(name = "tomteach", version, about = "Adaptive teaching experiments with theory-of-mind teachers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gridworld teaching experiment.
    Run(Common),
    /// Run the button-toy experiment.
    Toy(Common),
    /// Sweep the teaching-cost parameter over shared trials.
    AblateCost {
        #[command(flatten)]
        common: Common,
        /// Cost parameters to evaluate.
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.6, 0.8])]
        alphas: Vec<f64>,
    },
    /// Goal/receptive-field inference accuracy and entropy curves.
    Curves {
        #[command(flatten)]
        common: Common,
        /// Number of intervals on the observed-fraction grid.
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Re-run one trial and dump its decision audit as JSON.
    Replay {
        #[command(flatten)]
        common: Common,
        /// Trial index.
        #[arg(long)]
        trial: usize,
    },
    /// Summaries and pairwise p-values from a raw results CSV.
    Report {
        /// Raw per-trial CSV written by `run`.
        #[arg(long)]
        raw: PathBuf,
        /// Output directory (defaults to the raw file's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// JSON or TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per (goal, field) pair; per learner class for `toy`.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Temperature of the rational teacher.
    #[arg(long)]
    lambda: Option<f64>,
    /// `full` or `first:<k>`.
    #[arg(long)]
    obs_regime: Option<ObsRegime>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.trials {
            cfg.trials_per_pair = n;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(l) = self.lambda {
            for t in cfg.teachers.iter_mut() {
                if let TeacherKind::RationalToM { lambda } = t {
                    *lambda = l;
                }
            }
        }
        if let Some(r) = self.obs_regime {
            cfg.obs_regime = r;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn lambda(&self, cfg: &ExperimentConfig) -> f64 {
        self.lambda
            .or_else(|| {
                cfg.teachers.iter().find_map(|t| match t {
                    TeacherKind::RationalToM { lambda } => Some(*lambda),
                    _ => None,
                })
            })
            .unwrap_or(tom_teach::harness::DEFAULT_LAMBDA)
    }
}

fn print_summary(rows: &[SummaryRow]) {
    println!("{:<22} {:>8} {:>8} {:>8} {:>6}", "teacher", "field", "mean", "ci95", "n");
    for r in rows {
        println!("{:<22} {:>8} {:>8.3} {:>8.3} {:>6}", r.teacher, r.rf, r.mean, r.ci95, r.n);
    }
}

fn out_dir(dir: &Option<PathBuf>) -> Result<Option<&Path>> {
    if let Some(d) = dir {
        fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    Ok(dir.as_deref())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    let jobs = match &cli.command {
        Command::Run(c) | Command::Toy(c) => c.jobs,
        Command::AblateCost { common, .. } | Command::Curves { common, .. } | Command::Replay { common, .. } => {
            common.jobs
        }
        Command::Report { .. } => None,
    };
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }

    match cli.command {
        Command::Run(common) => {
            let cfg = common.experiment()?;
            info!("running {} trials", cfg.total_trials());
            let report = run_experiment(&cfg)?;
            print_summary(&report.summary);
            if let Some(d) = &cfg.out_dir {
                info!("results written to {}", d.display());
            }
        }
        Command::Toy(common) => {
            let mut cfg = ToyConfig::default();
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(n) = common.trials {
                cfg.trials_per_class = n;
            }
            if let Some(a) = common.alpha {
                cfg.alpha = a;
            }
            let trials = run_toy_experiment(&cfg);
            println!("{:<22} {:>6} {:>8} {:>8} {:>6}", "teacher", "class", "mean", "ci95", "n");
            for r in summarize_toy(&trials) {
                println!("{:<22} {:>6} {:>8.3} {:>8.3} {:>6}", r.teacher.to_string(), r.class, r.stat.mean, r.stat.ci95, r.stat.n);
            }
            if let Some(d) = out_dir(&common.out)? {
                write_toy_csv(&d.join("toy.csv"), &trials)?;
            }
        }
        Command::AblateCost { common, alphas } => {
            let cfg = common.experiment()?;
            let settings: Vec<Setting> =
                alphas.iter().map(|&alpha| Setting { alpha, regime: cfg.obs_regime, rollouts: cfg.rollouts }).collect();
            for (setting, results) in run_sweep(&cfg, &settings)? {
                println!("\nalpha = {}", setting.alpha);
                let summary = summarize(&results);
                print_summary(&summary);
                if let Some(d) = out_dir(&cfg.out_dir)? {
                    let sub = d.join(format!("alpha_{}", setting.alpha));
                    fs::create_dir_all(&sub)?;
                    write_raw_csv(&sub.join("raw.csv"), &results)?;
                    write_summary_csv(&sub.join("summary.csv"), &summary)?;
                    write_pvalues_csv(&sub.join("pvalues.csv"), &pairwise_pvalues(&results))?;
                }
            }
        }
        Command::Curves { common, steps } => {
            let cfg = common.experiment()?;
            let models = [BehaviorModel::Aligned, BehaviorModel::rational(common.lambda(&cfg))];
            let contexts = build_contexts(&cfg)?;
            let traces = belief_traces(&contexts, &models)?;
            let rows = curves(&contexts, &traces, &models, steps);
            println!("{:<16} {:>8} {:>9} {:>9} {:>9} {:>9}", "model", "fraction", "goal_acc", "rf_acc", "entropy", "p1_entropy");
            for r in &rows {
                let p = &r.point;
                println!(
                    "{:<16} {:>8.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
                    r.model, p.fraction, p.goal_accuracy, p.rf_accuracy, p.entropy, p.phase1_entropy
                );
            }
            if let Some(d) = out_dir(&cfg.out_dir)? {
                write_curves_csv(&d.join("curves.csv"), &rows)?;
            }
        }
        Command::Replay { common, trial } => {
            let cfg = common.experiment()?;
            if trial >= cfg.total_trials() {
                bail!("trial {trial} is out of range (0..{})", cfg.total_trials());
            }
            let audit = replay_trial(&cfg, trial)?;
            let json = serde_json::to_string_pretty(&audit)?;
            match out_dir(&cfg.out_dir)? {
                Some(d) => {
                    let path = d.join(format!("trial_{trial}.json"));
                    fs::write(&path, json)?;
                    info!("audit written to {}", path.display());
                }
                None => println!("{json}"),
            }
        }
        Command::Report { raw, out } => {
            let results = read_raw_csv(&raw).with_context(|| format!("reading {}", raw.display()))?;
            let summary = summarize(&results);
            print_summary(&summary);
            let dir = out.or_else(|| raw.parent().map(Path::to_path_buf)).unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir)?;
            write_summary_csv(&dir.join("summary.csv"), &summary)?;
            write_pvalues_csv(&dir.join("pvalues.csv"), &pairwise_pvalues(&results))?;
        }
    }
    Ok(())
}
