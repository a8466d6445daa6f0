//! Experiment orchestration: seeded trial contexts shared by all teachers,
//! observation regimes, cost sweeps, aggregation and CSV/JSON persistence.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use log::{info, warn};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, EnvBelief};
use crate::demos::{build_demo_set, CostParams, DemoError, DemoSet, DemoTag};
use crate::gridworld::{
    generate_demonstration_env, generate_observation_env, Action, GridError, GridWorld, ReceptiveField,
    Trajectory,
};
use crate::learner::{run_episode, LearnerSpec};
use crate::metrics::{
    fraction_grid, inference_accuracy_curves, welch_t_test, CurvePoint, ObservedEpisode, SummaryStat,
    TrialResult,
};
use crate::teachers::{
    select_demonstration, trace_teacher_beliefs, BehaviorModel, BeliefTrace, DecisionAudit, RewardTable,
    SelectionContext, TeacherBelief, TeacherKind, ToMInputs,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("environment generation failed: {0}")]
    Grid(#[from] GridError),
    #[error("demonstration generation failed: {0}")]
    Demo(#[from] DemoError),
    #[error("belief update failed: {0}")]
    Belief(#[from] BeliefError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{failed} of {total} trials aborted (more than 1%)")]
    TooManyAborts { failed: usize, total: usize },
}

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of the stream identified by `(master, index, tag)`.
pub fn derive_seed(master: u64, index: u64, tag: &str) -> u64 {
    splitmix64(master ^ splitmix64(index ^ splitmix64(fnv1a(tag))))
}

pub fn stream(master: u64, index: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index, tag))
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// How much of the learner's episode the teachers get to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObsRegime {
    Full,
    FirstK(usize),
}

impl ObsRegime {
    pub fn apply(self, traj: &Trajectory) -> Trajectory {
        match self {
            ObsRegime::Full => traj.clone(),
            ObsRegime::FirstK(k) => traj.truncated(k),
        }
    }

    fn visible_len(self, traj: &Trajectory) -> usize {
        match self {
            ObsRegime::Full => traj.len(),
            ObsRegime::FirstK(k) => k.min(traj.len()),
        }
    }
}

impl fmt::Display for ObsRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsRegime::Full => f.write_str("full"),
            ObsRegime::FirstK(k) => write!(f, "first:{k}"),
        }
    }
}

impl FromStr for ObsRegime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "full" {
            return Ok(ObsRegime::Full);
        }
        s.strip_prefix("first:")
            .and_then(|k| k.parse().ok())
            .map(ObsRegime::FirstK)
            .ok_or_else(|| format!("observation regime must be `full` or `first:<k>`, got `{s}`"))
    }
}

impl Serialize for ObsRegime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ObsRegime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub trials_per_pair: usize,
    pub teachers: Vec<TeacherKind>,
    pub alpha: f64,
    pub obs_regime: ObsRegime,
    pub rollouts: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

pub const DEFAULT_LAMBDA: f64 = 0.01;
pub const DEFAULT_ALPHA: f64 = 0.6;
pub const LIMITED_OBSERVATION: usize = 10;

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment_id: "gridworld".into(),
            trials_per_pair: 100,
            teachers: TeacherKind::all(DEFAULT_LAMBDA),
            alpha: DEFAULT_ALPHA,
            obs_regime: ObsRegime::Full,
            rollouts: 1,
            seed: 0,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Smaller profile for quick checks.
    pub fn desk() -> Self {
        ExperimentConfig { trials_per_pair: 25, ..Default::default() }
    }

    /// Reads JSON or TOML, chosen by file extension.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?,
            _ => serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.alpha < 0.0 || !self.alpha.is_finite() {
            return Err(HarnessError::Config(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.teachers.is_empty() {
            return Err(HarnessError::Config("no teachers configured".into()));
        }
        if self.rollouts == 0 {
            return Err(HarnessError::Config("rollouts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn total_trials(&self) -> usize {
        self.trials_per_pair * LearnerSpec::all().len()
    }
}

/// Learner of trial `index`: trials are grouped by (goal, field) pair.
pub fn trial_spec(index: usize, trials_per_pair: usize) -> LearnerSpec {
    LearnerSpec::all()[(index / trials_per_pair.max(1)) % LearnerSpec::all().len()]
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

/// Everything shared by the teachers of one trial.
#[derive(Debug)]
pub struct TrialContext {
    pub trial: usize,
    pub trial_seed: u64,
    pub spec: LearnerSpec,
    pub obs_world: GridWorld,
    pub demo_world: GridWorld,
    pub demos: DemoSet,
    /// The learner's complete episode on the observation environment.
    pub trajectory: Trajectory,
    /// True post-demonstration rewards of every hypothetical learner.
    pub true_rewards: RewardTable,
    rational: Mutex<HashMap<(u64, usize), Arc<RewardTable>>>,
}

impl TrialContext {
    pub fn build(master_seed: u64, trial: usize, spec: LearnerSpec) -> Result<Self, HarnessError> {
        let trial_seed = derive_seed(master_seed, trial as u64, "trial");
        let obs_world = generate_observation_env(derive_seed(trial_seed, 0, "obs_env"))?;
        let demo_world = generate_demonstration_env(derive_seed(trial_seed, 0, "demo_env"))?;
        let demos = build_demo_set(&demo_world, derive_seed(trial_seed, 0, "demo_set"))?;
        let (trajectory, _) = run_episode(&obs_world, spec, EnvBelief::uniform_for(&obs_world))?;
        let true_rewards = RewardTable::compute(BehaviorModel::Aligned, &demo_world, &demos, 1, |_, _| 0)?;
        Ok(TrialContext {
            trial,
            trial_seed,
            spec,
            obs_world,
            demo_world,
            demos,
            trajectory,
            true_rewards,
            rational: Mutex::new(HashMap::new()),
        })
    }

    /// Rewards predicted by the Boltzmann model, computed on first use.
    pub fn rational_rewards(&self, lambda: f64, rollouts: usize) -> Result<Arc<RewardTable>, HarnessError> {
        let key = (lambda.to_bits(), rollouts);
        if let Some(t) = self.rational.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let tag = format!("rational_rollout:{lambda}");
        let table = RewardTable::compute(BehaviorModel::rational(lambda), &self.demo_world, &self.demos, rollouts, |d, h| {
            derive_seed(self.trial_seed, (d * 64 + h) as u64, &tag)
        })?;
        let table = Arc::new(table);
        self.rational.lock().expect("cache lock").insert(key, Arc::clone(&table));
        Ok(table)
    }

    /// Predicted rewards of a ToM teacher's behaviour model.
    pub fn predicted_rewards(&self, model: BehaviorModel, rollouts: usize) -> Result<Arc<RewardTable>, HarnessError> {
        match model {
            BehaviorModel::Aligned => Ok(Arc::new(self.true_rewards.clone())),
            BehaviorModel::Rational { lambda } => self.rational_rewards(lambda, rollouts),
        }
    }

    /// Number of actions up to and including the goal-key pickup.
    pub fn phase1_len(&self) -> usize {
        let goal = self.spec.goal;
        (0..self.trajectory.len())
            .find(|&k| self.trajectory.states[k + 1].agent.carrying == Some(goal))
            .map_or(self.trajectory.len(), |k| k + 1)
    }

    pub fn key_picked_up(&self) -> bool {
        self.trajectory.final_state().agent.carrying == Some(self.spec.goal)
    }
}

/// One evaluation setting applied to a shared context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub alpha: f64,
    pub regime: ObsRegime,
    pub rollouts: usize,
}

/// Posteriors of every ToM teacher in `teachers` after the visible prefix.
pub fn posteriors(
    ctx: &TrialContext,
    teachers: &[TeacherKind],
    regime: ObsRegime,
) -> Result<Vec<Option<TeacherBelief>>, HarnessError> {
    let models: Vec<BehaviorModel> = teachers.iter().filter_map(|t| t.model()).collect();
    let mut finals = Vec::new();
    if !models.is_empty() {
        let traj = regime.apply(&ctx.trajectory);
        for trace in trace_teacher_beliefs(&TeacherBelief::uniform(), &models, &traj)? {
            finals.push(trace.last().cloned().expect("trace has a prior"));
        }
    }
    let mut finals = finals.into_iter();
    Ok(teachers.iter().map(|t| t.model().and_then(|_| finals.next())).collect())
}

/// Runs every teacher on `ctx` and returns their results and decision audits.
pub fn run_trial_audited(
    ctx: &TrialContext,
    teachers: &[TeacherKind],
    setting: Setting,
) -> Result<(Vec<TrialResult>, Vec<DecisionAudit>), HarnessError> {
    let cost = CostParams::new(setting.alpha);
    let posts = posteriors(ctx, teachers, setting.regime)?;
    let mut results = Vec::with_capacity(teachers.len());
    let mut audits = Vec::with_capacity(teachers.len());
    for (&teacher, post) in teachers.iter().zip(posts) {
        let predicted = match teacher.model() {
            Some(m) => Some(ctx.predicted_rewards(m, setting.rollouts)?),
            None => None,
        };
        let tom = match (&post, &predicted) {
            (Some(p), Some(t)) => Some(ToMInputs { posterior: p, predicted: t }),
            _ => None,
        };
        let sel_ctx = SelectionContext {
            demos: &ctx.demos,
            cost,
            true_rewards: &ctx.true_rewards,
            learner: ctx.spec,
            tom,
        };
        let mut rng = stream(ctx.trial_seed, 0, &format!("select:{}", teacher.stream_tag()));
        let selection = select_demonstration(teacher, &sel_ctx, &mut rng);
        let d = selection.demo_id;
        let reward = ctx.true_rewards.get(d, ctx.spec);
        let c = ctx.demos.cost(d, cost);
        results.push(TrialResult {
            trial: ctx.trial,
            trial_seed: ctx.trial_seed,
            teacher,
            goal: ctx.spec.goal,
            rf: ctx.spec.rf,
            alpha: setting.alpha,
            regime: setting.regime.to_string(),
            demo_id: d,
            demo_len: ctx.demos.demos[d].len(),
            reward,
            cost: c,
            utility: reward - c,
            posterior: post.as_ref().map(TeacherBelief::weights),
        });
        audits.push(DecisionAudit { teacher, posterior: post, scores: selection.scores, selected_demo: d });
    }
    Ok((results, audits))
}

pub fn run_trial(ctx: &TrialContext, teachers: &[TeacherKind], setting: Setting) -> Result<Vec<TrialResult>, HarnessError> {
    Ok(run_trial_audited(ctx, teachers, setting)?.0)
}

/// Builds the contexts for trial indices `0..config.total_trials()`. Trials that
/// fail are logged and skipped; more than 1% failures is an error.
pub fn build_contexts(config: &ExperimentConfig) -> Result<Vec<TrialContext>, HarnessError> {
    let total = config.total_trials();
    let built: Vec<Result<TrialContext, HarnessError>> = (0..total)
        .into_par_iter()
        .map(|i| TrialContext::build(config.seed, i, trial_spec(i, config.trials_per_pair)))
        .collect();
    let mut contexts = Vec::with_capacity(total);
    let mut failed = 0;
    for (i, r) in built.into_iter().enumerate() {
        match r {
            Ok(c) => contexts.push(c),
            Err(e) => {
                failed += 1;
                warn!("trial {i} aborted: {e}");
            }
        }
    }
    check_aborts(failed, total)?;
    info!("built {} trial contexts", contexts.len());
    Ok(contexts)
}

fn check_aborts(failed: usize, total: usize) -> Result<(), HarnessError> {
    if failed * 100 > total {
        return Err(HarnessError::TooManyAborts { failed, total });
    }
    Ok(())
}

/// Evaluates every context under one setting, ordered by trial index.
pub fn evaluate(
    contexts: &[TrialContext],
    teachers: &[TeacherKind],
    setting: Setting,
) -> Result<Vec<TrialResult>, HarnessError> {
    let per_trial: Vec<Result<Vec<TrialResult>, HarnessError>> =
        contexts.par_iter().map(|c| run_trial(c, teachers, setting)).collect();
    let mut out = Vec::new();
    let mut failed = 0;
    for (c, r) in contexts.iter().zip(per_trial) {
        match r {
            Ok(rs) => out.extend(rs),
            Err(e) => {
                failed += 1;
                warn!("trial {} aborted: {e}", c.trial);
            }
        }
    }
    check_aborts(failed, contexts.len())?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub results: Vec<TrialResult>,
    pub summary: Vec<SummaryRow>,
    pub pvalues: Vec<PValueRow>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let contexts = build_contexts(config)?;
    let setting = Setting { alpha: config.alpha, regime: config.obs_regime, rollouts: config.rollouts };
    let results = evaluate(&contexts, &config.teachers, setting)?;
    let report = ExperimentReport { summary: summarize(&results), pvalues: pairwise_pvalues(&results), results };
    if let Some(dir) = &config.out_dir {
        write_report(dir, &report)?;
    }
    Ok(report)
}

/// Runs several settings over one set of contexts.
pub fn run_sweep(
    config: &ExperimentConfig,
    settings: &[Setting],
) -> Result<Vec<(Setting, Vec<TrialResult>)>, HarnessError> {
    let contexts = build_contexts(config)?;
    settings
        .iter()
        .map(|&s| Ok((s, evaluate(&contexts, &config.teachers, s)?)))
        .collect()
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Row label for results pooled over every receptive field.
pub const ALL_FIELDS: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub teacher: String,
    pub rf: String,
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

fn teacher_order(results: &[TrialResult]) -> Vec<String> {
    let mut order: Vec<String> = Vec::new();
    for r in results {
        let t = r.teacher.to_string();
        if !order.contains(&t) {
            order.push(t);
        }
    }
    order
}

/// Utilities of `teacher` for learners with field `rf` (`None` pools all fields).
pub fn utilities(results: &[TrialResult], teacher: &str, rf: Option<ReceptiveField>) -> Vec<f64> {
    results
        .iter()
        .filter(|r| r.teacher.to_string() == teacher && rf.is_none_or(|v| r.rf == v))
        .map(|r| r.utility)
        .collect()
}

/// Mean utility per teacher × receptive field (pooled over goals), plus pooled rows.
pub fn summarize(results: &[TrialResult]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for t in teacher_order(results) {
        let fields = ReceptiveField::ALL.iter().map(|&v| (Some(v), v.to_string()));
        for (rf, label) in fields.chain(std::iter::once((None, ALL_FIELDS.to_string()))) {
            let xs = utilities(results, &t, rf);
            if xs.is_empty() {
                continue;
            }
            let s = SummaryStat::of(&xs);
            rows.push(SummaryRow { teacher: t.clone(), rf: label, mean: s.mean, ci95: s.ci95, n: s.n });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueRow {
    pub teacher_a: String,
    pub teacher_b: String,
    pub rf: String,
    pub p_value: f64,
}

/// Welch p-values between every pair of teachers, per receptive field.
pub fn pairwise_pvalues(results: &[TrialResult]) -> Vec<PValueRow> {
    let teachers = teacher_order(results);
    let mut rows = Vec::new();
    for v in ReceptiveField::ALL {
        for (i, a) in teachers.iter().enumerate() {
            for b in &teachers[i + 1..] {
                let (xa, xb) = (utilities(results, a, Some(v)), utilities(results, b, Some(v)));
                if xa.len() < 2 || xb.len() < 2 {
                    continue;
                }
                rows.push(PValueRow {
                    teacher_a: a.clone(),
                    teacher_b: b.clone(),
                    rf: v.to_string(),
                    p_value: welch_t_test(&xa, &xb),
                });
            }
        }
    }
    rows
}

/// Mean utility of `teacher` for field `rf` (`None` pools all fields).
pub fn mean_utility(results: &[TrialResult], teacher: &str, rf: Option<ReceptiveField>) -> f64 {
    SummaryStat::of(&utilities(results, teacher, rf)).mean
}

// ---------------------------------------------------------------------------
// Inference curves
// ---------------------------------------------------------------------------

/// Belief traces of several models on every context's full episode.
pub fn belief_traces(
    contexts: &[TrialContext],
    models: &[BehaviorModel],
) -> Result<Vec<Vec<BeliefTrace>>, HarnessError> {
    contexts
        .par_iter()
        .map(|c| Ok(trace_teacher_beliefs(&TeacherBelief::uniform(), models, &c.trajectory)?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub model: String,
    #[serde(flatten)]
    pub point: CurvePoint,
}

pub fn model_label(m: BehaviorModel) -> String {
    match m {
        BehaviorModel::Aligned => "aligned".into(),
        BehaviorModel::Rational { lambda } => format!("rational:{lambda}"),
    }
}

/// Accuracy/entropy curves per model over `steps + 1` evenly spaced fractions.
pub fn curves(
    contexts: &[TrialContext],
    traces: &[Vec<BeliefTrace>],
    models: &[BehaviorModel],
    steps: usize,
) -> Vec<CurveRow> {
    let grid = fraction_grid(steps);
    let mut rows = Vec::new();
    for (m, &model) in models.iter().enumerate() {
        let episodes: Vec<ObservedEpisode> = contexts
            .iter()
            .zip(traces)
            .map(|(c, t)| ObservedEpisode {
                spec: c.spec,
                actions: &c.trajectory.actions,
                phase1_len: c.phase1_len(),
                trace: &t[m],
            })
            .collect();
        for point in inference_accuracy_curves(&episodes, &grid) {
            rows.push(CurveRow { model: model_label(model), point });
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

pub const RAW_HEADER: [&str; 13] = [
    "trial", "trial_seed", "teacher", "goal", "rf", "alpha", "regime", "demo_id", "demo_len", "reward", "cost",
    "utility", "posterior",
];

pub fn write_raw_csv(path: &Path, results: &[TrialResult]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RAW_HEADER)?;
    for r in results {
        let posterior = r
            .posterior
            .as_ref()
            .map(|p| p.iter().map(|x| f6(*x)).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        w.write_record([
            r.trial.to_string(),
            r.trial_seed.to_string(),
            r.teacher.to_string(),
            r.goal.to_string(),
            r.rf.to_string(),
            f6(r.alpha),
            r.regime.clone(),
            r.demo_id.to_string(),
            r.demo_len.to_string(),
            // shortest round-trip form, so `report` reproduces `run` exactly
            r.reward.to_string(),
            r.cost.to_string(),
            r.utility.to_string(),
            posterior,
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RawRow {
    trial: usize,
    trial_seed: u64,
    teacher: TeacherKind,
    goal: String,
    rf: ReceptiveField,
    alpha: f64,
    regime: String,
    demo_id: usize,
    demo_len: usize,
    reward: f64,
    cost: f64,
    utility: f64,
    posterior: String,
}

pub fn read_raw_csv(path: &Path) -> Result<Vec<TrialResult>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<RawRow>() {
        let row = row?;
        let posterior = if row.posterior.is_empty() {
            None
        } else {
            Some(
                row.posterior
                    .split(';')
                    .map(|x| x.parse::<f64>().map_err(|e| HarnessError::Config(format!("bad posterior: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        };
        out.push(TrialResult {
            trial: row.trial,
            trial_seed: row.trial_seed,
            teacher: row.teacher,
            goal: row.goal.parse().map_err(|e| HarnessError::Config(format!("{e:?}")))?,
            rf: row.rf,
            alpha: row.alpha,
            regime: row.regime,
            demo_id: row.demo_id,
            demo_len: row.demo_len,
            reward: row.reward,
            cost: row.cost,
            utility: row.utility,
            posterior,
        });
    }
    Ok(out)
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["teacher", "rf", "mean", "ci95", "n"])?;
    for r in rows {
        w.write_record([r.teacher.clone(), r.rf.clone(), f6(r.mean), f6(r.ci95), r.n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pvalues_csv(path: &Path, rows: &[PValueRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["teacher_a", "teacher_b", "rf", "p_value"])?;
    for r in rows {
        w.write_record([r.teacher_a.clone(), r.teacher_b.clone(), r.rf.clone(), f6(r.p_value)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves_csv(path: &Path, rows: &[CurveRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "fraction", "goal_accuracy", "rf_accuracy", "entropy", "phase1_entropy", "n"])?;
    for r in rows {
        let p = &r.point;
        w.write_record([
            r.model.clone(),
            f6(p.fraction),
            f6(p.goal_accuracy),
            f6(p.rf_accuracy),
            f6(p.entropy),
            f6(p.phase1_entropy),
            p.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `raw.csv`, `summary.csv` and `pvalues.csv` into `dir`.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    write_raw_csv(&dir.join("raw.csv"), &report.results)?;
    write_summary_csv(&dir.join("summary.csv"), &report.summary)?;
    write_pvalues_csv(&dir.join("pvalues.csv"), &report.pvalues)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoRecord {
    pub id: usize,
    pub tag: DemoTag,
    pub len: usize,
    pub cost: f64,
}

/// Everything needed to inspect one trial's decisions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialAudit {
    pub trial: usize,
    pub trial_seed: u64,
    pub learner: LearnerSpec,
    pub setting: Setting,
    pub observed_actions: Vec<Action>,
    pub visible_actions: usize,
    pub demos: Vec<DemoRecord>,
    pub decisions: Vec<DecisionAudit>,
    pub results: Vec<TrialResult>,
    pub obs_world: GridWorld,
    pub demo_world: GridWorld,
}

/// Re-runs trial `index` of `config` in isolation.
pub fn replay_trial(config: &ExperimentConfig, index: usize) -> Result<TrialAudit, HarnessError> {
    let ctx = TrialContext::build(config.seed, index, trial_spec(index, config.trials_per_pair))?;
    let setting = Setting { alpha: config.alpha, regime: config.obs_regime, rollouts: config.rollouts };
    let (results, decisions) = run_trial_audited(&ctx, &config.teachers, setting)?;
    let cost = CostParams::new(config.alpha);
    Ok(TrialAudit {
        trial: ctx.trial,
        trial_seed: ctx.trial_seed,
        learner: ctx.spec,
        setting,
        observed_actions: ctx.trajectory.actions.clone(),
        visible_actions: setting.regime.visible_len(&ctx.trajectory),
        demos: ctx
            .demos
            .demos
            .iter()
            .map(|d| DemoRecord { id: d.id, tag: d.tag, len: d.len(), cost: ctx.demos.cost(d.id, cost) })
            .collect(),
        decisions,
        results,
        obs_world: ctx.obs_world.clone(),
        demo_world: ctx.demo_world.clone(),
    })
}
