//! Teachers: Bayesian theory-of-mind teachers (aligned and Boltzmann-rational
//! learner models) and the learner-agnostic baselines they are compared to.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefError, EnvBelief};
use crate::demos::{apply_demonstration, CostParams, DemoSet, Demonstration};
use crate::gridworld::{
    observe, reward, step_in_place, Action, AgentPose, GridWorld, ObjectKind, ReceptiveField,
    Trajectory,
};
use crate::learner::{apply_own_effect, decide, rollout, EpisodeSummary, LearnerSpec};
use crate::pathing::{dijkstra_map, DistanceMap, KnownGrid};

/// Floor applied to zero likelihoods so that a single tie-break mismatch cannot
/// wipe out the posterior.
pub const LIKELIHOOD_FLOOR: f64 = 1e-6;
/// Hypotheses lighter than this are skipped when estimating utilities.
pub const PRUNE_THRESHOLD: f64 = 1e-4;

pub const NUM_HYPOTHESES: usize = 12;

/// Hypothesis index of `spec` in [`LearnerSpec::all`] order (goal-major).
pub fn hypothesis_index(spec: LearnerSpec) -> usize {
    spec.goal.index() * ReceptiveField::ALL.len() + rf_index(spec.rf)
}

pub fn rf_index(rf: ReceptiveField) -> usize {
    ReceptiveField::ALL
        .iter()
        .position(|&r| r == rf)
        .unwrap_or_else(|| panic!("receptive field {rf} is outside the hypothesis space"))
}

// ---------------------------------------------------------------------------
// Teacher belief
// ---------------------------------------------------------------------------

/// Posterior over learner hypotheses, kept as normalized log-weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BeliefDoc", try_from = "BeliefDoc")]
pub struct TeacherBelief {
    hypotheses: Vec<LearnerSpec>,
    log_w: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BeliefDoc {
    hypotheses: Vec<LearnerSpec>,
    weights: Vec<f64>,
}

impl From<TeacherBelief> for BeliefDoc {
    fn from(b: TeacherBelief) -> Self {
        BeliefDoc { weights: b.weights(), hypotheses: b.hypotheses }
    }
}

impl TryFrom<BeliefDoc> for TeacherBelief {
    type Error = String;
    fn try_from(d: BeliefDoc) -> Result<Self, String> {
        TeacherBelief::from_weights(d.hypotheses, &d.weights)
    }
}

impl Default for TeacherBelief {
    fn default() -> Self {
        TeacherBelief::uniform()
    }
}

impl TeacherBelief {
    /// Uniform over every goal × receptive field.
    pub fn uniform() -> Self {
        Self::uniform_over(LearnerSpec::all())
    }

    pub fn uniform_over(hypotheses: Vec<LearnerSpec>) -> Self {
        assert!(!hypotheses.is_empty(), "empty hypothesis space");
        let lw = -(hypotheses.len() as f64).ln();
        TeacherBelief { log_w: vec![lw; hypotheses.len()], hypotheses }
    }

    pub fn point_mass(spec: LearnerSpec) -> Self {
        let hyps = LearnerSpec::all();
        let w: Vec<f64> = hyps.iter().map(|&h| if h == spec { 1.0 } else { 0.0 }).collect();
        TeacherBelief::from_weights(hyps, &w).expect("valid point mass")
    }

    /// Normalizes non-negative `weights`.
    pub fn from_weights(hypotheses: Vec<LearnerSpec>, weights: &[f64]) -> Result<Self, String> {
        if hypotheses.len() != weights.len() || hypotheses.is_empty() {
            return Err("hypotheses and weights differ in length".into());
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err("weights must be finite and non-negative".into());
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err("weights sum to zero".into());
        }
        let log_w = weights.iter().map(|w| (w / total).ln()).collect();
        Ok(TeacherBelief { hypotheses, log_w })
    }

    pub fn hypotheses(&self) -> &[LearnerSpec] {
        &self.hypotheses
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_w.iter().map(|l| l.exp()).collect()
    }

    pub fn weight(&self, spec: LearnerSpec) -> f64 {
        self.hypotheses.iter().position(|&h| h == spec).map_or(0.0, |i| self.log_w[i].exp())
    }

    pub fn iter(&self) -> impl Iterator<Item = (LearnerSpec, f64)> + '_ {
        self.hypotheses.iter().copied().zip(self.log_w.iter().map(|l| l.exp()))
    }

    /// Marginal over goals, indexed by [`Color::index`].
    pub fn goal_marginal(&self) -> [f64; 4] {
        let mut m = [0.0; 4];
        for (h, w) in self.iter() {
            m[h.goal.index()] += w;
        }
        m
    }

    /// Marginal over receptive fields, indexed like [`ReceptiveField::ALL`].
    pub fn rf_marginal(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (h, w) in self.iter() {
            m[rf_index(h.rf)] += w;
        }
        m
    }

    /// Multiplies each hypothesis by its likelihood and renormalizes. If every
    /// weight vanishes the belief resets to uniform over the hypotheses that were
    /// still alive, and a warning is logged.
    pub fn observe(&mut self, likelihood: impl Fn(usize, LearnerSpec) -> f64) {
        let before = self.log_w.clone();
        for (i, h) in self.hypotheses.iter().enumerate() {
            if self.log_w[i] > f64::NEG_INFINITY {
                self.log_w[i] += likelihood(i, *h).ln();
            }
        }
        if !self.renormalize() {
            warn!("teacher posterior vanished; resetting to uniform over surviving hypotheses");
            let alive = before.iter().filter(|l| **l > f64::NEG_INFINITY).count() as f64;
            self.log_w = before
                .iter()
                .map(|&l| if l > f64::NEG_INFINITY { -alive.ln() } else { f64::NEG_INFINITY })
                .collect();
        }
    }

    fn renormalize(&mut self) -> bool {
        let max = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return false;
        }
        let lse = max + self.log_w.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        self.log_w.iter_mut().for_each(|l| *l -= lse);
        true
    }
}

// ---------------------------------------------------------------------------
// Behaviour models
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum BehaviorModel {
    /// The learner's true policy.
    Aligned,
    /// Boltzmann-rational towards the current target with temperature `lambda`.
    Rational { lambda: f64 },
}

impl BehaviorModel {
    pub fn rational(lambda: f64) -> Self {
        assert!(lambda > 0.0, "temperature must be positive, got {lambda}");
        BehaviorModel::Rational { lambda }
    }
}

/// Distances from every object's cell through the true grid.
#[derive(Debug, Clone)]
pub struct ObjectDistances {
    maps: Vec<Option<DistanceMap>>,
}

impl ObjectDistances {
    pub fn new(world: &GridWorld) -> Self {
        let grid = KnownGrid::from_world(world);
        let maps = ObjectKind::ALL
            .iter()
            .map(|&o| world.find(o).map(|c| dijkstra_map(&grid, c)))
            .collect();
        ObjectDistances { maps }
    }

    pub fn map(&self, obj: ObjectKind) -> Option<&DistanceMap> {
        self.maps[obj.index()].as_ref()
    }
}

fn target_of(spec: LearnerSpec, pose: &AgentPose) -> ObjectKind {
    if pose.carrying == Some(spec.goal) {
        ObjectKind::Door(spec.goal)
    } else {
        ObjectKind::Key(spec.goal)
    }
}

const MOVES: [Action; 3] = [Action::TurnLeft, Action::TurnRight, Action::Forward];

fn one_hot(a: Action) -> [f64; 5] {
    let mut p = [0.0; 5];
    p[a.index()] = 1.0;
    p
}

/// Boltzmann-rational action distribution, indexed by [`Action::index`].
///
/// With the target's location certain: Pickup/Toggle when facing it, otherwise a
/// softmax over {left, right, forward}. Forward scores by the distance change of
/// the step ahead; a turn averages the u-turn and turn-then-forward outcomes.
/// With the target unknown: uniform over {left, right, forward}.
pub fn rational_distribution(
    lambda: f64,
    spec: LearnerSpec,
    belief: &EnvBelief,
    pose: &AgentPose,
    dists: &ObjectDistances,
) -> [f64; 5] {
    let target = target_of(spec, pose);
    let uniform = {
        let mut p = [0.0; 5];
        MOVES.iter().for_each(|a| p[a.index()] = 1.0 / 3.0);
        p
    };
    let Some(cell) = belief.known_location(target) else {
        return uniform;
    };
    if pose.front() == Some(cell) {
        return one_hot(match target {
            ObjectKind::Key(_) => Action::Pickup,
            ObjectKind::Door(_) => Action::Toggle,
        });
    }
    let Some(map) = dists.map(target) else {
        return uniform;
    };
    let Some(d0) = map.get(pose.pos) else {
        return uniform;
    };
    let d0 = d0 as f64;
    // moving into an obstacle leaves the agent in place
    let after = |dir| {
        pose.pos
            .step(dir)
            .and_then(|c| map.get(c).map(|d| d as f64))
            .unwrap_or(d0)
    };
    let term = |d: f64| -(d - d0) / lambda;
    let u_turn = term(after(pose.dir.reverse()));
    let logit_f = term(after(pose.dir));
    let logit_l = log_mean_exp(u_turn, term(after(pose.dir.left())));
    let logit_r = log_mean_exp(u_turn, term(after(pose.dir.right())));
    let max = logit_f.max(logit_l).max(logit_r);
    let (el, er, ef) = ((logit_l - max).exp(), (logit_r - max).exp(), (logit_f - max).exp());
    let z = el + er + ef;
    let mut p = [0.0; 5];
    p[Action::TurnLeft.index()] = el / z;
    p[Action::TurnRight.index()] = er / z;
    p[Action::Forward.index()] = ef / z;
    p
}

fn log_mean_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + (((a - m).exp() + (b - m).exp()) / 2.0).ln()
}

/// Probability `model` assigns to each action of a learner with hypothesis `spec`
/// holding `belief` at `pose`.
pub fn action_distribution(
    model: BehaviorModel,
    spec: LearnerSpec,
    belief: &EnvBelief,
    pose: &AgentPose,
    dists: &ObjectDistances,
) -> [f64; 5] {
    match model {
        BehaviorModel::Aligned => one_hot(decide(spec, belief, pose)),
        BehaviorModel::Rational { lambda } => rational_distribution(lambda, spec, belief, pose, dists),
    }
}

/// Likelihood of `observed` under `model`, floored at [`LIKELIHOOD_FLOOR`].
pub fn policy_likelihood(
    model: BehaviorModel,
    spec: LearnerSpec,
    sim_belief: &EnvBelief,
    pose: &AgentPose,
    observed: Action,
    world: &GridWorld,
) -> f64 {
    let dists = ObjectDistances::new(world);
    action_distribution(model, spec, sim_belief, pose, &dists)[observed.index()].max(LIKELIHOOD_FLOOR)
}

fn aligned_likelihood(spec: LearnerSpec, belief: &EnvBelief, pose: &AgentPose, observed: Action) -> f64 {
    if decide(spec, belief, pose) == observed {
        1.0
    } else {
        LIKELIHOOD_FLOOR
    }
}

// ---------------------------------------------------------------------------
// Belief updates over observed trajectories
// ---------------------------------------------------------------------------

/// Replays what a learner with each receptive field would believe along `traj`
/// and calls `visit(k, beliefs)` right before action `k`; `beliefs` is indexed
/// like [`ReceptiveField::ALL`].
pub fn replay_simulated_beliefs(
    traj: &Trajectory,
    mut visit: impl FnMut(usize, &[EnvBelief; 3]),
) -> Result<(), BeliefError> {
    let first = &traj.states[0];
    let mut beliefs: [EnvBelief; 3] = std::array::from_fn(|_| EnvBelief::uniform_for(first));
    for (k, _) in traj.actions.iter().enumerate() {
        let state = &traj.states[k];
        for (b, rf) in beliefs.iter_mut().zip(ReceptiveField::ALL) {
            b.update(&observe(state, rf))?;
        }
        visit(k, &beliefs);
        let next = &traj.states[k + 1];
        if next.cells() != state.cells() {
            for b in beliefs.iter_mut() {
                apply_own_effect(b, next)?;
            }
        }
    }
    Ok(())
}

/// Posterior snapshots: entry `k` is the belief after the first `k` actions.
pub type BeliefTrace = Vec<TeacherBelief>;

/// Runs several behaviour models over the same trajectory, sharing the simulated
/// learner beliefs. Returns one trace per model.
pub fn trace_teacher_beliefs(
    prior: &TeacherBelief,
    models: &[BehaviorModel],
    traj: &Trajectory,
) -> Result<Vec<BeliefTrace>, BeliefError> {
    let dists = ObjectDistances::new(&traj.states[0]);
    let mut current: Vec<TeacherBelief> = models.iter().map(|_| prior.clone()).collect();
    let mut traces: Vec<BeliefTrace> = models.iter().map(|_| vec![prior.clone()]).collect();
    replay_simulated_beliefs(traj, |k, beliefs| {
        let observed = traj.actions[k];
        let pose = traj.states[k].agent;
        for (m, model) in models.iter().enumerate() {
            current[m].observe(|_, spec| {
                let b = &beliefs[rf_index(spec.rf)];
                match model {
                    BehaviorModel::Aligned => aligned_likelihood(spec, b, &pose, observed),
                    BehaviorModel::Rational { lambda } => {
                        rational_distribution(*lambda, spec, b, &pose, &dists)[observed.index()]
                            .max(LIKELIHOOD_FLOOR)
                    }
                }
            });
            traces[m].push(current[m].clone());
        }
    })?;
    Ok(traces)
}

/// Sequential Bayesian update of `tb` over every step of `traj`.
pub fn update_teacher_belief(
    tb: &TeacherBelief,
    model: BehaviorModel,
    traj: &Trajectory,
) -> Result<TeacherBelief, BeliefError> {
    let mut traces = trace_teacher_beliefs(tb, &[model], traj)?;
    Ok(traces.pop().and_then(|mut t| t.pop()).expect("trace has a prior entry"))
}

// ---------------------------------------------------------------------------
// Predicted rewards and utilities
// ---------------------------------------------------------------------------

/// Episode of a learner that acts by sampling the Boltzmann model.
pub fn rational_rollout(
    world: &GridWorld,
    spec: LearnerSpec,
    initial_belief: EnvBelief,
    lambda: f64,
    dists: &ObjectDistances,
    rng: &mut impl Rng,
) -> Result<EpisodeSummary, BeliefError> {
    let mut world = world.clone();
    let mut belief = initial_belief;
    let mut length = 0;
    while length < world.max_steps && !world.door_open(spec.goal) {
        belief.update(&observe(&world, spec.rf))?;
        let p = rational_distribution(lambda, spec, &belief, &world.agent, dists);
        let action = Action::ALL[WeightedIndex::new(p).expect("a proper distribution").sample(rng)];
        if step_in_place(&mut world, action) {
            apply_own_effect(&mut belief, &world)?;
        }
        length += 1;
    }
    let opened = world.door_open(spec.goal);
    Ok(EpisodeSummary { length, goal_door_opened: opened, reward: reward(length, opened, world.max_steps) })
}

/// Reward the teacher predicts for a learner `spec` starting from `belief`:
/// the true policy's outcome (aligned) or the mean over Boltzmann rollouts.
pub fn predicted_reward(
    model: BehaviorModel,
    demo_world: &GridWorld,
    dists: &ObjectDistances,
    spec: LearnerSpec,
    belief: &EnvBelief,
    rollouts: usize,
    rng: &mut impl Rng,
) -> Result<f64, BeliefError> {
    match model {
        BehaviorModel::Aligned => Ok(rollout(demo_world, spec, belief.clone())?.reward),
        BehaviorModel::Rational { lambda } => {
            let n = rollouts.max(1);
            let mut total = 0.0;
            for _ in 0..n {
                total += rational_rollout(demo_world, spec, belief.clone(), lambda, dists, rng)?.reward;
            }
            Ok(total / n as f64)
        }
    }
}

/// Expected utility of `demo` under the teacher's belief, computed from scratch.
#[allow(clippy::too_many_arguments)]
pub fn estimate_utility(
    demo: &Demonstration,
    demos: &DemoSet,
    tb: &TeacherBelief,
    model: BehaviorModel,
    demo_world: &GridWorld,
    cost: CostParams,
    rollouts: usize,
    rng: &mut impl Rng,
) -> Result<f64, BeliefError> {
    let dists = ObjectDistances::new(demo_world);
    let mut expected = 0.0;
    for (spec, w) in tb.iter() {
        if w < PRUNE_THRESHOLD {
            continue;
        }
        let belief = apply_demonstration(demo_world, demo, spec.rf)?;
        expected += w * predicted_reward(model, demo_world, &dists, spec, &belief, rollouts, rng)?;
    }
    Ok(expected - crate::demos::teaching_cost(demo, cost, demos.l_max))
}

/// Reward of every (demo, hypothesis) pair under one behaviour model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTable {
    /// `rewards[demo][hypothesis_index]`.
    pub rewards: Vec<[f64; NUM_HYPOTHESES]>,
}

impl RewardTable {
    pub fn get(&self, demo: usize, spec: LearnerSpec) -> f64 {
        self.rewards[demo][hypothesis_index(spec)]
    }

    /// Fills the table. Beliefs after each demo are shared across goals, and a
    /// fully observing learner ignores demonstrations, so its rewards are computed
    /// once per goal when the model is deterministic. Each stochastic cell draws
    /// from its own stream seeded by `seed_for(demo, hypothesis)`.
    pub fn compute(
        model: BehaviorModel,
        demo_world: &GridWorld,
        demos: &DemoSet,
        rollouts: usize,
        seed_for: impl Fn(usize, usize) -> u64,
    ) -> Result<RewardTable, BeliefError> {
        let dists = ObjectDistances::new(demo_world);
        let hyps = LearnerSpec::all();
        let mut rewards = vec![[0.0; NUM_HYPOTHESES]; demos.len()];
        let mut full_cache: [Option<f64>; 4] = [None; 4];
        for (d, demo) in demos.demos.iter().enumerate() {
            let beliefs: Vec<EnvBelief> = ReceptiveField::ALL
                .iter()
                .map(|&rf| apply_demonstration(demo_world, demo, rf))
                .collect::<Result<_, _>>()?;
            for (h, &spec) in hyps.iter().enumerate() {
                let cached = match (model, spec.rf) {
                    (BehaviorModel::Aligned, ReceptiveField::Full) => full_cache[spec.goal.index()],
                    _ => None,
                };
                rewards[d][h] = match cached {
                    Some(r) => r,
                    None => {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(d, h));
                        let b = &beliefs[rf_index(spec.rf)];
                        let r = predicted_reward(model, demo_world, &dists, spec, b, rollouts, &mut rng)?;
                        if model == BehaviorModel::Aligned && spec.rf == ReceptiveField::Full {
                            full_cache[spec.goal.index()] = Some(r);
                        }
                        r
                    }
                };
            }
        }
        Ok(RewardTable { rewards })
    }
}

/// `Σ_h w_h · R[d][h] − cost(d)` over hypotheses heavier than [`PRUNE_THRESHOLD`].
pub fn estimated_utilities(tb: &TeacherBelief, table: &RewardTable, demos: &DemoSet, cost: CostParams) -> Vec<f64> {
    (0..demos.len())
        .map(|d| {
            let expected: f64 = tb
                .iter()
                .filter(|&(_, w)| w >= PRUNE_THRESHOLD)
                .map(|(spec, w)| w * table.get(d, spec))
                .sum();
            expected - demos.cost(d, cost)
        })
        .collect()
}

/// Index of the first maximum.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Teacher kinds and demonstration selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TeacherKind {
    AlignedToM,
    RationalToM { lambda: f64 },
    Omniscient,
    RewardOptimalNonAdaptive,
    UtilityOptimalNonAdaptive,
    UniformModelling,
    UniformSampling,
}

impl TeacherKind {
    /// The seven teachers with the rational teacher at temperature `lambda`.
    pub fn all(lambda: f64) -> Vec<TeacherKind> {
        vec![
            TeacherKind::AlignedToM,
            TeacherKind::RationalToM { lambda },
            TeacherKind::Omniscient,
            TeacherKind::UtilityOptimalNonAdaptive,
            TeacherKind::RewardOptimalNonAdaptive,
            TeacherKind::UniformSampling,
            TeacherKind::UniformModelling,
        ]
    }

    pub fn model(self) -> Option<BehaviorModel> {
        match self {
            TeacherKind::AlignedToM => Some(BehaviorModel::Aligned),
            TeacherKind::RationalToM { lambda } => Some(BehaviorModel::rational(lambda)),
            _ => None,
        }
    }

    /// Whether the teacher ignores the observed learner.
    pub fn is_learner_agnostic(self) -> bool {
        matches!(
            self,
            TeacherKind::RewardOptimalNonAdaptive
                | TeacherKind::UtilityOptimalNonAdaptive
                | TeacherKind::UniformModelling
                | TeacherKind::UniformSampling
        )
    }

    /// Stable tag used to derive this teacher's random stream.
    pub fn stream_tag(self) -> &'static str {
        match self {
            TeacherKind::AlignedToM => "aligned_tom",
            TeacherKind::RationalToM { .. } => "rational_tom",
            TeacherKind::Omniscient => "omniscient",
            TeacherKind::RewardOptimalNonAdaptive => "reward_optimal",
            TeacherKind::UtilityOptimalNonAdaptive => "utility_optimal",
            TeacherKind::UniformModelling => "uniform_modelling",
            TeacherKind::UniformSampling => "uniform_sampling",
        }
    }
}

impl fmt::Display for TeacherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TeacherKind::RationalToM { lambda } => write!(f, "rational_tom:{lambda}"),
            other => f.write_str(other.stream_tag()),
        }
    }
}

impl FromStr for TeacherKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "aligned_tom" => TeacherKind::AlignedToM,
            "omniscient" => TeacherKind::Omniscient,
            "reward_optimal" => TeacherKind::RewardOptimalNonAdaptive,
            "utility_optimal" => TeacherKind::UtilityOptimalNonAdaptive,
            "uniform_modelling" => TeacherKind::UniformModelling,
            "uniform_sampling" => TeacherKind::UniformSampling,
            _ => {
                let lambda = s
                    .strip_prefix("rational_tom:")
                    .and_then(|l| l.parse::<f64>().ok())
                    .filter(|l| *l > 0.0)
                    .ok_or_else(|| format!("unknown teacher `{s}`"))?;
                TeacherKind::RationalToM { lambda }
            }
        })
    }
}

impl Serialize for TeacherKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TeacherKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// What a ToM teacher brings to selection: its posterior and its predicted rewards.
#[derive(Debug, Clone, Copy)]
pub struct ToMInputs<'a> {
    pub posterior: &'a TeacherBelief,
    pub predicted: &'a RewardTable,
}

/// Everything the teachers of one trial select from.
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext<'a> {
    pub demos: &'a DemoSet,
    pub cost: CostParams,
    /// Rewards of the true learner policy; also the aligned teacher's predictions.
    pub true_rewards: &'a RewardTable,
    /// The actual learner; only the omniscient teacher looks at it.
    pub learner: LearnerSpec,
    pub tom: Option<ToMInputs<'a>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub demo_id: usize,
    /// Per-demo scores the teacher maximized, when it scored demos at all.
    pub scores: Option<Vec<f64>>,
}

fn true_utilities(ctx: &SelectionContext, spec: LearnerSpec) -> Vec<f64> {
    (0..ctx.demos.len())
        .map(|d| ctx.true_rewards.get(d, spec) - ctx.demos.cost(d, ctx.cost))
        .collect()
}

fn mean_over_learners(ctx: &SelectionContext, with_cost: bool) -> Vec<f64> {
    let hyps = LearnerSpec::all();
    (0..ctx.demos.len())
        .map(|d| {
            let mean = hyps.iter().map(|&h| ctx.true_rewards.get(d, h)).sum::<f64>() / hyps.len() as f64;
            if with_cost {
                mean - ctx.demos.cost(d, ctx.cost)
            } else {
                mean
            }
        })
        .collect()
}

/// Picks a demonstration; ties go to the lowest demo index.
///
/// # Panics
/// If a ToM teacher is asked to select without [`ToMInputs`].
pub fn select_demonstration(kind: TeacherKind, ctx: &SelectionContext, rng: &mut impl Rng) -> Selection {
    let scored = |scores: Vec<f64>| Selection { demo_id: argmax_first(&scores), scores: Some(scores) };
    match kind {
        TeacherKind::AlignedToM | TeacherKind::RationalToM { .. } => {
            let tom = ctx.tom.expect("ToM teacher needs a posterior and predicted rewards");
            scored(estimated_utilities(tom.posterior, tom.predicted, ctx.demos, ctx.cost))
        }
        TeacherKind::Omniscient => scored(true_utilities(ctx, ctx.learner)),
        TeacherKind::RewardOptimalNonAdaptive => scored(mean_over_learners(ctx, false)),
        TeacherKind::UtilityOptimalNonAdaptive => scored(mean_over_learners(ctx, true)),
        TeacherKind::UniformModelling => {
            let hyps = LearnerSpec::all();
            let sampled = hyps[rng.gen_range(0..hyps.len())];
            scored(true_utilities(ctx, sampled))
        }
        TeacherKind::UniformSampling => Selection { demo_id: rng.gen_range(0..ctx.demos.len()), scores: None },
    }
}

/// Teacher decision record for audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionAudit {
    pub teacher: TeacherKind,
    pub posterior: Option<TeacherBelief>,
    pub scores: Option<Vec<f64>>,
    pub selected_demo: usize,
}
