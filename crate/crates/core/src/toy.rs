//! Button-toy environment: N buttons of which M play music. Learners differ only
//! in their prior over toy configurations; a teacher infers that prior from button
//! presses and picks one of four demonstrations.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{derive_seed, stream};
use crate::metrics::SummaryStat;
use crate::teachers::{argmax_first, TeacherKind};

pub const DEFAULT_BUTTONS: usize = 20;
pub const DEFAULT_MUSICAL: usize = 3;
/// Prior classes: 0 is uninformed, `i > 0` believes exactly `i` buttons are musical.
pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToyError {
    #[error("revealing button {button} as {musical} leaves no consistent configuration")]
    Inconsistent { button: usize, musical: bool },
}

/// A configuration of the toy as a bit mask (bit `n` set = button `n` is musical).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ToyState {
    pub buttons: u32,
    pub n: usize,
}

impl ToyState {
    pub fn random(n: usize, m: usize, rng: &mut impl Rng) -> ToyState {
        assert!(n <= 32 && m <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        ToyState { buttons: idx[..m].iter().fold(0, |acc, &i| acc | 1 << i), n }
    }

    pub fn is_musical(&self, button: usize) -> bool {
        self.buttons >> button & 1 == 1
    }

    pub fn musical(&self) -> Vec<usize> {
        (0..self.n).filter(|&b| self.is_musical(b)).collect()
    }
}

/// A learner's belief over configurations, uniform over those still consistent.
///
/// Class 0 is stored implicitly as the revealed constraints; classes 1..=3
/// enumerate every configuration with exactly `class` musical buttons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyLearnerBelief {
    pub class: usize,
    n: usize,
    revealed_mask: u32,
    revealed_values: u32,
    support: Option<Vec<u32>>,
}

fn combinations(n: usize, k: usize) -> Vec<u32> {
    fn go(start: usize, n: usize, k: usize, acc: u32, out: &mut Vec<u32>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for b in start..=n - k {
            go(b + 1, n, k - 1, acc | 1 << b, out);
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, 0, &mut out);
    }
    out
}

impl ToyLearnerBelief {
    pub fn prior(class: usize, n: usize) -> Self {
        assert!(class < NUM_CLASSES && n <= 24, "unsupported toy prior");
        let support = (class > 0).then(|| combinations(n, class));
        ToyLearnerBelief { class, n, revealed_mask: 0, revealed_values: 0, support }
    }

    /// Number of configurations with nonzero mass.
    pub fn support_size(&self) -> u64 {
        match &self.support {
            Some(s) => s.len() as u64,
            None => 1u64 << (self.n - self.revealed_mask.count_ones() as usize),
        }
    }

    pub fn probability(&self, state: u32) -> f64 {
        let consistent = match &self.support {
            Some(s) => s.contains(&state),
            None => state & self.revealed_mask == self.revealed_values && state >> self.n == 0,
        };
        if consistent {
            1.0 / self.support_size() as f64
        } else {
            0.0
        }
    }

    /// The configuration believed with certainty, if any.
    pub fn certain_state(&self) -> Option<u32> {
        match &self.support {
            Some(s) if s.len() == 1 => Some(s[0]),
            None if self.revealed_mask.count_ones() as usize == self.n => Some(self.revealed_values),
            _ => None,
        }
    }

    /// Conditions on one revealed button.
    pub fn reveal(&mut self, button: usize, musical: bool) -> Result<(), ToyError> {
        let bit = 1u32 << button;
        let want = if musical { bit } else { 0 };
        match &mut self.support {
            Some(s) => {
                let kept: Vec<u32> = s.iter().copied().filter(|st| st & bit == want).collect();
                if kept.is_empty() {
                    return Err(ToyError::Inconsistent { button, musical });
                }
                *s = kept;
            }
            None => {
                if self.revealed_mask & bit != 0 && self.revealed_values & bit != want {
                    return Err(ToyError::Inconsistent { button, musical });
                }
                self.revealed_mask |= bit;
                self.revealed_values = (self.revealed_values & !bit) | want;
            }
        }
        Ok(())
    }

    /// Reveals in order, skipping any revelation that contradicts the prior.
    /// A learner certain of a configuration keeps that certainty.
    pub fn reveal_lenient(&mut self, button: usize, musical: bool) -> bool {
        self.reveal(button, musical).is_ok()
    }

    /// Probability of pressing each button: uniform over the musical buttons of a
    /// certain configuration, otherwise uniform over all buttons.
    pub fn policy(&self) -> Vec<f64> {
        match self.certain_state() {
            Some(s) if s != 0 => {
                let k = s.count_ones() as f64;
                (0..self.n).map(|b| if s >> b & 1 == 1 { 1.0 / k } else { 0.0 }).collect()
            }
            _ => vec![1.0 / self.n as f64; self.n],
        }
    }
}

/// Strict update with every revealed pair; fails when the support empties.
pub fn toy_update(belief: &ToyLearnerBelief, revealed: &[(usize, bool)]) -> Result<ToyLearnerBelief, ToyError> {
    let mut b = belief.clone();
    for &(button, musical) in revealed {
        b.reveal(button, musical)?;
    }
    Ok(b)
}

pub fn toy_act(belief: &ToyLearnerBelief, rng: &mut impl Rng) -> usize {
    let p = belief.policy();
    match belief.certain_state() {
        Some(s) if s != 0 => {
            let musical: Vec<usize> = (0..belief.n).filter(|&b| p[b] > 0.0).collect();
            musical[rng.gen_range(0..musical.len())]
        }
        _ => rng.gen_range(0..belief.n),
    }
}

/// Teacher belief over the prior classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyTeacherBelief {
    pub weights: [f64; NUM_CLASSES],
}

impl Default for ToyTeacherBelief {
    fn default() -> Self {
        ToyTeacherBelief { weights: [1.0 / NUM_CLASSES as f64; NUM_CLASSES] }
    }
}

/// One step of the teacher's trace: its belief after a press, and whether classes
/// 0 and 3 have predicted identical press distributions for every press so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyTraceStep {
    pub belief: ToyTeacherBelief,
    pub zero_and_three_agree: bool,
}

/// Bayesian update over the classes from observed (press, outcome) pairs. Each
/// class's simulated learner sees the same outcomes its real counterpart would.
pub fn toy_teacher_update(tb: &ToyTeacherBelief, observed: &[(usize, bool)], n: usize) -> ToyTeacherBelief {
    toy_teacher_trace(tb, observed, n).last().map_or(*tb, |s| s.belief)
}

pub fn toy_teacher_trace(tb: &ToyTeacherBelief, observed: &[(usize, bool)], n: usize) -> Vec<ToyTraceStep> {
    let mut sims: Vec<ToyLearnerBelief> = (0..NUM_CLASSES).map(|c| ToyLearnerBelief::prior(c, n)).collect();
    let mut w = tb.weights;
    let mut trace = Vec::with_capacity(observed.len());
    let mut agree = true;
    for &(press, outcome) in observed {
        let policies: Vec<Vec<f64>> = sims.iter().map(ToyLearnerBelief::policy).collect();
        let mut next = [0.0; NUM_CLASSES];
        for c in 0..NUM_CLASSES {
            next[c] = w[c] * policies[c][press];
        }
        let z: f64 = next.iter().sum();
        if z > 0.0 {
            next.iter_mut().for_each(|x| *x /= z);
            w = next;
        } else {
            log::warn!("toy teacher posterior vanished; keeping the previous belief");
        }
        agree &= policies[0] == policies[3];
        for s in sims.iter_mut() {
            s.reveal_lenient(press, outcome);
        }
        trace.push(ToyTraceStep { belief: ToyTeacherBelief { weights: w }, zero_and_three_agree: agree });
    }
    trace
}

/// Four demonstrations: 1, 2 and 3 musical buttons, then every button in order.
pub fn toy_demos(state: &ToyState, rng: &mut impl Rng) -> Vec<Vec<(usize, bool)>> {
    let mut musical = state.musical();
    musical.shuffle(rng);
    let mut demos: Vec<Vec<(usize, bool)>> =
        (1..=musical.len().min(3)).map(|i| musical[..i].iter().map(|&b| (b, true)).collect()).collect();
    demos.push((0..state.n).map(|b| (b, state.is_musical(b))).collect());
    demos
}

/// Belief of a class-`class` learner after a demonstration, revealed leniently.
pub fn post_demo_belief(class: usize, n: usize, demo: &[(usize, bool)]) -> ToyLearnerBelief {
    let mut b = ToyLearnerBelief::prior(class, n);
    for &(button, musical) in demo {
        b.reveal_lenient(button, musical);
    }
    b
}

/// Expected reward of a single press by `belief` on `state`.
pub fn expected_reward(belief: &ToyLearnerBelief, state: &ToyState) -> f64 {
    belief.policy().iter().enumerate().filter(|&(b, _)| state.is_musical(b)).map(|(_, p)| p).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    pub trials_per_class: usize,
    pub buttons: usize,
    pub musical: usize,
    pub observed_actions: usize,
    /// Cost per revealed button.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { trials_per_class: 300, buttons: DEFAULT_BUTTONS, musical: DEFAULT_MUSICAL, observed_actions: 40, alpha: 0.03, seed: 0 }
    }
}

pub fn toy_teachers() -> Vec<TeacherKind> {
    vec![
        TeacherKind::AlignedToM,
        TeacherKind::Omniscient,
        TeacherKind::UtilityOptimalNonAdaptive,
        TeacherKind::RewardOptimalNonAdaptive,
        TeacherKind::UniformSampling,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyResult {
    pub trial: usize,
    pub class: usize,
    pub teacher: TeacherKind,
    pub demo_id: usize,
    pub demo_len: usize,
    pub reward: f64,
    pub cost: f64,
    pub utility: f64,
    pub posterior: Option<[f64; NUM_CLASSES]>,
}

/// Per-trial record of the aligned teacher's inference, for the class 0/3 check.
#[derive(Debug, Clone)]
pub struct ToyTrial {
    pub results: Vec<ToyResult>,
    pub trace: Vec<ToyTraceStep>,
}

pub fn run_toy_trial(config: &ToyConfig, trial: usize) -> ToyTrial {
    let class = trial / config.trials_per_class.max(1) % NUM_CLASSES;
    let seed = derive_seed(config.seed, trial as u64, "toy_trial");
    let (n, m) = (config.buttons, config.musical);
    let mut env_rng = stream(seed, 0, "toy_envs");
    let obs_state = ToyState::random(n, m, &mut env_rng);
    let demo_state = ToyState::random(n, m, &mut env_rng);
    let demos = toy_demos(&demo_state, &mut env_rng);

    // the learner acting on the observation toy
    let mut learner = ToyLearnerBelief::prior(class, n);
    let mut act_rng = stream(seed, 0, "toy_learner");
    let observed: Vec<(usize, bool)> = (0..config.observed_actions)
        .map(|_| {
            let a = toy_act(&learner, &mut act_rng);
            let o = obs_state.is_musical(a);
            learner.reveal_lenient(a, o);
            (a, o)
        })
        .collect();
    let trace = toy_teacher_trace(&ToyTeacherBelief::default(), &observed, n);
    let posterior = trace.last().map_or_else(ToyTeacherBelief::default, |s| s.belief);

    // expected[d][c]: expected reward of class c after demo d
    let expected: Vec<[f64; NUM_CLASSES]> = demos
        .iter()
        .map(|d| std::array::from_fn(|c| expected_reward(&post_demo_belief(c, n, d), &demo_state)))
        .collect();
    let cost = |d: usize| config.alpha * demos[d].len() as f64;
    let utilities = |score: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..demos.len()).map(score).collect() };
    let mean = |d: usize| expected[d].iter().sum::<f64>() / NUM_CLASSES as f64;

    let mut results = Vec::new();
    for teacher in toy_teachers() {
        let demo_id = match teacher {
            TeacherKind::AlignedToM => argmax_first(&utilities(&|d| {
                (0..NUM_CLASSES).map(|c| posterior.weights[c] * expected[d][c]).sum::<f64>() - cost(d)
            })),
            TeacherKind::Omniscient => argmax_first(&utilities(&|d| expected[d][class] - cost(d))),
            TeacherKind::UtilityOptimalNonAdaptive => argmax_first(&utilities(&|d| mean(d) - cost(d))),
            TeacherKind::RewardOptimalNonAdaptive => argmax_first(&utilities(&mean)),
            _ => stream(seed, 0, "toy_uniform_sampling").gen_range(0..demos.len()),
        };
        // the single evaluation press draws from a stream tied to the demo, so
        // teachers choosing the same demo are scored on the same press
        let belief = post_demo_belief(class, n, &demos[demo_id]);
        let press = toy_act(&belief, &mut stream(seed, demo_id as u64, "toy_eval_press"));
        let reward = f64::from(u8::from(demo_state.is_musical(press)));
        let c = cost(demo_id);
        results.push(ToyResult {
            trial,
            class,
            teacher,
            demo_id,
            demo_len: demos[demo_id].len(),
            reward,
            cost: c,
            utility: reward - c,
            posterior: (teacher == TeacherKind::AlignedToM).then_some(posterior.weights),
        });
    }
    ToyTrial { results, trace }
}

pub fn run_toy_experiment(config: &ToyConfig) -> Vec<ToyTrial> {
    (0..config.trials_per_class * NUM_CLASSES).into_par_iter().map(|t| run_toy_trial(config, t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySummaryRow {
    pub teacher: TeacherKind,
    pub class: usize,
    pub stat: SummaryStat,
}

pub fn summarize_toy(trials: &[ToyTrial]) -> Vec<ToySummaryRow> {
    let mut rows = Vec::new();
    for teacher in toy_teachers() {
        for class in 0..NUM_CLASSES {
            let xs: Vec<f64> = trials
                .iter()
                .flat_map(|t| &t.results)
                .filter(|r| r.teacher == teacher && r.class == class)
                .map(|r| r.utility)
                .collect();
            if !xs.is_empty() {
                rows.push(ToySummaryRow { teacher, class, stat: SummaryStat::of(&xs) });
            }
        }
    }
    rows
}

pub fn write_toy_csv(path: &std::path::Path, trials: &[ToyTrial]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["trial", "class", "teacher", "demo_id", "demo_len", "reward", "cost", "utility", "posterior"])?;
    for r in trials.iter().flat_map(|t| &t.results) {
        let posterior =
            r.posterior.map(|p| p.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(";")).unwrap_or_default();
        w.write_record([
            r.trial.to_string(),
            r.class.to_string(),
            r.teacher.to_string(),
            r.demo_id.to_string(),
            r.demo_len.to_string(),
            format!("{:.6}", r.reward),
            format!("{:.6}", r.cost),
            format!("{:.6}", r.utility),
            posterior,
        ])?;
    }
    w.flush()?;
    Ok(())
}
