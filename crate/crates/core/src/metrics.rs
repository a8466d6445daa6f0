//! Evaluation statistics: per-trial results, summaries with confidence intervals,
//! MAP estimates, belief entropy, Welch's t-test and inference-accuracy curves.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::gridworld::{Action, Color, ReceptiveField};
use crate::learner::LearnerSpec;
use crate::teachers::{BeliefTrace, TeacherBelief, TeacherKind};

/// One teacher's outcome on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub trial_seed: u64,
    pub teacher: TeacherKind,
    pub goal: Color,
    pub rf: ReceptiveField,
    pub alpha: f64,
    pub regime: String,
    pub demo_id: usize,
    pub demo_len: usize,
    pub reward: f64,
    pub cost: f64,
    pub utility: f64,
    /// Posterior weights in hypothesis order, for ToM teachers.
    pub posterior: Option<Vec<f64>>,
}

impl TrialResult {
    pub fn spec(&self) -> LearnerSpec {
        LearnerSpec::new(self.goal, self.rf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci95: f64,
    pub n: usize,
}

impl SummaryStat {
    pub fn of(samples: &[f64]) -> SummaryStat {
        let n = samples.len();
        if n == 0 {
            return SummaryStat { mean: f64::NAN, ci95: f64::NAN, n };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let ci95 = if n < 2 { 0.0 } else { 1.96 * (sample_variance(samples, mean) / n as f64).sqrt() };
        SummaryStat { mean, ci95, n }
    }
}

fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Goal and receptive-field maximizers of the posterior marginals; ties go to the
/// earlier colour / smaller field.
pub fn map_estimates(tb: &TeacherBelief) -> (Color, ReceptiveField) {
    let g = tb.goal_marginal();
    let v = tb.rf_marginal();
    (Color::ALL[first_max(&g)], ReceptiveField::ALL[first_max(&v)])
}

fn first_max(xs: &[f64]) -> usize {
    const TIE: f64 = 1e-12;
    let best = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    xs.iter().position(|&x| x >= best - TIE).unwrap_or(0)
}

/// Shannon entropy in nats.
pub fn belief_entropy(tb: &TeacherBelief) -> f64 {
    tb.weights().iter().filter(|&&w| w > 0.0).map(|&w| -w * w.ln()).sum::<f64>().max(0.0)
}

/// Two-sided p-value of Welch's unequal-variance t-test.
///
/// # Panics
/// If either sample has fewer than two values.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> f64 {
    assert!(a.len() >= 2 && b.len() >= 2, "each sample needs at least two values");
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let (va, vb) = (sample_variance(a, ma) / na, sample_variance(b, mb) / nb);
    let se2 = va + vb;
    if se2 <= 0.0 {
        return if ma == mb { 1.0 } else { 0.0 };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// One observed episode and the teacher's posterior after each of its actions.
#[derive(Debug, Clone)]
pub struct ObservedEpisode<'a> {
    pub spec: LearnerSpec,
    pub actions: &'a [Action],
    /// Number of actions up to and including the goal-key pickup; the whole
    /// episode when the key is never picked up.
    pub phase1_len: usize,
    pub trace: &'a BeliefTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    /// Goal-MAP accuracy at this fraction of phase 1.
    pub goal_accuracy: f64,
    /// Receptive-field-MAP accuracy at this fraction of the episode.
    pub rf_accuracy: f64,
    /// Mean posterior entropy at this fraction of the episode.
    pub entropy: f64,
    /// Mean posterior entropy at this fraction of phase 1.
    pub phase1_entropy: f64,
    pub n: usize,
}

/// Accuracy and entropy of the MAP estimators over a grid of observation fractions.
/// The snapshot used for fraction `f` of a segment of length `L` is the one after
/// `round(f·L)` actions.
pub fn inference_accuracy_curves(episodes: &[ObservedEpisode], fractions: &[f64]) -> Vec<CurvePoint> {
    fractions
        .iter()
        .map(|&f| {
            let n = episodes.len();
            let (mut goal, mut rf, mut ent, mut ent1) = (0.0, 0.0, 0.0, 0.0);
            for e in episodes {
                let at = |len: usize| &e.trace[((f * len as f64).round() as usize).min(e.trace.len() - 1)];
                let p1 = at(e.phase1_len);
                let full = at(e.actions.len());
                goal += f64::from(u8::from(map_estimates(p1).0 == e.spec.goal));
                rf += f64::from(u8::from(map_estimates(full).1 == e.spec.rf));
                ent += belief_entropy(full);
                ent1 += belief_entropy(p1);
            }
            let d = n.max(1) as f64;
            CurvePoint {
                fraction: f,
                goal_accuracy: goal / d,
                rf_accuracy: rf / d,
                entropy: ent / d,
                phase1_entropy: ent1 / d,
                n,
            }
        })
        .collect()
}

/// `0, 1/steps, …, 1`.
pub fn fraction_grid(steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}
