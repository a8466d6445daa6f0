//! Utility-based adaptive teaching in door/key gridworlds.
//!
//! Learners pursue a goal colour under a limited receptive field. Teachers watch
//! a learner in a small environment, infer its goal and receptive field with a
//! Bayesian theory-of-mind model, and pick the demonstration for a larger
//! environment that maximizes the learner's reward minus the teaching cost.

pub mod belief;
pub mod demos;
pub mod gridworld;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod pathing;
pub mod teachers;
pub mod toy;
