//! Demonstrations on the demonstration environment: generation by nearest-neighbour
//! touring, the shared demonstration set, teleoperated delivery and teaching cost.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, EnvBelief};
use crate::gridworld::{
    observe, step_in_place, visible_coords, Action, Color, Coord, GridWorld, ObjectKind, ReceptiveField,
};
use crate::learner::LearnerSpec;
use crate::pathing::{astar_path_facing, dijkstra_map, KnownGrid, PathError};

/// Smallest receptive field; used for the random-object demos.
pub const SMALLEST_FIELD: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DemoError {
    #[error("object {0} is not present in the environment")]
    MissingObject(ObjectKind),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// What a demonstration was built to show.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum DemoTag {
    /// Key and door of `goal`, stopping as soon as each enters a field of size `rf`.
    Learner { goal: Color, rf: ReceptiveField },
    /// `n` randomly chosen objects seen through the smallest field.
    RandomObjects { n: usize },
}

impl std::fmt::Display for DemoTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DemoTag::Learner { goal, rf } => write!(f, "learner:{goal}:{rf}"),
            DemoTag::RandomObjects { n } => write!(f, "objects:{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub id: usize,
    pub tag: DemoTag,
    pub shown: Vec<ObjectKind>,
    pub actions: Vec<Action>,
}

impl Demonstration {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// The menu every teacher of a trial chooses from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSet {
    pub demos: Vec<Demonstration>,
    pub l_max: usize,
}

impl DemoSet {
    pub fn new(demos: Vec<Demonstration>) -> DemoSet {
        let l_max = demos.iter().map(Demonstration::len).max().unwrap_or(1).max(1);
        DemoSet { demos, l_max }
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    pub fn cost(&self, id: usize, params: CostParams) -> f64 {
        teaching_cost(&self.demos[id], params, self.l_max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("demo set serialization cannot fail")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub alpha: f64,
}

impl CostParams {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha >= 0.0, "teaching cost parameter must be non-negative");
        CostParams { alpha }
    }
}

/// `alpha * length / l_max`.
pub fn teaching_cost(demo: &Demonstration, params: CostParams, l_max: usize) -> f64 {
    params.alpha * demo.len() as f64 / l_max as f64
}

/// Tours `objects` from the start pose: repeatedly head for the nearest unshown
/// object along an A* path and stop approaching once it enters the field of view.
/// Under full observability every object is in view from the start. A demo that
/// would be empty is padded with one left turn.
pub fn generate_show_objects_demo(
    world: &GridWorld,
    objects: &[ObjectKind],
    rf: ReceptiveField,
) -> Result<Vec<Action>, DemoError> {
    let mut pending: Vec<(ObjectKind, Coord)> = objects
        .iter()
        .map(|&o| world.find(o).map(|c| (o, c)).ok_or(DemoError::MissingObject(o)))
        .collect::<Result<_, _>>()?;
    let grid = KnownGrid::from_world(world);
    let mut walker = world.clone();
    let mut actions = Vec::new();

    let drop_visible = |walker: &GridWorld, pending: &mut Vec<(ObjectKind, Coord)>| match rf {
        ReceptiveField::Full => pending.clear(),
        ReceptiveField::Partial(v) => {
            let seen = visible_coords(&walker.agent, v, walker.width(), walker.height(), |c| {
                walker.get(c).is_see_through()
            });
            pending.retain(|(_, c)| !seen.contains(c));
        }
    };
    drop_visible(&walker, &mut pending);

    while !pending.is_empty() {
        let dist = dijkstra_map(&grid, walker.agent.pos);
        let reach = |c: Coord| {
            world
                .neighbours(c)
                .filter_map(|n| dist.get(n))
                .min()
                .map(|d| d + 1)
                .unwrap_or(u32::MAX)
        };
        let (_, target) = *pending
            .iter()
            .min_by_key(|(_, c)| reach(*c))
            .expect("pending is non-empty");
        let path = astar_path_facing(&grid, walker.agent, target)?;
        for a in path {
            step_in_place(&mut walker, a);
            actions.push(a);
            drop_visible(&walker, &mut pending);
            if !pending.iter().any(|&(_, c)| c == target) {
                break;
            }
        }
        // facing the object guarantees it is in view
        pending.retain(|&(_, c)| c != target);
    }
    if actions.is_empty() {
        actions.push(Action::TurnLeft);
    }
    Ok(actions)
}

/// Twelve learner-specific demos (goal-major, fields 3/5/full) followed by six
/// random-object demos for N = 3..=8.
pub fn build_demo_set(world: &GridWorld, rng_seed: u64) -> Result<DemoSet, DemoError> {
    let mut demos = Vec::with_capacity(18);
    for spec in LearnerSpec::all() {
        let shown = vec![ObjectKind::Key(spec.goal), ObjectKind::Door(spec.goal)];
        let actions = generate_show_objects_demo(world, &shown, spec.rf)?;
        demos.push(Demonstration {
            id: demos.len(),
            tag: DemoTag::Learner { goal: spec.goal, rf: spec.rf },
            shown,
            actions,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for n in 3..=ObjectKind::ALL.len() {
        let mut picked: Vec<usize> = sample(&mut rng, ObjectKind::ALL.len(), n).into_vec();
        picked.sort_unstable();
        let shown: Vec<ObjectKind> = picked.into_iter().map(|i| ObjectKind::ALL[i]).collect();
        let actions = generate_show_objects_demo(world, &shown, ReceptiveField::V3)?;
        demos.push(Demonstration { id: demos.len(), tag: DemoTag::RandomObjects { n }, shown, actions });
    }
    Ok(DemoSet::new(demos))
}

/// Teleoperated delivery: the learner starts uniform and observes through its own
/// field after every demo action. The returned belief is all that carries over;
/// the environment itself is reset.
pub fn apply_demonstration(
    world: &GridWorld,
    demo: &Demonstration,
    rf: ReceptiveField,
) -> Result<EnvBelief, BeliefError> {
    let mut belief = EnvBelief::uniform_for(world);
    let mut walker = world.clone();
    for &a in &demo.actions {
        step_in_place(&mut walker, a);
        belief.update(&observe(&walker, rf))?;
    }
    Ok(belief)
}
