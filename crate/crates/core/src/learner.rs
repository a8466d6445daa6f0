//! The shared learner policy: fetch the goal key, then open the goal door.
//!
//! When the current target's location is certain the learner follows an A* path
//! through cells it already knows; otherwise it takes the action whose next view
//! covers the most uncertainty.

use serde::{Deserialize, Serialize};

use crate::belief::{BeliefError, EnvBelief};
use crate::gridworld::{
    observe, reward, step_in_place, visible_coords, Action, AgentPose, Color, Coord, GridWorld,
    ObjectKind, ReceptiveField, TerminalReason, Trajectory,
};
use crate::pathing::astar_path_facing;

/// A learner's goal and receptive field. Also the unit of a teacher's hypothesis space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub goal: Color,
    pub rf: ReceptiveField,
}

impl LearnerSpec {
    pub fn new(goal: Color, rf: ReceptiveField) -> Self {
        LearnerSpec { goal, rf }
    }

    /// All goal × receptive-field pairs, goal-major.
    pub fn all() -> Vec<LearnerSpec> {
        Color::ALL
            .into_iter()
            .flat_map(|g| ReceptiveField::ALL.into_iter().map(move |rf| LearnerSpec::new(g, rf)))
            .collect()
    }
}

impl std::fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.goal, self.rf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    SeekKey,
    SeekDoor,
    Done,
}

impl Phase {
    pub fn of(spec: LearnerSpec, pose: &AgentPose, goal_door_open: bool) -> Phase {
        if goal_door_open {
            Phase::Done
        } else if pose.carrying == Some(spec.goal) {
            Phase::SeekDoor
        } else {
            Phase::SeekKey
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnerState {
    pub spec: LearnerSpec,
    pub belief: EnvBelief,
    pub pose: AgentPose,
    pub phase: Phase,
}

impl LearnerState {
    pub fn new(spec: LearnerSpec, belief: EnvBelief, pose: AgentPose) -> Self {
        let door = belief.known_location(ObjectKind::Door(spec.goal));
        let open = door.and_then(|c| belief.known(c)).is_some_and(|c| c.is_passable());
        let phase = Phase::of(spec, &pose, open);
        LearnerState { spec, belief, pose, phase }
    }
}

/// Cells the learner expects to see from `pose`, given what it believes blocks sight.
pub fn expected_view(belief: &EnvBelief, pose: &AgentPose, rf: ReceptiveField) -> Vec<Coord> {
    match rf {
        ReceptiveField::Full => (0..belief.height())
            .flat_map(|r| (0..belief.width()).map(move |c| Coord::new(r, c)))
            .collect(),
        ReceptiveField::Partial(v) => {
            visible_coords(pose, v, belief.width(), belief.height(), |c| belief.believed_see_through(c))
        }
    }
}

/// Pose after `action` as predicted from the belief alone.
pub fn believed_successor(belief: &EnvBelief, pose: &AgentPose, action: Action) -> AgentPose {
    let mut next = *pose;
    match action {
        Action::TurnLeft => next.dir = pose.dir.left(),
        Action::TurnRight => next.dir = pose.dir.right(),
        Action::Forward => {
            if let Some(f) = pose.front().filter(|&f| f.row < belief.height() && f.col < belief.width()) {
                if belief.known(f).is_some_and(|c| c.is_passable()) {
                    next.pos = f;
                }
            }
        }
        Action::Pickup | Action::Toggle => {}
    }
    next
}

/// Candidate order for exploration; earlier wins ties.
pub const EXPLORATION_ORDER: [Action; 5] =
    [Action::Forward, Action::TurnLeft, Action::TurnRight, Action::Pickup, Action::Toggle];

const GAIN_TIE: f64 = 1e-9;

/// Entropy of the cells visible after each action, in [`EXPLORATION_ORDER`].
pub fn exploration_gains(state: &LearnerState) -> [(Action, f64); 5] {
    gains_for(state.spec, &state.belief, &state.pose)
}

fn gains_for(spec: LearnerSpec, belief: &EnvBelief, pose: &AgentPose) -> [(Action, f64); 5] {
    if spec.rf == ReceptiveField::Full {
        // every action reveals the whole grid
        let total = belief.total_entropy();
        return EXPLORATION_ORDER.map(|a| (a, total));
    }
    EXPLORATION_ORDER.map(|a| {
        let next = believed_successor(belief, pose, a);
        let view = expected_view(belief, &next, spec.rf);
        (a, belief.cell_entropy_sum(&view))
    })
}

/// Action that uncovers the most entropy. With nothing to uncover the learner
/// walks forward when it can and turns left otherwise.
pub fn explore_action(state: &LearnerState) -> Action {
    explore(state.spec, &state.belief, &state.pose)
}

fn explore(spec: LearnerSpec, belief: &EnvBelief, pose: &AgentPose) -> Action {
    let gains = gains_for(spec, belief, pose);
    let best = gains.iter().map(|&(_, g)| g).fold(0.0, f64::max);
    if best <= GAIN_TIE {
        let ahead = believed_successor(belief, pose, Action::Forward);
        return if ahead.pos != pose.pos { Action::Forward } else { Action::TurnLeft };
    }
    gains
        .iter()
        .find(|&&(_, g)| g >= best - GAIN_TIE)
        .map(|&(a, _)| a)
        .expect("maximum is attained")
}

/// The learner's deterministic policy.
pub fn act(state: &LearnerState) -> Action {
    debug_assert!(state.phase != Phase::Done, "act called after the goal door opened");
    decide(state.spec, &state.belief, &state.pose)
}

/// [`act`] on borrowed parts, for callers that simulate many learners.
pub fn decide(spec: LearnerSpec, belief: &EnvBelief, pose: &AgentPose) -> Action {
    let target = if pose.carrying == Some(spec.goal) {
        ObjectKind::Door(spec.goal)
    } else {
        ObjectKind::Key(spec.goal)
    };
    if let Some(cell) = belief.known_location(target) {
        if pose.front() == Some(cell) {
            return match target {
                ObjectKind::Key(_) => Action::Pickup,
                ObjectKind::Door(_) => Action::Toggle,
            };
        }
        if let Ok(path) = astar_path_facing(&belief.known_grid(), *pose, cell) {
            if let Some(&first) = path.first() {
                return first;
            }
        }
    }
    explore(spec, belief, pose)
}

/// Length and outcome of an episode without the recorded states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub length: usize,
    pub goal_door_opened: bool,
    pub reward: f64,
}

/// Runs the policy from `world`'s current state with `initial_belief`.
pub fn run_episode(
    world: &GridWorld,
    spec: LearnerSpec,
    initial_belief: EnvBelief,
) -> Result<(Trajectory, f64), BeliefError> {
    let mut states = vec![world.clone()];
    let mut actions = Vec::new();
    let summary = drive(world, spec, initial_belief, |a, w| {
        actions.push(a);
        states.push(w.clone());
    })?;
    let terminal_reason = if summary.goal_door_opened {
        TerminalReason::GoalDoorOpened
    } else {
        TerminalReason::MaxStepsElapsed
    };
    Ok((Trajectory { states, actions, terminal_reason }, summary.reward))
}

/// Same as [`run_episode`] but records nothing.
pub fn rollout(
    world: &GridWorld,
    spec: LearnerSpec,
    initial_belief: EnvBelief,
) -> Result<EpisodeSummary, BeliefError> {
    drive(world, spec, initial_belief, |_, _| {})
}

/// Observe, update, act, step until the goal door opens or the budget runs out.
/// `record` sees each action and the state it led to.
pub(crate) fn drive(
    world: &GridWorld,
    spec: LearnerSpec,
    initial_belief: EnvBelief,
    mut record: impl FnMut(Action, &GridWorld),
) -> Result<EpisodeSummary, BeliefError> {
    let mut world = world.clone();
    let mut state = LearnerState::new(spec, initial_belief, world.agent);
    let mut length = 0;
    while length < world.max_steps && !world.door_open(spec.goal) {
        state.belief.update(&observe(&world, spec.rf))?;
        state.pose = world.agent;
        let action = act(&state);
        if step_in_place(&mut world, action) {
            apply_own_effect(&mut state.belief, &world)?;
        }
        length += 1;
        state.pose = world.agent;
        state.phase = Phase::of(spec, &world.agent, world.door_open(spec.goal));
        record(action, &world);
    }
    let opened = world.door_open(spec.goal);
    Ok(EpisodeSummary { length, goal_door_opened: opened, reward: reward(length, opened, world.max_steps) })
}

/// The learner knows what its own Pickup/Toggle did to the cell in front of it.
pub(crate) fn apply_own_effect(belief: &mut EnvBelief, after: &GridWorld) -> Result<(), BeliefError> {
    if let Some(front) = after.agent.front().filter(|&c| after.in_bounds(c)) {
        belief.set_known(front, after.get(front))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{CellContent, Direction, EnvKind};

    fn room() -> GridWorld {
        GridWorld::walled(11, 11, 121, EnvKind::Observation)
    }

    #[test]
    fn pickup_when_facing_known_goal_key() {
        let mut w = room();
        w.set(Coord::new(8, 5), CellContent::Key(Color::Green));
        let spec = LearnerSpec::new(Color::Green, ReceptiveField::V3);
        let mut b = EnvBelief::uniform_for(&w);
        b.update(&observe(&w, spec.rf)).unwrap();
        let s = LearnerState::new(spec, b, w.agent);
        assert_eq!(act(&s), Action::Pickup);
    }

    #[test]
    fn heads_for_door_once_key_is_carried() {
        let mut w = room();
        w.set(Coord::new(1, 8), CellContent::Door { color: Color::Blue, open: false });
        w.agent.carrying = Some(Color::Blue);
        let spec = LearnerSpec::new(Color::Blue, ReceptiveField::Full);
        let mut b = EnvBelief::uniform_for(&w);
        b.update(&observe(&w, spec.rf)).unwrap();
        let s = LearnerState::new(spec, b.clone(), w.agent);
        assert_eq!(s.phase, Phase::SeekDoor);
        let path = astar_path_facing(&b.known_grid(), w.agent, Coord::new(1, 8)).unwrap();
        assert_eq!(act(&s), path[0]);
    }

    #[test]
    fn nothing_known_means_exploring() {
        let w = room();
        let spec = LearnerSpec::new(Color::Yellow, ReceptiveField::V3);
        let mut b = EnvBelief::uniform_for(&w);
        b.update(&observe(&w, spec.rf)).unwrap();
        let s = LearnerState::new(spec, b, w.agent);
        assert_eq!(act(&s), explore_action(&s));
    }

    #[test]
    fn exploration_prefers_unknown_side() {
        // everything known except the column to the agent's right
        let w = room();
        let spec = LearnerSpec::new(Color::Green, ReceptiveField::V3);
        let mut b = EnvBelief::uniform_for(&w);
        let full = observe(&w, ReceptiveField::Full);
        let partial = crate::gridworld::Observation {
            visible_cells: full.visible_cells.into_iter().filter(|(c, _)| c.col <= 6).collect(),
        };
        b.update(&partial).unwrap();
        let mut pose = w.agent;
        pose.pos = Coord::new(5, 6);
        pose.dir = Direction::North;
        let s = LearnerState::new(spec, b, pose);
        assert_eq!(explore_action(&s), Action::TurnRight);
    }

    #[test]
    fn zero_gain_walks_forward() {
        let w = room();
        let spec = LearnerSpec::new(Color::Green, ReceptiveField::V3);
        let mut b = EnvBelief::uniform_for(&w);
        b.update(&observe(&w, ReceptiveField::Full)).unwrap();
        let s = LearnerState::new(spec, b.clone(), w.agent);
        assert_eq!(explore_action(&s), Action::Forward);
        let mut pose = w.agent;
        pose.pos = Coord::new(1, 5);
        let s = LearnerState::new(spec, b, pose);
        assert_eq!(explore_action(&s), Action::TurnLeft);
    }

    #[test]
    fn adjacent_key_and_door_give_high_reward() {
        // key two cells ahead, goal door straight above in the top interior row
        let mut w = room();
        w.set(Coord::new(7, 5), CellContent::Key(Color::Purple));
        w.set(Coord::new(1, 5), CellContent::Door { color: Color::Purple, open: false });
        let spec = LearnerSpec::new(Color::Purple, ReceptiveField::Full);
        let (traj, r) = run_episode(&w, spec, EnvBelief::uniform_for(&w)).unwrap();
        // forward, pickup, 6 forwards to row 2, toggle
        assert_eq!(traj.len(), 9);
        assert!((r - (1.0 - 0.9 * 9.0 / 121.0)).abs() < 1e-12);
        assert!(r > 0.9);
        assert_eq!(traj.terminal_reason, TerminalReason::GoalDoorOpened);
    }

    #[test]
    fn unreachable_goal_yields_zero() {
        // green door present, green key absent
        let mut w = room();
        w.set(Coord::new(1, 5), CellContent::Door { color: Color::Green, open: false });
        let spec = LearnerSpec::new(Color::Green, ReceptiveField::Full);
        let (traj, r) = run_episode(&w, spec, EnvBelief::uniform_for(&w)).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(traj.len(), 121);
        assert_eq!(traj.terminal_reason, TerminalReason::MaxStepsElapsed);
    }
}
