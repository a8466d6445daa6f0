//! Door/key gridworlds: cell contents, agent pose, procedural generation,
//! deterministic transitions, receptive-field observations and trajectory reward.
//!
//! Coordinates are `(row, col)` with row 0 at the top. The agent starts at the
//! bottom-centre interior cell facing north.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Side length of the observation environment.
pub const OBS_SIZE: usize = 11;
/// Side length of the demonstration environment.
pub const DEMO_SIZE: usize = 33;
/// Step budget of the observation environment (11²).
pub const OBS_MAX_STEPS: usize = 121;
/// Step budget of the demonstration environment (33²/2, truncated).
pub const DEMO_MAX_STEPS: usize = 544;

const MAX_GENERATION_ATTEMPTS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("no valid layout after {attempts} attempts (seed {seed})")]
    GenerationFailed { seed: u64, attempts: usize },
    #[error("invalid cell string `{0}`")]
    BadCell(String),
    #[error("malformed grid document: {0}")]
    BadDocument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Green,
    Blue,
    Purple,
    Yellow,
}

impl Color {
    pub const ALL: [Color; 4] = [Color::Green, Color::Blue, Color::Purple, Color::Yellow];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Purple => "purple",
            Color::Yellow => "yellow",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Color {
    type Err = GridError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Color::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| GridError::BadCell(s.to_string()))
    }
}

/// Content of a single grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellContent {
    Empty,
    Wall,
    Key(Color),
    Door { color: Color, open: bool },
}

impl CellContent {
    /// Whether the agent can stand on this cell.
    pub fn is_passable(self) -> bool {
        matches!(self, CellContent::Empty | CellContent::Door { open: true, .. })
    }

    /// Walls and closed doors block sight.
    pub fn is_see_through(self) -> bool {
        !matches!(self, CellContent::Wall | CellContent::Door { open: false, .. })
    }

    pub fn object(self) -> Option<ObjectKind> {
        match self {
            CellContent::Key(c) => Some(ObjectKind::Key(c)),
            CellContent::Door { color, .. } => Some(ObjectKind::Door(color)),
            _ => None,
        }
    }
}

impl fmt::Display for CellContent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellContent::Empty => f.write_str("empty"),
            CellContent::Wall => f.write_str("wall"),
            CellContent::Key(c) => write!(f, "key:{c}"),
            CellContent::Door { color, open: true } => write!(f, "door:{color}:open"),
            CellContent::Door { color, open: false } => write!(f, "door:{color}:closed"),
        }
    }
}

impl FromStr for CellContent {
    type Err = GridError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GridError::BadCell(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["empty"] => Ok(CellContent::Empty),
            ["wall"] => Ok(CellContent::Wall),
            ["key", c] => Ok(CellContent::Key(c.parse().map_err(|_| bad())?)),
            ["door", c, state] => {
                let color = c.parse().map_err(|_| bad())?;
                let open = match *state {
                    "open" => true,
                    "closed" => false,
                    _ => return Err(bad()),
                };
                Ok(CellContent::Door { color, open })
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for CellContent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CellContent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The eight objects of an environment, identified independently of door state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Key(Color),
    Door(Color),
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 8] = [
        ObjectKind::Key(Color::Green),
        ObjectKind::Key(Color::Blue),
        ObjectKind::Key(Color::Purple),
        ObjectKind::Key(Color::Yellow),
        ObjectKind::Door(Color::Green),
        ObjectKind::Door(Color::Blue),
        ObjectKind::Door(Color::Purple),
        ObjectKind::Door(Color::Yellow),
    ];

    pub fn index(self) -> usize {
        match self {
            ObjectKind::Key(c) => c.index(),
            ObjectKind::Door(c) => 4 + c.index(),
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectKind::Key(c) => write!(f, "key:{c}"),
            ObjectKind::Door(c) => write!(f, "door:{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub const fn new(row: usize, col: usize) -> Self {
        Coord { row, col }
    }

    pub fn manhattan(self, other: Coord) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    /// Signed offset; `None` when the result leaves the non-negative quadrant.
    pub fn offset(self, drow: isize, dcol: isize) -> Option<Coord> {
        let row = self.row.checked_add_signed(drow)?;
        let col = self.col.checked_add_signed(dcol)?;
        Some(Coord { row, col })
    }

    pub fn step(self, dir: Direction) -> Option<Coord> {
        let (dr, dc) = dir.delta();
        self.offset(dr, dc)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Direction {
        Direction::ALL[i % 4]
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::North => (-1, 0),
            Direction::East => (0, 1),
            Direction::South => (1, 0),
            Direction::West => (0, -1),
        }
    }

    pub fn left(self) -> Direction {
        Direction::from_index(self.index() + 3)
    }

    pub fn right(self) -> Direction {
        Direction::from_index(self.index() + 1)
    }

    pub fn reverse(self) -> Direction {
        Direction::from_index(self.index() + 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentPose {
    pub pos: Coord,
    pub dir: Direction,
    pub carrying: Option<Color>,
}

impl AgentPose {
    pub fn new(pos: Coord, dir: Direction) -> Self {
        AgentPose { pos, dir, carrying: None }
    }

    /// The cell directly ahead, if it has non-negative coordinates.
    pub fn front(&self) -> Option<Coord> {
        self.pos.step(self.dir)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    TurnLeft,
    TurnRight,
    Forward,
    Pickup,
    Toggle,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::Forward,
        Action::Pickup,
        Action::Toggle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Receptive field of a learner: a `v × v` window in front of it, or the whole grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReceptiveField {
    Partial(usize),
    Full,
}

impl ReceptiveField {
    pub const V3: ReceptiveField = ReceptiveField::Partial(3);
    pub const V5: ReceptiveField = ReceptiveField::Partial(5);
    /// The receptive fields used throughout the experiments, smallest first.
    pub const ALL: [ReceptiveField; 3] = [ReceptiveField::V3, ReceptiveField::V5, ReceptiveField::Full];

    pub fn label(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ReceptiveField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReceptiveField::Partial(v) => write!(f, "{v}"),
            ReceptiveField::Full => f.write_str("full_obs"),
        }
    }
}

impl FromStr for ReceptiveField {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" | "full_obs" => Ok(ReceptiveField::Full),
            _ => {
                let v: usize = s.parse().map_err(|_| format!("bad receptive field `{s}`"))?;
                if v == 0 || v.is_multiple_of(2) {
                    return Err(format!("receptive field must be odd and positive, got {v}"));
                }
                Ok(ReceptiveField::Partial(v))
            }
        }
    }
}

impl Serialize for ReceptiveField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ReceptiveField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Observation,
    Demonstration,
}

/// Full environment state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GridDoc", into = "GridDoc")]
pub struct GridWorld {
    width: usize,
    height: usize,
    cells: Vec<CellContent>,
    pub agent: AgentPose,
    pub max_steps: usize,
    pub kind: EnvKind,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct GridDoc {
    kind: EnvKind,
    seed: u64,
    width: usize,
    height: usize,
    max_steps: usize,
    agent: AgentPose,
    cells: Vec<Vec<CellContent>>,
}

impl From<GridWorld> for GridDoc {
    fn from(w: GridWorld) -> Self {
        let cells = w.cells.chunks(w.width).map(|r| r.to_vec()).collect();
        GridDoc {
            kind: w.kind,
            seed: w.seed,
            width: w.width,
            height: w.height,
            max_steps: w.max_steps,
            agent: w.agent,
            cells,
        }
    }
}

impl TryFrom<GridDoc> for GridWorld {
    type Error = GridError;
    fn try_from(doc: GridDoc) -> Result<Self, Self::Error> {
        if doc.cells.len() != doc.height || doc.cells.iter().any(|r| r.len() != doc.width) {
            return Err(GridError::BadDocument("cell array does not match width/height".into()));
        }
        let world = GridWorld {
            width: doc.width,
            height: doc.height,
            cells: doc.cells.into_iter().flatten().collect(),
            agent: doc.agent,
            max_steps: doc.max_steps,
            kind: doc.kind,
            seed: doc.seed,
        };
        if !world.in_bounds(world.agent.pos) {
            return Err(GridError::BadDocument("agent outside grid".into()));
        }
        Ok(world)
    }
}

impl GridWorld {
    /// An empty room of the given size with a walled border and the agent at the
    /// bottom-centre facing north.
    pub fn walled(width: usize, height: usize, max_steps: usize, kind: EnvKind) -> GridWorld {
        assert!(width >= 3 && height >= 3, "grid must have an interior");
        let mut cells = vec![CellContent::Empty; width * height];
        for r in 0..height {
            for c in 0..width {
                if r == 0 || c == 0 || r == height - 1 || c == width - 1 {
                    cells[r * width + c] = CellContent::Wall;
                }
            }
        }
        GridWorld {
            width,
            height,
            cells,
            agent: AgentPose::new(start_position(width, height), Direction::North),
            max_steps,
            kind,
            seed: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, c: Coord) -> bool {
        c.row < self.height && c.col < self.width
    }

    pub fn idx(&self, c: Coord) -> usize {
        c.row * self.width + c.col
    }

    pub fn get(&self, c: Coord) -> CellContent {
        self.cells[self.idx(c)]
    }

    /// Out-of-bounds reads behave as walls.
    pub fn get_or_wall(&self, c: Coord) -> CellContent {
        if self.in_bounds(c) {
            self.get(c)
        } else {
            CellContent::Wall
        }
    }

    pub fn set(&mut self, c: Coord, content: CellContent) {
        let i = self.idx(c);
        self.cells[i] = content;
    }

    pub fn cells(&self) -> &[CellContent] {
        &self.cells
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.height).flat_map(move |r| (0..self.width).map(move |c| Coord::new(r, c)))
    }

    pub fn is_border(&self, c: Coord) -> bool {
        c.row == 0 || c.col == 0 || c.row == self.height - 1 || c.col == self.width - 1
    }

    /// Current location of an object, if still on the grid.
    pub fn find(&self, obj: ObjectKind) -> Option<Coord> {
        self.coords().find(|&c| self.get(c).object() == Some(obj))
    }

    pub fn objects(&self) -> Vec<(ObjectKind, Coord)> {
        self.coords().filter_map(|c| self.get(c).object().map(|o| (o, c))).collect()
    }

    pub fn door_open(&self, color: Color) -> bool {
        self.cells.contains(&CellContent::Door { color, open: true })
    }

    pub fn neighbours(&self, c: Coord) -> impl Iterator<Item = Coord> + '_ {
        Direction::ALL
            .into_iter()
            .filter_map(move |d| c.step(d))
            .filter(move |&n| self.in_bounds(n))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<GridWorld, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Bottom-centre interior cell: `(height - 2, width / 2)`.
pub fn start_position(width: usize, height: usize) -> Coord {
    Coord::new(height - 2, width / 2)
}

/// Applies one action. Invalid actions are no-ops but still consume a step.
pub fn step(world: &GridWorld, action: Action) -> GridWorld {
    let mut next = world.clone();
    step_in_place(&mut next, action);
    next
}

/// In-place variant of [`step`]. Returns whether the grid cells changed.
pub fn step_in_place(world: &mut GridWorld, action: Action) -> bool {
    let pose = world.agent;
    let front = pose.front().filter(|&c| world.in_bounds(c));
    match action {
        Action::TurnLeft => world.agent.dir = pose.dir.left(),
        Action::TurnRight => world.agent.dir = pose.dir.right(),
        Action::Forward => {
            if let Some(f) = front {
                if world.get(f).is_passable() {
                    world.agent.pos = f;
                }
            }
        }
        Action::Pickup => {
            if let (Some(f), None) = (front, pose.carrying) {
                if let CellContent::Key(color) = world.get(f) {
                    world.agent.carrying = Some(color);
                    world.set(f, CellContent::Empty);
                    return true;
                }
            }
        }
        Action::Toggle => {
            if let Some(f) = front {
                if let CellContent::Door { color, open: false } = world.get(f) {
                    if pose.carrying == Some(color) {
                        world.set(f, CellContent::Door { color, open: true });
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Set of cells visible to an agent, with their contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub visible_cells: Vec<(Coord, CellContent)>,
}

/// Maps a view-frame cell (`vrow` 0 = farthest row, agent at `(v-1, v/2)`) to grid
/// coordinates.
fn view_to_world(pose: &AgentPose, v: usize, vrow: usize, vcol: usize) -> Option<Coord> {
    let forward = (v - 1 - vrow) as isize;
    let lateral = vcol as isize - (v / 2) as isize;
    let (fr, fc) = pose.dir.delta();
    let (rr, rc) = pose.dir.right().delta();
    pose.pos.offset(fr * forward + rr * lateral, fc * forward + rc * lateral)
}

/// Visible in-bounds coordinates for a `v × v` field in front of `pose`.
///
/// Light spreads row by row away from the agent; it passes through a cell only if
/// `see_through` holds for it. Out-of-bounds cells are opaque and never reported.
pub fn visible_coords(
    pose: &AgentPose,
    v: usize,
    width: usize,
    height: usize,
    see_through: impl Fn(Coord) -> bool,
) -> Vec<Coord> {
    let world_of = |vr: usize, vc: usize| {
        view_to_world(pose, v, vr, vc).filter(|c| c.row < height && c.col < width)
    };
    let clear = |vr: usize, vc: usize| world_of(vr, vc).is_some_and(&see_through);

    let mut mask = vec![false; v * v];
    mask[(v - 1) * v + v / 2] = true;
    for j in (0..v).rev() {
        for i in 0..v.saturating_sub(1) {
            if !mask[j * v + i] || !clear(j, i) {
                continue;
            }
            mask[j * v + i + 1] = true;
            if j > 0 {
                mask[(j - 1) * v + i + 1] = true;
                mask[(j - 1) * v + i] = true;
            }
        }
        for i in (1..v).rev() {
            if !mask[j * v + i] || !clear(j, i) {
                continue;
            }
            mask[j * v + i - 1] = true;
            if j > 0 {
                mask[(j - 1) * v + i - 1] = true;
                mask[(j - 1) * v + i] = true;
            }
        }
    }

    let mut out = Vec::with_capacity(v * v);
    for j in 0..v {
        for i in 0..v {
            if mask[j * v + i] {
                if let Some(c) = world_of(j, i) {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Observation of the agent in `world` through receptive field `rf`.
pub fn observe(world: &GridWorld, rf: ReceptiveField) -> Observation {
    let visible_cells = match rf {
        ReceptiveField::Full => world.coords().map(|c| (c, world.get(c))).collect(),
        ReceptiveField::Partial(v) => visible_coords(&world.agent, v, world.width, world.height, |c| {
            world.get(c).is_see_through()
        })
        .into_iter()
        .map(|c| (c, world.get(c)))
        .collect(),
    };
    Observation { visible_cells }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    GoalDoorOpened,
    MaxStepsElapsed,
}

/// States visited and actions taken; `states.len() == actions.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<GridWorld>,
    pub actions: Vec<Action>,
    pub terminal_reason: TerminalReason,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn final_state(&self) -> &GridWorld {
        self.states.last().expect("trajectory has an initial state")
    }

    /// The first `k` actions with their states (plus the state reached after them).
    pub fn truncated(&self, k: usize) -> Trajectory {
        let k = k.min(self.actions.len());
        Trajectory {
            states: self.states[..=k].to_vec(),
            actions: self.actions[..k].to_vec(),
            terminal_reason: if k == self.actions.len() {
                self.terminal_reason
            } else {
                TerminalReason::MaxStepsElapsed
            },
        }
    }

    /// One JSON object per step: `{"step", "pose", "action"}`.
    pub fn to_json_lines(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            step: usize,
            pose: &'a AgentPose,
            action: Action,
        }
        let mut out = String::new();
        for (i, a) in self.actions.iter().enumerate() {
            let line = Line { step: i, pose: &self.states[i].agent, action: *a };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }
}

/// `1 - 0.9 * length / max_steps` when the goal door ends open, otherwise 0.
pub fn reward(length: usize, goal_door_open: bool, max_steps: usize) -> f64 {
    if goal_door_open {
        1.0 - 0.9 * length as f64 / max_steps as f64
    } else {
        0.0
    }
}

pub fn trajectory_reward(traj: &Trajectory, goal: Color, max_steps: usize) -> f64 {
    reward(traj.len(), traj.final_state().door_open(goal), max_steps)
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// 11×11 room with four keys on the floor and four doors set into the border wall.
pub fn generate_observation_env(seed: u64) -> Result<GridWorld, GridError> {
    generate(seed, EnvKind::Observation, |_| {
        GridWorld::walled(OBS_SIZE, OBS_SIZE, OBS_MAX_STEPS, EnvKind::Observation)
    })
}

/// 33×33 grid split into a 3×3 lattice of rooms by wall lines at rows/cols 11 and
/// 22, with one random gap per shared wall segment.
pub fn generate_demonstration_env(seed: u64) -> Result<GridWorld, GridError> {
    generate(seed, EnvKind::Demonstration, |rng| {
        let mut w = GridWorld::walled(DEMO_SIZE, DEMO_SIZE, DEMO_MAX_STEPS, EnvKind::Demonstration);
        let lines = [11usize, 22];
        let segments = [(1usize, 10usize), (12, 21), (23, 31)];
        for &line in &lines {
            for i in 1..DEMO_SIZE - 1 {
                w.set(Coord::new(line, i), CellContent::Wall);
                w.set(Coord::new(i, line), CellContent::Wall);
            }
        }
        for &line in &lines {
            for &(lo, hi) in &segments {
                let gap = rng.gen_range(lo..=hi);
                w.set(Coord::new(line, gap), CellContent::Empty);
                let gap = rng.gen_range(lo..=hi);
                w.set(Coord::new(gap, line), CellContent::Empty);
            }
        }
        w
    })
}

fn generate(
    seed: u64,
    kind: EnvKind,
    layout: impl Fn(&mut ChaCha8Rng) -> GridWorld,
) -> Result<GridWorld, GridError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let mut world = layout(&mut rng);
        world.seed = seed;
        world.kind = kind;
        if place_objects(&mut world, &mut rng) && layout_is_valid(&world) {
            return Ok(world);
        }
    }
    Err(GridError::GenerationFailed { seed, attempts: MAX_GENERATION_ATTEMPTS })
}

fn place_objects(world: &mut GridWorld, rng: &mut ChaCha8Rng) -> bool {
    let start = world.agent.pos;
    let mut floor: Vec<Coord> = world
        .coords()
        .filter(|&c| world.get(c) == CellContent::Empty && c != start)
        .collect();
    floor.shuffle(rng);
    if floor.len() < 4 {
        return false;
    }
    for (color, &cell) in Color::ALL.iter().zip(&floor) {
        world.set(cell, CellContent::Key(*color));
    }

    // A door goes into an interior wall cell that is not a junction and has floor
    // on both sides across the wall. Border cells stay walls so that learners can
    // treat them as known. Layouts without interior walls get free-standing doors
    // on floor cells instead.
    let mut slots: Vec<Coord> = world
        .coords()
        .filter(|&c| !world.is_border(c) && world.get(c) == CellContent::Wall && door_slot(world, c))
        .collect();
    if slots.len() < 4 {
        slots = floor[4..].iter().copied().filter(|c| c.manhattan(start) > 1).collect();
    }
    slots.shuffle(rng);
    let mut placed = 0;
    for cell in slots {
        if placed == 4 {
            break;
        }
        // keep doors apart so no wall segment is fully replaced by doors
        if world.neighbours(cell).any(|n| matches!(world.get(n), CellContent::Door { .. })) {
            continue;
        }
        world.set(cell, CellContent::Door { color: Color::ALL[placed], open: false });
        placed += 1;
    }
    placed == 4
}

/// A wall cell whose wall runs in one axis, with open floor on the cross axis.
fn door_slot(world: &GridWorld, c: Coord) -> bool {
    let is_wall = |r: isize, k: isize| {
        c.offset(r, k)
            .filter(|&n| world.in_bounds(n))
            .map(|n| world.get(n) == CellContent::Wall)
    };
    let floor = |r: isize, k: isize| {
        c.offset(r, k)
            .filter(|&n| world.in_bounds(n))
            .map(|n| world.get(n) == CellContent::Empty)
    };
    let horizontal = is_wall(0, -1) == Some(true) && is_wall(0, 1) == Some(true);
    let vertical = is_wall(-1, 0) == Some(true) && is_wall(1, 0) == Some(true);
    if horizontal == vertical {
        return false;
    }
    let (a, b) = if horizontal {
        (floor(-1, 0), floor(1, 0))
    } else {
        (floor(0, -1), floor(0, 1))
    };
    // every in-bounds side must be floor, and at least one side must exist
    matches!((a, b), (Some(true), Some(true)) | (Some(true), None) | (None, Some(true)))
}

/// Cells reachable from the agent by walking over passable cells.
pub fn reachable_mask(world: &GridWorld) -> Vec<bool> {
    let mut seen = vec![false; world.cells.len()];
    let mut stack = vec![world.agent.pos];
    seen[world.idx(world.agent.pos)] = true;
    while let Some(c) = stack.pop() {
        for n in world.neighbours(c) {
            let i = world.idx(n);
            if !seen[i] && world.get(n).is_passable() {
                seen[i] = true;
                stack.push(n);
            }
        }
    }
    seen
}

/// All floor reachable from the start, and every object touches reachable floor.
pub fn layout_is_valid(world: &GridWorld) -> bool {
    let reach = reachable_mask(world);
    world.coords().all(|c| match world.get(c) {
        CellContent::Empty => reach[world.idx(c)],
        CellContent::Key(_) | CellContent::Door { .. } => {
            world.neighbours(c).any(|n| reach[world.idx(n)])
        }
        CellContent::Wall => true,
    })
}
