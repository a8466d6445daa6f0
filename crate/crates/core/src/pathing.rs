//! Shortest paths over partially known grids: position distance maps and A* over
//! `(position, orientation)` so that turns are paid for.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::gridworld::{Action, AgentPose, Coord, Direction, GridWorld};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Passability {
    Passable,
    Blocked,
    Unknown,
}

/// Planning view of a grid. Unknown cells are never entered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownGrid {
    width: usize,
    height: usize,
    cells: Vec<Passability>,
}

impl KnownGrid {
    pub fn new(width: usize, height: usize, fill: Passability) -> Self {
        KnownGrid { width, height, cells: vec![fill; width * height] }
    }

    /// The true grid: passable cells are floor and open doors.
    pub fn from_world(world: &GridWorld) -> Self {
        let cells = world
            .cells()
            .iter()
            .map(|c| if c.is_passable() { Passability::Passable } else { Passability::Blocked })
            .collect();
        KnownGrid { width: world.width(), height: world.height(), cells }
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<Passability>) -> Self {
        assert_eq!(cells.len(), width * height);
        KnownGrid { width, height, cells }
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

    pub fn get(&self, c: Coord) -> Passability {
        self.cells[c.row * self.width + c.col]
    }

    pub fn set(&mut self, c: Coord, p: Passability) {
        self.cells[c.row * self.width + c.col] = p;
    }

    pub fn is_passable(&self, c: Coord) -> bool {
        self.in_bounds(c) && self.get(c) == Passability::Passable
    }

    fn index(&self, c: Coord) -> usize {
        c.row * self.width + c.col
    }
}

pub const UNREACHABLE: u32 = u32::MAX;

/// Position-only shortest distances from `source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    width: usize,
    dist: Vec<u32>,
    pub source: Coord,
}

impl DistanceMap {
    pub fn get(&self, c: Coord) -> Option<u32> {
        if c.col >= self.width {
            return None;
        }
        match self.dist.get(c.row * self.width + c.col) {
            Some(&d) if d != UNREACHABLE => Some(d),
            _ => None,
        }
    }

    pub fn raw(&self) -> &[u32] {
        &self.dist
    }
}

/// Exact 4-neighbour distances from `source` through passable cells.
///
/// The source itself is always the root even when it is an obstacle, which lets
/// callers measure distances to objects that cannot be stood on. Edges have unit
/// weight, so the frontier is a FIFO queue.
pub fn dijkstra_map(grid: &KnownGrid, source: Coord) -> DistanceMap {
    let mut dist = vec![UNREACHABLE; grid.width * grid.height];
    let mut queue = VecDeque::new();
    dist[grid.index(source)] = 0;
    queue.push_back(source);
    while let Some(c) = queue.pop_front() {
        let d = dist[grid.index(c)];
        for dir in Direction::ALL {
            let Some(n) = c.step(dir) else { continue };
            if !grid.is_passable(n) {
                continue;
            }
            let i = grid.index(n);
            if dist[i] == UNREACHABLE {
                dist[i] = d + 1;
                queue.push_back(n);
            }
        }
    }
    DistanceMap { width: grid.width, dist, source }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PathError {
    #[error("target {0} is unreachable through known passable cells")]
    Unreachable(Coord),
}

/// Shortest action sequence moving the agent onto `to`.
pub fn astar_path(grid: &KnownGrid, from: AgentPose, to: Coord) -> Result<Vec<Action>, PathError> {
    astar(grid, from, |c| c.manhattan(to), |pos, _| pos == to).ok_or(PathError::Unreachable(to))
}

/// Shortest action sequence leaving the agent on a neighbour of `target`, facing it.
pub fn astar_path_facing(
    grid: &KnownGrid,
    from: AgentPose,
    target: Coord,
) -> Result<Vec<Action>, PathError> {
    astar(
        grid,
        from,
        |c| c.manhattan(target).saturating_sub(1),
        |pos, dir| pos.step(dir) == Some(target),
    )
    .ok_or(PathError::Unreachable(target))
}

/// Per-thread search buffers, reset lazily through a generation stamp.
#[derive(Default)]
struct Scratch {
    stamp: u32,
    touched: Vec<u32>,
    closed: Vec<u32>,
    g: Vec<u32>,
    parent: Vec<(u32, Action)>,
}

impl Scratch {
    fn begin(&mut self, n: usize) {
        if self.touched.len() < n {
            self.touched.resize(n, 0);
            self.closed.resize(n, 0);
            self.g.resize(n, u32::MAX);
            self.parent.resize(n, (u32::MAX, Action::Forward));
        }
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.touched.iter_mut().for_each(|t| *t = 0);
            self.closed.iter_mut().for_each(|t| *t = 0);
            self.stamp = 1;
        }
    }

    fn g(&self, i: usize) -> u32 {
        if self.touched[i] == self.stamp {
            self.g[i]
        } else {
            u32::MAX
        }
    }
}

thread_local! {
    static SCRATCH: std::cell::RefCell<Scratch> = std::cell::RefCell::new(Scratch::default());
}

/// A* over pose states; every action costs one step.
///
/// Ties on f-score go to the lower heuristic, then to the earliest push.
/// Successors are pushed as Forward, TurnLeft, TurnRight.
fn astar(
    grid: &KnownGrid,
    from: AgentPose,
    heuristic: impl Fn(Coord) -> usize,
    is_goal: impl Fn(Coord, Direction) -> bool,
) -> Option<Vec<Action>> {
    SCRATCH.with(|s| astar_with(&mut s.borrow_mut(), grid, from, heuristic, is_goal))
}

fn astar_with(
    s: &mut Scratch,
    grid: &KnownGrid,
    from: AgentPose,
    heuristic: impl Fn(Coord) -> usize,
    is_goal: impl Fn(Coord, Direction) -> bool,
) -> Option<Vec<Action>> {
    let n = grid.width * grid.height * 4;
    s.begin(n);
    let stamp = s.stamp;
    let node = |c: Coord, d: Direction| grid.index(c) * 4 + d.index();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;

    let start = node(from.pos, from.dir);
    s.touched[start] = stamp;
    s.g[start] = 0;
    s.parent[start] = (u32::MAX, Action::Forward);
    let h0 = heuristic(from.pos) as u32;
    heap.push(Reverse((h0, h0, seq, start as u32)));

    while let Some(Reverse((_, _, _, id))) = heap.pop() {
        let id = id as usize;
        if s.closed[id] == stamp {
            continue;
        }
        s.closed[id] = stamp;
        let cell = id / 4;
        let pos = Coord::new(cell / grid.width, cell % grid.width);
        let dir = Direction::from_index(id % 4);
        if is_goal(pos, dir) {
            let mut actions = Vec::new();
            let mut cur = id;
            while s.parent[cur].0 != u32::MAX {
                let (prev, a) = s.parent[cur];
                actions.push(a);
                cur = prev as usize;
            }
            actions.reverse();
            return Some(actions);
        }
        let gid = s.g[id];
        let forward = pos.step(dir).filter(|&f| grid.is_passable(f));
        let succ = [
            forward.map(|f| (f, dir, Action::Forward)),
            Some((pos, dir.left(), Action::TurnLeft)),
            Some((pos, dir.right(), Action::TurnRight)),
        ];
        for (np, nd, a) in succ.into_iter().flatten() {
            let nid = node(np, nd);
            let ng = gid + 1;
            if s.closed[nid] == stamp || ng >= s.g(nid) {
                continue;
            }
            s.touched[nid] = stamp;
            s.g[nid] = ng;
            s.parent[nid] = (id as u32, a);
            seq += 1;
            let h = heuristic(np) as u32;
            heap.push(Reverse((ng + h, h, seq, nid as u32)));
        }
    }
    None
}
