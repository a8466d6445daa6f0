//! Factored per-cell belief over environment contents and its Bayesian update
//! under noiseless observations.
//!
//! Each cell holds a distribution over [`ContentClass`]. Observations are exact,
//! so the likelihood of a cell is an indicator and the posterior of an observed
//! cell is the prior restricted to the observed class, renormalized.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridworld::{CellContent, Color, Coord, GridWorld, ObjectKind, Observation};
use crate::pathing::{KnownGrid, Passability};

/// Number of content classes a cell can take.
pub const SUPPORT: usize = 10;

/// Content class of a cell, ignoring whether a door is open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContentClass {
    Empty,
    Wall,
    Key(Color),
    Door(Color),
}

impl ContentClass {
    pub const ALL: [ContentClass; SUPPORT] = [
        ContentClass::Empty,
        ContentClass::Wall,
        ContentClass::Key(Color::Green),
        ContentClass::Key(Color::Blue),
        ContentClass::Key(Color::Purple),
        ContentClass::Key(Color::Yellow),
        ContentClass::Door(Color::Green),
        ContentClass::Door(Color::Blue),
        ContentClass::Door(Color::Purple),
        ContentClass::Door(Color::Yellow),
    ];

    pub fn of(content: CellContent) -> ContentClass {
        match content {
            CellContent::Empty => ContentClass::Empty,
            CellContent::Wall => ContentClass::Wall,
            CellContent::Key(c) => ContentClass::Key(c),
            CellContent::Door { color, .. } => ContentClass::Door(color),
        }
    }

    pub fn index(self) -> usize {
        match self {
            ContentClass::Empty => 0,
            ContentClass::Wall => 1,
            ContentClass::Key(c) => 2 + c.index(),
            ContentClass::Door(c) => 6 + c.index(),
        }
    }

    /// Representative content; doors default to closed.
    pub fn content(self) -> CellContent {
        match self {
            ContentClass::Empty => CellContent::Empty,
            ContentClass::Wall => CellContent::Wall,
            ContentClass::Key(c) => CellContent::Key(c),
            ContentClass::Door(color) => CellContent::Door { color, open: false },
        }
    }
}

pub type CellDist = [f64; SUPPORT];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("observation of {content} at {coord} has zero prior probability")]
    Inconsistent { coord: Coord, content: CellContent },
    #[error("coordinate {0} is outside the belief frame")]
    OutOfFrame(Coord),
}

/// A learner's belief about every cell of one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvBelief {
    width: usize,
    height: usize,
    probs: Vec<CellDist>,
    /// Exact content of cells carrying a point mass.
    known: Vec<Option<CellContent>>,
    /// Cell currently known to hold each object, indexed by [`ObjectKind::index`].
    #[serde(skip)]
    object_at: [Option<Coord>; 8],
    /// Cached entropy of each cell.
    #[serde(skip)]
    entropies: Vec<f64>,
}

fn point_mass(class: ContentClass) -> CellDist {
    let mut d = [0.0; SUPPORT];
    d[class.index()] = 1.0;
    d
}

fn entropy(d: &CellDist) -> f64 {
    -d.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

impl EnvBelief {
    /// Uniform over all classes in the interior; border cells are known walls.
    pub fn uniform(width: usize, height: usize) -> EnvBelief {
        let uniform = [1.0 / SUPPORT as f64; SUPPORT];
        let mut probs = vec![uniform; width * height];
        let mut known = vec![None; width * height];
        for r in 0..height {
            for c in 0..width {
                if r == 0 || c == 0 || r == height - 1 || c == width - 1 {
                    probs[r * width + c] = point_mass(ContentClass::Wall);
                    known[r * width + c] = Some(CellContent::Wall);
                }
            }
        }
        let mut b = EnvBelief { width, height, probs, known, object_at: [None; 8], entropies: Vec::new() };
        b.rebuild_entropies();
        b
    }

    pub fn uniform_for(world: &GridWorld) -> EnvBelief {
        EnvBelief::uniform(world.width(), world.height())
    }

    /// Belief with an arbitrary per-cell prior. Each row is normalized.
    pub fn from_priors(width: usize, height: usize, priors: Vec<CellDist>) -> EnvBelief {
        assert_eq!(priors.len(), width * height);
        let probs: Vec<CellDist> = priors
            .into_iter()
            .map(|mut d| {
                let z: f64 = d.iter().sum();
                assert!(z > 0.0, "prior row must have positive mass");
                d.iter_mut().for_each(|p| *p /= z);
                d
            })
            .collect();
        let mut b = EnvBelief {
            width,
            height,
            known: vec![None; width * height],
            probs,
            object_at: [None; 8],
            entropies: Vec::new(),
        };
        b.rebuild_index();
        b.rebuild_entropies();
        b
    }

    fn rebuild_index(&mut self) {
        self.object_at = [None; 8];
        for i in 0..self.probs.len() {
            self.known[i] = self.probs[i]
                .iter()
                .position(|&p| p == 1.0)
                .map(|k| ContentClass::ALL[k].content());
            if let Some(obj) = self.known[i].and_then(CellContent::object) {
                self.object_at[obj.index()] = Some(self.coord(i));
            }
        }
    }

    fn rebuild_entropies(&mut self) {
        self.entropies = self
            .probs
            .iter()
            .zip(&self.known)
            .map(|(d, k)| if k.is_some() { 0.0 } else { entropy(d) })
            .collect();
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn coord(&self, i: usize) -> Coord {
        Coord::new(i / self.width, i % self.width)
    }

    fn index(&self, c: Coord) -> Result<usize, BeliefError> {
        if c.row < self.height && c.col < self.width {
            Ok(c.row * self.width + c.col)
        } else {
            Err(BeliefError::OutOfFrame(c))
        }
    }

    pub fn dist(&self, c: Coord) -> &CellDist {
        &self.probs[c.row * self.width + c.col]
    }

    /// Exact content when the cell is certain.
    pub fn known(&self, c: Coord) -> Option<CellContent> {
        self.known[c.row * self.width + c.col]
    }

    /// Bayesian update with an exact observation of the visible cells.
    pub fn update(&mut self, obs: &Observation) -> Result<(), BeliefError> {
        for &(coord, content) in &obs.visible_cells {
            self.observe_cell(coord, content)?;
        }
        Ok(())
    }

    /// Returns the updated belief, leaving `self` untouched.
    pub fn updated(&self, obs: &Observation) -> Result<EnvBelief, BeliefError> {
        let mut b = self.clone();
        b.update(obs)?;
        Ok(b)
    }

    fn observe_cell(&mut self, coord: Coord, content: CellContent) -> Result<(), BeliefError> {
        let i = self.index(coord)?;
        if self.known[i] == Some(content) {
            return Ok(());
        }
        let class = ContentClass::of(content);
        if self.probs[i][class.index()] <= 0.0 {
            return Err(BeliefError::Inconsistent { coord, content });
        }
        self.collapse(i, content);
        Ok(())
    }

    fn collapse(&mut self, i: usize, content: CellContent) {
        if let Some(old) = self.known[i].and_then(CellContent::object) {
            if self.object_at[old.index()] == Some(self.coord(i)) {
                self.object_at[old.index()] = None;
            }
        }
        self.probs[i] = point_mass(ContentClass::of(content));
        self.known[i] = Some(content);
        self.entropies[i] = 0.0;
        if let Some(obj) = content.object() {
            self.object_at[obj.index()] = Some(self.coord(i));
        }
    }

    /// Records a change the agent itself caused (picking up a key, opening a door).
    /// Unlike [`EnvBelief::update`] this overrides an existing point mass.
    pub fn set_known(&mut self, coord: Coord, content: CellContent) -> Result<(), BeliefError> {
        let i = self.index(coord)?;
        self.collapse(i, content);
        Ok(())
    }

    /// Cell holding a point mass on `obj`, if any.
    pub fn known_location(&self, obj: ObjectKind) -> Option<Coord> {
        self.object_at[obj.index()]
    }

    pub fn cell_entropy(&self, c: Coord) -> f64 {
        self.entropies[c.row * self.width + c.col]
    }

    pub fn cell_entropy_sum(&self, cells: &[Coord]) -> f64 {
        cells.iter().map(|&c| self.cell_entropy(c)).sum()
    }

    pub fn total_entropy(&self) -> f64 {
        self.entropies.iter().sum()
    }

    /// Largest deviation of any cell's mass from 1.
    pub fn normalization_error(&self) -> f64 {
        self.probs
            .iter()
            .map(|d| (d.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Walls and closed doors block sight; unknown cells are assumed clear.
    pub fn believed_see_through(&self, c: Coord) -> bool {
        self.known(c).is_none_or(CellContent::is_see_through)
    }

    /// Passable iff known floor or open door; blocked iff known otherwise.
    pub fn known_grid(&self) -> KnownGrid {
        let cells = self
            .known
            .iter()
            .map(|k| match k {
                Some(c) if c.is_passable() => Passability::Passable,
                Some(_) => Passability::Blocked,
                None => Passability::Unknown,
            })
            .collect();
        KnownGrid::from_cells(self.width, self.height, cells)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("belief serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<EnvBelief, serde_json::Error> {
        let mut b: EnvBelief = serde_json::from_str(s)?;
        for i in 0..b.known.len() {
            if let Some(obj) = b.known[i].and_then(CellContent::object) {
                b.object_at[obj.index()] = Some(b.coord(i));
            }
        }
        b.rebuild_entropies();
        Ok(b)
    }
}
