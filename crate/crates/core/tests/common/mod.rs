//! Brute-force reference implementations shared by the property suites and the
//! acceptance run. Each `check_*` draws one random case from `seed` and compares
//! the library against an independent computation.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tom_teach::belief::{ContentClass, EnvBelief, SUPPORT};
use tom_teach::gridworld::{
    generate_observation_env, observe, Action, AgentPose, CellContent, Color, Coord, Direction, GridWorld,
    Observation, ReceptiveField,
};
use tom_teach::learner::LearnerSpec;
use tom_teach::pathing::{astar_path, astar_path_facing, KnownGrid, Passability};
use tom_teach::teachers::{rational_distribution, ObjectDistances, TeacherBelief};

pub const LAMBDAS: [f64; 5] = [0.01, 0.5, 1.0, 3.0, 10.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Factored belief vs joint Bayes
// ---------------------------------------------------------------------------

/// Posterior marginals by enumerating every joint grid state with prior mass;
/// `None` when no joint state is consistent with the observations.
pub fn joint_marginals(priors: &[[f64; SUPPORT]], obs: &[(usize, usize)]) -> Option<Vec<[f64; SUPPORT]>> {
    let supports: Vec<Vec<usize>> =
        priors.iter().map(|p| (0..SUPPORT).filter(|&k| p[k] > 0.0).collect()).collect();
    let mut marg = vec![[0.0; SUPPORT]; priors.len()];
    let mut total = 0.0;
    let mut idx = vec![0usize; priors.len()];
    loop {
        let state: Vec<usize> = idx.iter().zip(&supports).map(|(&i, s)| s[i]).collect();
        if obs.iter().all(|&(cell, class)| state[cell] == class) {
            let mass: f64 = state.iter().enumerate().map(|(c, &k)| priors[c][k]).product();
            total += mass;
            for (c, &k) in state.iter().enumerate() {
                marg[c][k] += mass;
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return (total > 0.0).then(|| {
                    marg.iter().map(|m| std::array::from_fn(|k| m[k] / total)).collect()
                });
            }
            idx[pos] += 1;
            if idx[pos] < supports[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

pub fn check_belief_vs_joint(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let (w, h) = (r.gen_range(1..=3), r.gen_range(1..=3));
    let n = w * h;
    let priors: Vec<[f64; SUPPORT]> = (0..n)
        .map(|_| {
            let mut classes: Vec<usize> = (0..SUPPORT).collect();
            classes.shuffle(&mut r);
            let mut d = [0.0; SUPPORT];
            for &k in &classes[..r.gen_range(1..=3)] {
                d[k] = r.gen_range(0.05..1.0);
            }
            let z: f64 = d.iter().sum();
            d.map(|p| p / z)
        })
        .collect();
    let obs: Vec<(usize, usize)> = (0..r.gen_range(0..=n + 1))
        .map(|_| {
            let cell = r.gen_range(0..n);
            let inside: Vec<usize> = (0..SUPPORT).filter(|&k| priors[cell][k] > 0.0).collect();
            let class = if r.gen_bool(0.1) { r.gen_range(0..SUPPORT) } else { *inside.choose(&mut r).unwrap() };
            (cell, class)
        })
        .collect();

    let mut belief = EnvBelief::from_priors(w, h, priors.clone());
    let observation = Observation {
        visible_cells: obs
            .iter()
            .map(|&(cell, class)| (Coord::new(cell / w, cell % w), ContentClass::ALL[class].content()))
            .collect(),
    };
    let updated = belief.update(&observation);
    match (joint_marginals(&priors, &obs), updated) {
        (None, Err(_)) => Ok(()),
        (None, Ok(())) => Err("factored update accepted an impossible observation".into()),
        (Some(_), Err(e)) => Err(format!("factored update rejected a consistent observation: {e}")),
        (Some(marg), Ok(())) => {
            if belief.normalization_error() > 1e-9 {
                return Err("belief not normalized".into());
            }
            for (cell, m) in marg.iter().enumerate() {
                let d = belief.dist(Coord::new(cell / w, cell % w));
                for k in 0..SUPPORT {
                    if (d[k] - m[k]).abs() > 1e-9 {
                        return Err(format!("cell {cell} class {k}: factored {} vs joint {}", d[k], m[k]));
                    }
                }
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// A* vs breadth-first search over poses
// ---------------------------------------------------------------------------

/// Shortest number of turn/forward actions until `done(pose)` holds.
pub fn pose_bfs(grid: &KnownGrid, from: AgentPose, done: impl Fn(Coord, Direction) -> bool) -> Option<usize> {
    let mut seen: HashMap<(Coord, Direction), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert((from.pos, from.dir), 0);
    queue.push_back((from.pos, from.dir));
    while let Some((pos, dir)) = queue.pop_front() {
        let d = seen[&(pos, dir)];
        if done(pos, dir) {
            return Some(d);
        }
        let mut next = vec![(pos, dir.left()), (pos, dir.right())];
        if let Some(f) = pos.step(dir).filter(|&f| grid.in_bounds(f) && grid.is_passable(f)) {
            next.push((f, dir));
        }
        for s in next {
            seen.entry(s).or_insert_with(|| {
                queue.push_back(s);
                d + 1
            });
        }
    }
    None
}

/// Pose reached by executing `path` on `grid`; forward into an obstacle fails.
fn execute(grid: &KnownGrid, from: AgentPose, path: &[Action]) -> Option<AgentPose> {
    let mut p = from;
    for a in path {
        match a {
            Action::TurnLeft => p.dir = p.dir.left(),
            Action::TurnRight => p.dir = p.dir.right(),
            Action::Forward => {
                let f = p.pos.step(p.dir).filter(|&f| grid.in_bounds(f) && grid.is_passable(f))?;
                p.pos = f;
            }
            _ => return None,
        }
    }
    Some(p)
}

pub fn check_astar_vs_bfs(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let (w, h) = (r.gen_range(2..=7), r.gen_range(2..=7));
    let cells: Vec<Passability> = (0..w * h)
        .map(|_| match r.gen_range(0..10) {
            0..=5 => Passability::Passable,
            6..=8 => Passability::Blocked,
            _ => Passability::Unknown,
        })
        .collect();
    let grid = KnownGrid::from_cells(w, h, cells);
    let rand_coord = |r: &mut ChaCha8Rng| Coord::new(r.gen_range(0..h), r.gen_range(0..w));
    let from = AgentPose::new(rand_coord(&mut r), Direction::from_index(r.gen_range(0..4)));
    let to = rand_coord(&mut r);

    let onto = pose_bfs(&grid, from, |p, _| p == to);
    match (astar_path(&grid, from, to), onto) {
        (Ok(path), Some(d)) => {
            if path.len() != d {
                return Err(format!("onto {to}: A* {} vs BFS {d}", path.len()));
            }
            if execute(&grid, from, &path).map(|p| p.pos) != Some(to) {
                return Err("A* path does not reach the target".into());
            }
        }
        (Err(_), None) => {}
        (a, b) => return Err(format!("onto {to}: A* {a:?} vs BFS {b:?}")),
    }

    let facing = pose_bfs(&grid, from, |p, d| p.step(d) == Some(to));
    match (astar_path_facing(&grid, from, to), facing) {
        (Ok(path), Some(d)) => {
            if path.len() != d {
                return Err(format!("facing {to}: A* {} vs BFS {d}", path.len()));
            }
            let end = execute(&grid, from, &path).ok_or("A* path blocked")?;
            if end.pos.step(end.dir) != Some(to) {
                return Err("A* path does not face the target".into());
            }
        }
        (Err(_), None) => {}
        (a, b) => return Err(format!("facing {to}: A* {a:?} vs BFS {b:?}")),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sequential Bayes over two hypotheses
// ---------------------------------------------------------------------------

/// Product of prior and likelihoods, normalized, in linear space.
pub fn sequential_bayes(prior: &[f64], likelihoods: &[Vec<f64>]) -> Vec<f64> {
    let mut w = prior.to_vec();
    for l in likelihoods {
        for (wi, li) in w.iter_mut().zip(l) {
            *wi *= li;
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= z);
    }
    w
}

pub fn check_two_hypothesis_trace(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let mut all = LearnerSpec::all();
    all.shuffle(&mut r);
    let hyps = vec![all[0], all[1]];
    let prior = [r.gen_range(0.05..1.0), r.gen_range(0.05..1.0)];
    let z: f64 = prior.iter().sum();
    let prior: Vec<f64> = prior.iter().map(|p| p / z).collect();
    let steps: Vec<Vec<f64>> = (0..r.gen_range(0..40))
        .map(|_| {
            // a zero likelihood for at most one hypothesis keeps the product positive
            let mut l = vec![r.gen_range(1e-3..1.0), r.gen_range(1e-3..1.0)];
            if r.gen_bool(0.05) {
                l[r.gen_range(0..2)] = 0.0;
            }
            if l[0] == 0.0 && l[1] == 0.0 {
                l[1] = 0.5;
            }
            l
        })
        .collect();
    // a hypothesis zeroed once stays zero, so skip traces where both die
    let alive = |i: usize| steps.iter().all(|l| l[i] > 0.0);
    if !alive(0) && !alive(1) {
        return Ok(());
    }
    let mut tb = TeacherBelief::from_weights(hyps, &prior).map_err(|e| e.to_string())?;
    for l in &steps {
        tb.observe(|i, _| l[i]);
        let sum: f64 = tb.weights().iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("teacher belief sums to {sum}"));
        }
    }
    let expected = sequential_bayes(&prior, &steps);
    let got = tb.weights();
    for i in 0..2 {
        if (got[i] - expected[i]).abs() > 1e-9 {
            return Err(format!("hypothesis {i}: {} vs {}", got[i], expected[i]));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Boltzmann normalization
// ---------------------------------------------------------------------------

/// A random pose on a passable cell of `world`, possibly carrying a key.
pub fn random_pose(world: &GridWorld, r: &mut impl Rng) -> AgentPose {
    let free: Vec<Coord> = world.coords().filter(|&c| world.get(c) == CellContent::Empty).collect();
    let mut pose = AgentPose::new(*free.choose(r).unwrap(), Direction::from_index(r.gen_range(0..4)));
    if r.gen_bool(0.3) {
        pose.carrying = Some(Color::ALL[r.gen_range(0..4)]);
    }
    pose
}

pub fn check_boltzmann_normalized(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let world = generate_observation_env(r.gen()).map_err(|e| e.to_string())?;
    let dists = ObjectDistances::new(&world);
    let mut belief = EnvBelief::uniform_for(&world);
    let mut probe = world.clone();
    for _ in 0..r.gen_range(0..6) {
        probe.agent = random_pose(&world, &mut r);
        let rf = ReceptiveField::ALL[r.gen_range(0..3)];
        belief.update(&observe(&probe, rf)).map_err(|e| e.to_string())?;
    }
    let pose = random_pose(&world, &mut r);
    for spec in LearnerSpec::all() {
        for lambda in LAMBDAS {
            let p = rational_distribution(lambda, spec, &belief, &pose, &dists);
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(format!("{spec} λ={lambda}: {p:?} sums to {sum}"));
            }
        }
    }
    Ok(())
}
