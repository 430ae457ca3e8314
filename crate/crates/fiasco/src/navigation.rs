//! Agent movement: potential-field steering with local-minima escape, and
//! A* planning on a 2-D grid.
//!
//! The field over observations at `(x_i, y_i)` with forces `f_i`, seen from
//! `(x_0, y_0)`, is the per-axis sum
//!
//! ```text
//! F_x = sum_i f_i / (x_i - x_0),   F_y = sum_i f_i / (y_i - y_0)
//! ```
//!
//! with a zero contribution on an axis whose difference is zero. Negative
//! forces attract, so the agent steps opposite the summed vector. Field
//! motion uses the 8-neighborhood; A* uses 4-connectivity with the Manhattan
//! heuristic.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn euclidean(self, other: Cell) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Walls and containers live on a bounded grid; out-of-bounds counts as
/// blocked.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: i32,
    height: i32,
    blocked: Vec<bool>,
}

impl GridMap {
    pub fn new(width: i32, height: i32) -> Result<Self> {
        if width <= 0 || height <= 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            blocked: vec![false; (width * height) as usize],
        })
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x >= 0 && cell.x < self.width && cell.y >= 0 && cell.y < self.height
    }

    fn index(&self, cell: Cell) -> usize {
        (cell.y * self.width + cell.x) as usize
    }

    pub fn set_blocked(&mut self, cell: Cell, blocked: bool) -> Result<()> {
        if !self.in_bounds(cell) {
            return Err(Error::InvalidArgument(format!(
                "cell ({}, {}) out of bounds",
                cell.x, cell.y
            )));
        }
        let idx = self.index(cell);
        self.blocked[idx] = blocked;
        Ok(())
    }

    pub fn is_blocked(&self, cell: Cell) -> bool {
        !self.in_bounds(cell) || self.blocked[self.index(cell)]
    }

    pub fn passable(&self, cell: Cell) -> bool {
        !self.is_blocked(cell)
    }

    pub fn blocked_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|c| self.blocked[self.index(*c)])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CardinalDir {
    North,
    East,
    South,
    West,
}

impl CardinalDir {
    pub fn offset(self) -> (i32, i32) {
        match self {
            CardinalDir::North => (0, 1),
            CardinalDir::East => (1, 0),
            CardinalDir::South => (0, -1),
            CardinalDir::West => (-1, 0),
        }
    }
}

/// 8-neighborhood in tie-break priority order: N, NE, E, SE, S, SW, W, NW.
const NEIGHBORS8: [(i32, i32); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

/// 4-neighborhood in expansion order N, E, S, W.
const NEIGHBORS4: [(i32, i32); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];

/// One observed object feeding the field: where it is and how strongly its
/// class attracts (negative) or repels (positive).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldObservation {
    pub cell: Cell,
    pub class_id: usize,
    pub force: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub fx: f64,
    pub fy: f64,
}

impl FieldVector {
    pub const ZERO: Self = Self { fx: 0.0, fy: 0.0 };

    pub fn is_zero(&self) -> bool {
        self.fx == 0.0 && self.fy == 0.0
    }
}

/// Sums the per-axis force terms seen from `pos`.
pub fn compute_field(observations: &[FieldObservation], pos: Cell) -> FieldVector {
    let mut fx = 0.0;
    let mut fy = 0.0;
    for obs in observations {
        let dx = (obs.cell.x - pos.x) as f64;
        let dy = (obs.cell.y - pos.y) as f64;
        if dx != 0.0 {
            fx += obs.force / dx;
        }
        if dy != 0.0 {
            fy += obs.force / dy;
        }
    }
    FieldVector { fx, fy }
}

/// The moving agent: current and home position, per-cell visit counts for
/// stuck detection, the last escape heading, and any in-flight escape motion.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub pos: Cell,
    pub start: Cell,
    visit_counts: HashMap<Cell, u32>,
    last_outbound: CardinalDir,
    escape_steps_left: u32,
    walk_path: VecDeque<Cell>,
}

impl AgentState {
    pub fn new(start: Cell) -> Self {
        Self {
            pos: start,
            start,
            visit_counts: HashMap::new(),
            last_outbound: CardinalDir::North,
            escape_steps_left: 0,
            walk_path: VecDeque::new(),
        }
    }

    pub fn last_outbound(&self) -> CardinalDir {
        self.last_outbound
    }

    pub fn set_last_outbound(&mut self, dir: CardinalDir) {
        self.last_outbound = dir;
    }

    pub fn visit_count(&self, cell: Cell) -> u32 {
        self.visit_counts.get(&cell).copied().unwrap_or(0)
    }

    pub fn reset_visits(&mut self) {
        self.visit_counts.clear();
    }

    pub fn escaping(&self) -> bool {
        self.escape_steps_left > 0 || !self.walk_path.is_empty()
    }

    /// One movement step: follow a pending walk-back path first, then any
    /// escape heading, then the potential field.
    pub fn advance(&mut self, field: &FieldVector, grid: &GridMap) -> Cell {
        if let Some(next) = self.walk_path.pop_front() {
            self.pos = next;
            return self.pos;
        }
        if self.escape_steps_left > 0 {
            self.escape_steps_left -= 1;
            let (dx, dy) = self.last_outbound.offset();
            let next = Cell::new(self.pos.x + dx, self.pos.y + dy);
            if grid.passable(next) {
                self.pos = next;
            }
            return self.pos;
        }
        field_step(self, field, grid)
    }
}

/// Moves one cell toward the field's pull: the unblocked 8-neighbor whose
/// unit offset best matches the negated field vector. A zero field, or a
/// fully blocked neighborhood, keeps the agent in place. Ties resolve in the
/// order N, NE, E, SE, S, SW, W, NW.
pub fn field_step(agent: &mut AgentState, field: &FieldVector, grid: &GridMap) -> Cell {
    if field.is_zero() || !(field.fx.is_finite() && field.fy.is_finite()) {
        return agent.pos;
    }
    let norm = (field.fx * field.fx + field.fy * field.fy).sqrt();
    let desired = (-field.fx / norm, -field.fy / norm);
    let mut best: Option<(Cell, f64)> = None;
    for (dx, dy) in NEIGHBORS8 {
        let next = Cell::new(agent.pos.x + dx, agent.pos.y + dy);
        if !grid.passable(next) {
            continue;
        }
        let len = ((dx * dx + dy * dy) as f64).sqrt();
        let dot = (dx as f64 / len) * desired.0 + (dy as f64 / len) * desired.1;
        match best {
            Some((_, best_dot)) if dot <= best_dot => {}
            _ => best = Some((next, dot)),
        }
    }
    if let Some((next, _)) = best {
        agent.pos = next;
    }
    agent.pos
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EscapeMode {
    /// Teleport back to the start cell.
    Reset,
    /// Walk back along an A* path over the following steps.
    Walk,
}

impl std::str::FromStr for EscapeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reset" => Ok(Self::Reset),
            "walk" => Ok(Self::Walk),
            other => Err(Error::InvalidArgument(format!(
                "unknown escape mode `{other}` (expected reset|walk)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EscapeOutcome {
    Continue,
    Escape(CardinalDir),
}

/// Counts a visit to the agent's cell; past `limit` visits the agent is sent
/// back to start, the counts clear, and a fresh outbound heading is drawn
/// uniformly from the three cardinal directions other than the last one. The
/// next `escape_stride` steps follow that heading before field steering
/// resumes.
pub fn check_stuck_and_escape<R: Rng>(
    agent: &mut AgentState,
    grid: &GridMap,
    limit: u32,
    escape_stride: u32,
    mode: EscapeMode,
    rng: &mut R,
) -> Result<EscapeOutcome> {
    if limit == 0 {
        return Err(Error::InvalidArgument("stuck limit must be at least 1".into()));
    }
    let count = agent.visit_counts.entry(agent.pos).or_insert(0);
    *count += 1;
    if *count <= limit {
        return Ok(EscapeOutcome::Continue);
    }
    agent.visit_counts.clear();
    match mode {
        EscapeMode::Reset => {
            agent.pos = agent.start;
        }
        EscapeMode::Walk => {
            // Fall back to a reset when no path home exists.
            match astar(grid, agent.pos, agent.start)? {
                Some(path) => agent.walk_path = path.into_iter().skip(1).collect(),
                None => agent.pos = agent.start,
            }
        }
    }
    let choices: Vec<CardinalDir> = [
        CardinalDir::North,
        CardinalDir::East,
        CardinalDir::South,
        CardinalDir::West,
    ]
    .into_iter()
    .filter(|d| *d != agent.last_outbound)
    .collect();
    let heading = choices[rng.random_range(0..choices.len())];
    agent.last_outbound = heading;
    agent.escape_steps_left = escape_stride;
    Ok(EscapeOutcome::Escape(heading))
}

/// One A* search node: cost from start, heuristic to goal, and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathNode {
    pub cell: Cell,
    pub g: u32,
    pub h_est: u32,
    pub f: u32,
}

impl PathNode {
    fn new(cell: Cell, g: u32, h_est: u32) -> Self {
        Self {
            cell,
            g,
            h_est,
            f: g + h_est,
        }
    }
}

/// 4-connected shortest path from `start` to `goal` inclusive, unit edge
/// cost, Manhattan heuristic. Ties on `f` break toward the lower heuristic,
/// then insertion order. Returns `None` when the goal is unreachable.
pub fn astar(grid: &GridMap, start: Cell, goal: Cell) -> Result<Option<Vec<Cell>>> {
    for (name, cell) in [("start", start), ("goal", goal)] {
        if !grid.in_bounds(cell) {
            return Err(Error::InvalidArgument(format!(
                "{name} ({}, {}) out of bounds",
                cell.x, cell.y
            )));
        }
        if grid.is_blocked(cell) {
            return Err(Error::InvalidArgument(format!(
                "{name} ({}, {}) is blocked",
                cell.x, cell.y
            )));
        }
    }
    if start == goal {
        return Ok(Some(vec![start]));
    }

    // Min-heap on (f, h_est, insertion counter).
    let mut open: BinaryHeap<Reverse<(u32, u32, u64, Cell)>> = BinaryHeap::new();
    let mut best_g: HashMap<Cell, u32> = HashMap::new();
    let mut parent: HashMap<Cell, Cell> = HashMap::new();
    let mut counter = 0u64;

    let root = PathNode::new(start, 0, start.manhattan(goal));
    best_g.insert(start, 0);
    open.push(Reverse((root.f, root.h_est, counter, start)));

    while let Some(Reverse((_, _, _, cell))) = open.pop() {
        let g = best_g[&cell];
        if cell == goal {
            let mut path = vec![cell];
            let mut cur = cell;
            while let Some(&p) = parent.get(&cur) {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Ok(Some(path));
        }
        for (dx, dy) in NEIGHBORS4 {
            let next = Cell::new(cell.x + dx, cell.y + dy);
            if !grid.passable(next) {
                continue;
            }
            let candidate_g = g + 1;
            if best_g.get(&next).is_none_or(|&old| candidate_g < old) {
                best_g.insert(next, candidate_g);
                parent.insert(next, cell);
                counter += 1;
                let node = PathNode::new(next, candidate_g, next.manhattan(goal));
                open.push(Reverse((node.f, node.h_est, counter, next)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(x: i32, y: i32, force: f64) -> FieldObservation {
        FieldObservation {
            cell: Cell::new(x, y),
            class_id: 0,
            force,
        }
    }

    #[test]
    fn single_attractor_east_with_zero_axis_guard() {
        // Relative (+2, 0) with force -20: x term -10, y term guarded to 0.
        let f = compute_field(&[obs(2, 0, -20.0)], Cell::new(0, 0));
        assert_eq!(f, FieldVector { fx: -10.0, fy: 0.0 });
    }

    #[test]
    fn symmetric_observations_cancel_exactly() {
        let f = compute_field(
            &[obs(2, 0, -8.0), obs(-2, 0, -8.0)],
            Cell::new(0, 0),
        );
        assert_eq!(f, FieldVector::ZERO);
    }

    #[test]
    fn field_matches_term_by_term_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let pos = Cell::new(rng.random_range(-5..5), rng.random_range(-5..5));
            let observations: Vec<FieldObservation> = (0..3)
                .map(|_| {
                    obs(
                        rng.random_range(-10..10),
                        rng.random_range(-10..10),
                        rng.random_range(-20.0..20.0),
                    )
                })
                .collect();
            let f = compute_field(&observations, pos);
            let mut fx = 0.0;
            let mut fy = 0.0;
            for o in &observations {
                let dx = (o.cell.x - pos.x) as f64;
                let dy = (o.cell.y - pos.y) as f64;
                if dx != 0.0 {
                    fx += o.force / dx;
                }
                if dy != 0.0 {
                    fy += o.force / dy;
                }
            }
            assert!((f.fx - fx).abs() < 1e-12);
            assert!((f.fy - fy).abs() < 1e-12);
        }
    }

    #[test]
    fn field_is_linear_in_observation_lists() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let pos = Cell::new(0, 0);
            let a: Vec<FieldObservation> = (0..rng.random_range(0..5))
                .map(|_| {
                    obs(
                        rng.random_range(-9..9),
                        rng.random_range(-9..9),
                        rng.random_range(-20.0..20.0),
                    )
                })
                .collect();
            let b: Vec<FieldObservation> = (0..rng.random_range(0..5))
                .map(|_| {
                    obs(
                        rng.random_range(-9..9),
                        rng.random_range(-9..9),
                        rng.random_range(-20.0..20.0),
                    )
                })
                .collect();
            let mut ab = a.clone();
            ab.extend(b.clone());
            let fa = compute_field(&a, pos);
            let fb = compute_field(&b, pos);
            let fab = compute_field(&ab, pos);
            assert!((fab.fx - (fa.fx + fb.fx)).abs() < 1e-12);
            assert!((fab.fy - (fa.fy + fb.fy)).abs() < 1e-12);
        }
    }

    #[test]
    fn attractor_due_east_moves_east() {
        let grid = GridMap::new(9, 9).unwrap();
        let mut agent = AgentState::new(Cell::new(4, 4));
        let next = field_step(&mut agent, &FieldVector { fx: -10.0, fy: 0.0 }, &grid);
        assert_eq!(next, Cell::new(5, 4));
    }

    #[test]
    fn zero_field_stays_put() {
        let grid = GridMap::new(9, 9).unwrap();
        let mut agent = AgentState::new(Cell::new(4, 4));
        let next = field_step(&mut agent, &FieldVector::ZERO, &grid);
        assert_eq!(next, Cell::new(4, 4));
    }

    #[test]
    fn chosen_neighbor_maximizes_dot_product_among_unblocked() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut grid = GridMap::new(7, 7).unwrap();
        for trial in 0..10_000 {
            // Re-randomize a handful of obstacles around the agent.
            for y in 0..7 {
                for x in 0..7 {
                    grid.set_blocked(Cell::new(x, y), rng.random_range(0..4) == 0)
                        .unwrap();
                }
            }
            let pos = Cell::new(3, 3);
            grid.set_blocked(pos, false).unwrap();
            let field = FieldVector {
                fx: rng.random_range(-10.0..10.0),
                fy: rng.random_range(-10.0..10.0),
            };
            let mut agent = AgentState::new(pos);
            let next = field_step(&mut agent, &field, &grid);
            assert!(grid.passable(next), "trial {trial}");
            assert!((next.x - pos.x).abs() <= 1 && (next.y - pos.y).abs() <= 1);
            if field.is_zero() {
                assert_eq!(next, pos);
                continue;
            }
            // Exhaustive oracle over the 8 neighbors.
            let desired = (-field.fx, -field.fy);
            let mut best_dot = f64::NEG_INFINITY;
            let mut any = false;
            for (dx, dy) in NEIGHBORS8 {
                let cand = Cell::new(pos.x + dx, pos.y + dy);
                if !grid.passable(cand) {
                    continue;
                }
                any = true;
                let len = ((dx * dx + dy * dy) as f64).sqrt();
                let dot = (dx as f64 / len) * desired.0 + (dy as f64 / len) * desired.1;
                best_dot = best_dot.max(dot);
            }
            if !any {
                assert_eq!(next, pos);
            } else {
                let (dx, dy) = (next.x - pos.x, next.y - pos.y);
                let len = ((dx * dx + dy * dy) as f64).sqrt();
                let chosen = (dx as f64 / len) * desired.0 + (dy as f64 / len) * desired.1;
                // The normalization factor is shared, so comparing unnormalized
                // dot products is equivalent.
                let norm = (desired.0 * desired.0 + desired.1 * desired.1).sqrt();
                assert!(
                    (chosen - best_dot).abs() / norm < 1e-12,
                    "trial {trial}: {chosen} vs {best_dot}"
                );
            }
        }
    }

    #[test]
    fn sixth_visit_triggers_escape_at_limit_five() {
        let grid = GridMap::new(9, 9).unwrap();
        let mut agent = AgentState::new(Cell::new(4, 4));
        agent.pos = Cell::new(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for visit in 1..=5 {
            let out =
                check_stuck_and_escape(&mut agent, &grid, 5, 5, EscapeMode::Reset, &mut rng)
                    .unwrap();
            assert_eq!(out, EscapeOutcome::Continue, "visit {visit}");
        }
        let out =
            check_stuck_and_escape(&mut agent, &grid, 5, 5, EscapeMode::Reset, &mut rng).unwrap();
        assert!(matches!(out, EscapeOutcome::Escape(_)));
        assert_eq!(agent.pos, agent.start);
        assert_eq!(agent.visit_count(Cell::new(2, 2)), 0);
        assert!(agent.escaping());
    }

    #[test]
    fn escape_heading_excludes_the_last_outbound_direction() {
        let grid = GridMap::new(9, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut agent = AgentState::new(Cell::new(4, 4));
            agent.set_last_outbound(CardinalDir::North);
            for _ in 0..2 {
                check_stuck_and_escape(&mut agent, &grid, 1, 5, EscapeMode::Reset, &mut rng)
                    .unwrap();
            }
            // The second call escaped; its heading must avoid North.
            assert_ne!(agent.last_outbound(), CardinalDir::North);
        }
    }

    #[test]
    fn escape_headings_are_uniform_over_the_three_alternatives() {
        let grid = GridMap::new(9, 9).unwrap();
        let trials = 3000usize;
        let mut counts: HashMap<CardinalDir, usize> = HashMap::new();
        for seed in 0..trials as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut agent = AgentState::new(Cell::new(4, 4));
            agent.set_last_outbound(CardinalDir::North);
            let mut outcome = EscapeOutcome::Continue;
            for _ in 0..2 {
                outcome =
                    check_stuck_and_escape(&mut agent, &grid, 1, 5, EscapeMode::Reset, &mut rng)
                        .unwrap();
            }
            if let EscapeOutcome::Escape(dir) = outcome {
                *counts.entry(dir).or_default() += 1;
            }
        }
        assert_eq!(counts.values().sum::<usize>(), trials);
        assert!(counts.get(&CardinalDir::North).is_none());
        let p = 1.0 / 3.0;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        for dir in [CardinalDir::East, CardinalDir::South, CardinalDir::West] {
            let n = counts.get(&dir).copied().unwrap_or(0) as f64;
            assert!(
                (n - trials as f64 * p).abs() <= 3.0 * sigma,
                "{dir:?}: {n} (3 sigma = {sigma})"
            );
        }
    }

    #[test]
    fn walk_mode_paths_home_over_following_steps() {
        let grid = GridMap::new(9, 9).unwrap();
        let mut agent = AgentState::new(Cell::new(0, 0));
        agent.pos = Cell::new(3, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2 {
            check_stuck_and_escape(&mut agent, &grid, 1, 2, EscapeMode::Walk, &mut rng).unwrap();
        }
        // Escaped in walk mode: still at the stuck cell, path queued.
        assert_eq!(agent.pos, Cell::new(3, 0));
        assert!(agent.escaping());
        for _ in 0..3 {
            agent.advance(&FieldVector::ZERO, &grid);
        }
        assert_eq!(agent.pos, agent.start);
    }

    #[test]
    fn trivial_and_open_grid_paths() {
        let grid = GridMap::new(10, 10).unwrap();
        let start = Cell::new(0, 0);
        assert_eq!(astar(&grid, start, start).unwrap().unwrap(), vec![start]);
        let path = astar(&grid, start, Cell::new(3, 4)).unwrap().unwrap();
        // Manhattan lower bound: 7 unit edges = 8 cells on an open grid.
        assert_eq!(path.len(), 8);
        assert_eq!(path[0], start);
        assert_eq!(*path.last().unwrap(), Cell::new(3, 4));
    }

    #[test]
    fn endpoints_must_be_open_and_in_bounds() {
        let mut grid = GridMap::new(5, 5).unwrap();
        grid.set_blocked(Cell::new(2, 2), true).unwrap();
        assert!(astar(&grid, Cell::new(2, 2), Cell::new(0, 0)).is_err());
        assert!(astar(&grid, Cell::new(0, 0), Cell::new(2, 2)).is_err());
        assert!(astar(&grid, Cell::new(-1, 0), Cell::new(0, 0)).is_err());
        assert!(astar(&grid, Cell::new(0, 0), Cell::new(9, 0)).is_err());
    }

    /// Breadth-first distances from `start`, the optimality oracle for A*.
    fn bfs_dist(grid: &GridMap, start: Cell) -> HashMap<Cell, u32> {
        let mut dist = HashMap::new();
        dist.insert(start, 0);
        let mut queue = VecDeque::from([start]);
        while let Some(cell) = queue.pop_front() {
            let d = dist[&cell];
            for (dx, dy) in NEIGHBORS4 {
                let next = Cell::new(cell.x + dx, cell.y + dy);
                if grid.passable(next) && !dist.contains_key(&next) {
                    dist.insert(next, d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    #[test]
    fn astar_matches_bfs_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..200 {
            let mut grid = GridMap::new(20, 20).unwrap();
            for y in 0..20 {
                for x in 0..20 {
                    if rng.random_range(0.0..1.0) < 0.25 {
                        grid.set_blocked(Cell::new(x, y), true).unwrap();
                    }
                }
            }
            let start = Cell::new(rng.random_range(0..20), rng.random_range(0..20));
            let goal = Cell::new(rng.random_range(0..20), rng.random_range(0..20));
            grid.set_blocked(start, false).unwrap();
            grid.set_blocked(goal, false).unwrap();

            let result = astar(&grid, start, goal).unwrap();
            let dist = bfs_dist(&grid, start);
            match (result, dist.get(&goal)) {
                (Some(path), Some(&d)) => {
                    assert_eq!(path.len() as u32 - 1, d, "trial {trial}");
                    assert_eq!(path[0], start);
                    assert_eq!(*path.last().unwrap(), goal);
                    for pair in path.windows(2) {
                        assert_eq!(pair[0].manhattan(pair[1]), 1, "trial {trial}");
                        assert!(grid.passable(pair[1]));
                    }
                }
                (None, None) => {}
                (got, want) => panic!(
                    "trial {trial}: A* {:?} disagrees with BFS {:?}",
                    got.map(|p| p.len()),
                    want
                ),
            }
        }
    }

    #[test]
    fn path_node_carries_cost_identity() {
        let node = PathNode::new(Cell::new(1, 2), 7, 11);
        assert_eq!(node.f, node.g + node.h_est);
    }
}
