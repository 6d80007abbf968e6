//! Discrete-time search simulation.
//!
//! One trial is a sequential state machine. Each step runs, in order:
//! searcher moves, (guards stay), cost-map bumps for RS/CRS, the intruder's
//! move, and the capture check. A capture is a robot sharing the intruder's
//! cell after the intruder moves, or a robot and the intruder swapping cells.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{allocate_robots, rectangulate_best_of, DecompositionError, Rectangulation};
use crate::geometry::{rasterize, Cell, GeometryError, GridGraph, OrthoPolygon};
use crate::planning::{astar_indices, cost_field, hungarian, CostMap, DistanceField, PlanningError};
use crate::sfc::{rectangle_patrol, segments, Curve, Segment, SfcError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("{strategy} needs at least {needed} robots, got {got}")]
    TooFewRobots { strategy: Strategy, needed: usize, got: usize },
    #[error("{got} robots exceed the {cells} cells available to {strategy}")]
    TooManyRobots { strategy: Strategy, cells: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error(transparent)]
    Sfc(#[from] SfcError),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "sfc")]
    Sfc,
    #[serde(rename = "sfc-g")]
    SfcGuarded,
    #[serde(rename = "rs")]
    Random,
    #[serde(rename = "crs")]
    Cooperative,
    #[serde(rename = "baseline")]
    Baseline,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Sfc,
        Strategy::SfcGuarded,
        Strategy::Random,
        Strategy::Cooperative,
        Strategy::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Sfc => "sfc",
            Strategy::SfcGuarded => "sfc-g",
            Strategy::Random => "rs",
            Strategy::Cooperative => "crs",
            Strategy::Baseline => "baseline",
        }
    }

    fn uses_cost_map(self) -> bool {
        matches!(self, Strategy::Random | Strategy::Cooperative)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown strategy '{s}' (sfc, sfc-g, rs, crs, baseline)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntruderModel {
    #[serde(rename = "static")]
    Static,
    /// Uniform over staying put and each in-graph neighbor.
    #[serde(rename = "random")]
    RandomWalk,
    /// Uniform over in-graph neighbors only.
    #[serde(rename = "walk")]
    NeighborWalk,
}

impl IntruderModel {
    pub fn name(self) -> &'static str {
        match self {
            IntruderModel::Static => "static",
            IntruderModel::RandomWalk => "random",
            IntruderModel::NeighborWalk => "walk",
        }
    }
}

impl fmt::Display for IntruderModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntruderModel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "static" | "s" => Ok(IntruderModel::Static),
            "random" | "moving" | "m" => Ok(IntruderModel::RandomWalk),
            "walk" => Ok(IntruderModel::NeighborWalk),
            _ => Err(format!("unknown intruder model '{s}' (static, random, walk)")),
        }
    }
}

/// A search domain with its grid graph and descriptors.
#[derive(Clone, Debug)]
pub struct Arena {
    pub id: String,
    pub polygon: OrthoPolygon,
    pub grid: GridGraph,
    /// Spike count label, when known.
    pub beta: Option<u32>,
    pub cell_size_m: f64,
}

impl Arena {
    pub fn new(id: impl Into<String>, polygon: OrthoPolygon) -> Result<Self> {
        let grid = rasterize(&polygon)?;
        Ok(Self { id: id.into(), polygon, grid, beta: None, cell_size_m: 5.0 })
    }

    pub fn with_beta(mut self, beta: u32) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn cells(&self) -> usize {
        self.grid.len()
    }
}

/// Rectangulation of an arena with one repaired patrol curve per rectangle.
#[derive(Clone, Debug)]
pub struct SfcLayout {
    pub rectangulation: Rectangulation,
    pub curves: Vec<Curve>,
    curve_indices: Vec<Vec<usize>>,
}

impl SfcLayout {
    /// Fewest rectangles over `attempts` rectangulation seeds starting at `seed`.
    pub fn new(grid: &GridGraph, seed: u64, attempts: u32) -> Self {
        let rectangulation = rectangulate_best_of(grid, seed, attempts);
        let curves: Vec<Curve> = rectangulation.rects.iter().map(rectangle_patrol).collect();
        let curve_indices = curves
            .iter()
            .map(|c| {
                c.cells()
                    .iter()
                    .map(|&cell| grid.index_of(cell).expect("rectangles lie in the grid"))
                    .collect()
            })
            .collect();
        Self { rectangulation, curves, curve_indices }
    }

    pub fn rect_count(&self) -> usize {
        self.rectangulation.rects.len()
    }

    pub fn junction_count(&self) -> usize {
        self.rectangulation.junctions.len()
    }

    /// Fewest robots the strategy accepts on this layout.
    pub fn min_robots(&self, strategy: Strategy) -> usize {
        match strategy {
            Strategy::Sfc => self.rect_count(),
            Strategy::SfcGuarded => self.rect_count() + self.junction_count(),
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfcParams {
    pub rect_seed: u64,
    /// Rectangulation seeds tried; the one with the fewest rectangles wins.
    pub rect_attempts: u32,
}

impl Default for SfcParams {
    fn default() -> Self {
        Self { rect_seed: 0, rect_attempts: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub arena: Arc<Arena>,
    pub strategy: Strategy,
    pub k: usize,
    pub intruder: IntruderModel,
    pub max_steps: u64,
    pub seed: u64,
    pub sfc: SfcParams,
    /// Precomputed layout; built from `sfc` when absent.
    pub layout: Option<Arc<SfcLayout>>,
    /// Explicit robot cells, overriding random placement for RS, CRS and
    /// the baseline.
    pub robot_cells: Option<Vec<Cell>>,
    pub intruder_cell: Option<Cell>,
    pub record_trace: bool,
}

impl SimConfig {
    pub fn new(arena: Arc<Arena>, strategy: Strategy, k: usize, intruder: IntruderModel, seed: u64) -> Self {
        let max_steps = 100 * arena.cells() as u64;
        Self {
            arena,
            strategy,
            k,
            intruder,
            max_steps,
            seed,
            sfc: SfcParams::default(),
            layout: None,
            robot_cells: None,
            intruder_cell: None,
            record_trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Searcher,
    Guard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Patrol {
    pub rect: usize,
    pub segment: Segment,
    /// Current index into the rectangle's curve.
    pub cursor: usize,
    pub forward: bool,
}

#[derive(Clone, Debug)]
pub struct Robot {
    pub id: usize,
    /// Dense grid index.
    pub pos: usize,
    pub role: Role,
    /// Planned path (dense indices) starting at the cell where it was made.
    pub plan: Vec<usize>,
    /// Index of the current cell within `plan`.
    pub progress: usize,
    pub patrol: Option<Patrol>,
}

impl Robot {
    fn searcher(id: usize, pos: usize) -> Self {
        Self { id, pos, role: Role::Searcher, plan: Vec::new(), progress: 0, patrol: None }
    }

    pub fn at_destination(&self) -> bool {
        self.progress + 1 >= self.plan.len()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntruderState {
    pub pos: usize,
    pub model: IntruderModel,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceStep {
    pub t: u64,
    pub robots: Vec<Cell>,
    pub intruder: Cell,
    /// Cells whose cost was bumped this step, with the number of bumps.
    pub cost_deltas: Vec<(Cell, u32)>,
    pub events: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub captured: bool,
    pub by_swap: bool,
    pub reassigned: bool,
}

pub struct SimState {
    arena: Arc<Arena>,
    layout: Option<Arc<SfcLayout>>,
    strategy: Strategy,
    pub t: u64,
    pub robots: Vec<Robot>,
    pub intruder: IntruderState,
    pub costs: CostMap<f64>,
    pub captured: bool,
    rng: ChaCha8Rng,
    trace: Option<Vec<TraceStep>>,
}

/// Places robots and the intruder for one trial.
pub fn init_trial(cfg: &SimConfig) -> Result<SimState> {
    let grid = &cfg.arena.grid;
    let n = grid.len();
    if cfg.k == 0 {
        return Err(SimError::TooFewRobots { strategy: cfg.strategy, needed: 1, got: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let intruder_pos = match cfg.intruder_cell {
        Some(c) => grid.require(c)?,
        None => rng.gen_range(0..n),
    };

    let mut layout = None;
    let robots = match cfg.strategy {
        Strategy::Sfc | Strategy::SfcGuarded => {
            let l = cfg
                .layout
                .clone()
                .unwrap_or_else(|| Arc::new(SfcLayout::new(grid, cfg.sfc.rect_seed, cfg.sfc.rect_attempts)));
            let robots = place_sfc(&l, cfg)?;
            layout = Some(l);
            robots
        }
        Strategy::Random | Strategy::Cooperative | Strategy::Baseline => match &cfg.robot_cells {
            Some(cells) => {
                if cells.len() != cfg.k {
                    return Err(SimError::InvalidConfig(format!(
                        "{} robot cells given for k = {}",
                        cells.len(),
                        cfg.k
                    )));
                }
                cells
                    .iter()
                    .enumerate()
                    .map(|(id, &c)| Ok(Robot::searcher(id, grid.require(c)?)))
                    .collect::<Result<Vec<_>>>()?
            }
            None => (0..cfg.k).map(|id| Robot::searcher(id, rng.gen_range(0..n))).collect(),
        },
    };

    let captured = robots.iter().any(|r| r.pos == intruder_pos);
    let mut state = SimState {
        arena: cfg.arena.clone(),
        layout,
        strategy: cfg.strategy,
        t: 0,
        robots,
        intruder: IntruderState { pos: intruder_pos, model: cfg.intruder },
        costs: CostMap::new(n),
        captured,
        rng,
        trace: cfg.record_trace.then(Vec::new),
    };
    if state.trace.is_some() {
        let events = if captured { vec!["capture".to_string()] } else { Vec::new() };
        state.record(Vec::new(), events);
    }
    Ok(state)
}

fn place_sfc(layout: &SfcLayout, cfg: &SimConfig) -> Result<Vec<Robot>> {
    let needed = layout.min_robots(cfg.strategy);
    if cfg.k < needed {
        return Err(SimError::TooFewRobots { strategy: cfg.strategy, needed, got: cfg.k });
    }
    let cells = cfg.arena.grid.len();
    let guards: Vec<usize> = if cfg.strategy == Strategy::SfcGuarded {
        layout
            .rectangulation
            .junctions
            .iter()
            .map(|j| cfg.arena.grid.index_of(j.middle().0).expect("junction cell in grid"))
            .collect()
    } else {
        Vec::new()
    };
    let searchers = cfg.k - guards.len();
    if searchers > cells {
        return Err(SimError::TooManyRobots { strategy: cfg.strategy, cells, got: searchers });
    }
    let counts = allocate_robots(&layout.rectangulation.areas(), searchers).map_err(|e| match e {
        DecompositionError::TooFewRobots { .. } => {
            SimError::TooFewRobots { strategy: cfg.strategy, needed, got: cfg.k }
        }
    })?;
    let mut robots = Vec::with_capacity(cfg.k);
    for (rect, &count) in counts.iter().enumerate() {
        for segment in segments(&layout.curves[rect], count)? {
            let pos = layout.curve_indices[rect][segment.start];
            let mut r = Robot::searcher(robots.len(), pos);
            r.patrol = Some(Patrol { rect, segment, cursor: segment.start, forward: true });
            robots.push(r);
        }
    }
    for pos in guards {
        let mut r = Robot::searcher(robots.len(), pos);
        r.role = Role::Guard;
        robots.push(r);
    }
    Ok(robots)
}

impl SimState {
    pub fn grid(&self) -> &GridGraph {
        &self.arena.grid
    }

    pub fn layout(&self) -> Option<&SfcLayout> {
        self.layout.as_deref()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn robot_cells(&self) -> Vec<Cell> {
        self.robots.iter().map(|r| self.arena.grid.cell(r.pos)).collect()
    }

    pub fn intruder_cell(&self) -> Cell {
        self.arena.grid.cell(self.intruder.pos)
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceStep>> {
        self.trace.take()
    }

    fn record(&mut self, cost_deltas: Vec<(Cell, u32)>, events: Vec<String>) {
        let step = TraceStep {
            t: self.t,
            robots: self.robot_cells(),
            intruder: self.intruder_cell(),
            cost_deltas,
            events,
        };
        if let Some(trace) = &mut self.trace {
            trace.push(step);
        }
    }

    /// Advances the trial by one time step.
    pub fn step(&mut self) -> StepEvents {
        let mut events = StepEvents::default();
        let mut notes = Vec::new();
        let before: Vec<usize> = self.robots.iter().map(|r| r.pos).collect();

        // 1-2. searchers move, guards stay
        match self.strategy {
            Strategy::Sfc | Strategy::SfcGuarded => {
                for i in 0..self.robots.len() {
                    let next = self.policy_sfc_g(i);
                    self.robots[i].pos = next;
                }
            }
            Strategy::Random => {
                for i in 0..self.robots.len() {
                    let next = self.policy_rs(i);
                    self.robots[i].pos = next;
                }
            }
            Strategy::Cooperative => {
                if self.robots.iter().all(Robot::at_destination) {
                    self.reassign_targets();
                    events.reassigned = true;
                    notes.push("reassign".to_string());
                }
                for i in 0..self.robots.len() {
                    let next = self.policy_crs(i);
                    self.robots[i].pos = next;
                }
            }
            Strategy::Baseline => {
                let field = DistanceField::new(&self.arena.grid, self.intruder.pos);
                for r in &mut self.robots {
                    r.pos = field.next_step(&self.arena.grid, r.pos).unwrap_or(r.pos);
                }
            }
        }

        // 3. cost bumps
        let mut deltas = Vec::new();
        if self.strategy.uses_cost_map() {
            for r in &self.robots {
                self.costs.bump_index(r.pos);
            }
            if self.trace.is_some() {
                let mut bumped: Vec<usize> = self.robots.iter().map(|r| r.pos).collect();
                bumped.sort_unstable();
                for chunk in bumped.chunk_by(|a, b| a == b) {
                    deltas.push((self.arena.grid.cell(chunk[0]), chunk.len() as u32));
                }
            }
        }

        // 4. intruder
        let intruder_before = self.intruder.pos;
        self.intruder.pos = self.intruder_move();

        // 5. capture
        let meet = self.robots.iter().any(|r| r.pos == self.intruder.pos);
        let swap = self.robots.iter().zip(&before).any(|(r, &b)| {
            b == self.intruder.pos && r.pos == intruder_before && b != r.pos
        });
        events.captured = meet || swap;
        events.by_swap = swap && !meet;
        self.captured = events.captured;
        self.t += 1;
        if self.trace.is_some() {
            if events.captured {
                notes.push(if events.by_swap { "swap-capture" } else { "capture" }.to_string());
            }
            self.record(deltas, notes);
        }
        events
    }

    /// Next cell along the robot's patrol segment, turning at either end.
    pub fn policy_sfc(&mut self, i: usize) -> usize {
        let layout = self.layout.as_ref().expect("SFC layout");
        let robot = &mut self.robots[i];
        let Some(p) = robot.patrol.as_mut() else {
            return robot.pos;
        };
        let seg = p.segment;
        if seg.start == seg.end {
            return robot.pos;
        }
        if p.forward && p.cursor == seg.end {
            p.forward = false;
        } else if !p.forward && p.cursor == seg.start {
            p.forward = true;
        }
        p.cursor = if p.forward { p.cursor + 1 } else { p.cursor - 1 };
        layout.curve_indices[p.rect][p.cursor]
    }

    /// Guards hold position; searchers patrol.
    pub fn policy_sfc_g(&mut self, i: usize) -> usize {
        match self.robots[i].role {
            Role::Guard => self.robots[i].pos,
            Role::Searcher => self.policy_sfc(i),
        }
    }

    /// Random search: on arrival, draw a new uniform target and plan to it
    /// right away, then take one step along the plan.
    pub fn policy_rs(&mut self, i: usize) -> usize {
        if self.robots[i].at_destination() {
            let here = self.robots[i].pos;
            let n = self.arena.grid.len();
            let mut target = here;
            for _ in 0..64 {
                target = self.rng.gen_range(0..n);
                if target != here {
                    break;
                }
            }
            let plan = if target == here {
                vec![here]
            } else {
                astar_indices(&self.arena.grid, &self.costs, here, target).unwrap_or_else(|| vec![here])
            };
            let r = &mut self.robots[i];
            r.plan = plan;
            r.progress = 0;
        }
        self.advance(i)
    }

    /// Cooperative random search: a robot with a remaining plan steps along
    /// it; one that has arrived waits for the next joint reassignment.
    pub fn policy_crs(&mut self, i: usize) -> usize {
        self.advance(i)
    }

    fn advance(&mut self, i: usize) -> usize {
        let r = &mut self.robots[i];
        if r.at_destination() {
            return r.pos;
        }
        r.progress += 1;
        r.plan[r.progress]
    }

    /// Draws `k` fresh targets, matches robots to them by minimum total
    /// planned cost, and plans every robot's path.
    fn reassign_targets(&mut self) {
        let grid = &self.arena.grid;
        let n = grid.len();
        let k = self.robots.len();
        let targets: Vec<usize> = (0..k).map(|_| self.rng.gen_range(0..n)).collect();
        let matrix: Vec<Vec<f64>> = self
            .robots
            .iter()
            .map(|r| {
                let field = cost_field(grid, &self.costs, r.pos);
                targets.iter().map(|&t| field[t].expect("grid is connected")).collect()
            })
            .collect();
        let assignment = hungarian(&matrix).expect("square, finite, non-negative matrix");
        for (r, &col) in self.robots.iter_mut().zip(&assignment.targets) {
            let goal = targets[col];
            r.plan = astar_indices(grid, &self.costs, r.pos, goal).unwrap_or_else(|| vec![r.pos]);
            r.progress = 0;
        }
    }

    /// Next intruder cell under its motion model.
    pub fn intruder_move(&mut self) -> usize {
        let here = self.intruder.pos;
        let slots = self.arena.grid.neighbor_slots(here);
        let mut options: Vec<usize> = Vec::with_capacity(5);
        match self.intruder.model {
            IntruderModel::Static => return here,
            IntruderModel::RandomWalk => options.push(here),
            IntruderModel::NeighborWalk => {}
        }
        options.extend(slots.iter().flatten());
        *options.choose(&mut self.rng).unwrap_or(&here)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialResult {
    pub captured: bool,
    pub steps: u64,
    pub strategy: Strategy,
    pub k: usize,
    pub seed: u64,
    pub intruder: IntruderModel,
    pub instance: String,
    pub area_cells: usize,
    pub beta: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
}

/// Runs one trial until capture or `max_steps`.
pub fn run_trial(cfg: &SimConfig) -> Result<TrialResult> {
    let mut state = init_trial(cfg)?;
    while !state.captured && state.t < cfg.max_steps {
        state.step();
    }
    Ok(TrialResult {
        captured: state.captured,
        steps: state.t,
        strategy: cfg.strategy,
        k: cfg.k,
        seed: cfg.seed,
        intruder: cfg.intruder,
        instance: cfg.arena.id.clone(),
        area_cells: cfg.arena.cells(),
        beta: cfg.arena.beta,
        trace: state.take_trace(),
    })
}
