//! Polygon generators: random orthogonal polygons (Inflate-Cut) and the comb
//! gadget built from a 3-Partition instance, plus the schedule check and a
//! local spike counter.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rasterize, Cell, GeometryError, GridGraph, OrthoPolygon, Point};
use crate::planning::DistanceField;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolygenError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("target vertex count must be even and at least 4, got {0}")]
    OddTargetVertices(usize),
    #[error("no simplicity-preserving cut found after {0} retries")]
    IterationBudgetExceeded(usize),
    #[error("invalid 3-Partition instance: {0}")]
    InstanceInvalid(String),
    #[error("invalid comb: {0}")]
    CombInvalid(String),
    #[error("groups are not a partition of the {0} spike indices")]
    NotAPartition(usize),
    #[error("group {0} does not have exactly three members")]
    TripleSizeError(usize),
    #[error("instance file: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, PolygenError>;

const MAX_RETRIES: usize = 10_000;

/// Random simple orthogonal polygon with exactly `target_vertices` vertices.
///
/// Starts from the unit square. Each round picks a random cell touching the
/// boundary, inserts one new grid column and one new grid row through its
/// center, and cuts away the rectangle between that center and a convex
/// vertex whose corner region holds no other boundary. Each cut turns one
/// convex vertex into three vertices, so every round adds exactly two, and
/// the bounding box grows by one cell per side.
pub fn inflate_cut(target_vertices: usize, seed: u64) -> Result<OrthoPolygon> {
    if target_vertices < 4 || target_vertices % 2 == 1 {
        return Err(PolygenError::OddTargetVertices(target_vertices));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut poly = OrthoPolygon::rectangle(1, 1)?;
    while poly.vertex_count() < target_vertices {
        let mut retries = 0;
        poly = loop {
            if let Some(next) = inflate_cut_round(&poly, &mut rng)? {
                break next;
            }
            retries += 1;
            if retries >= MAX_RETRIES {
                return Err(PolygenError::IterationBudgetExceeded(retries));
            }
        };
    }
    Ok(poly)
}

fn inflate_cut_round(poly: &OrthoPolygon, rng: &mut ChaCha8Rng) -> Result<Option<OrthoPolygon>> {
    let grid = rasterize(poly)?;
    let boundary: Vec<Cell> = grid
        .cells()
        .iter()
        .copied()
        .filter(|c| c.around().iter().any(|n| !grid.contains(*n)))
        .collect();
    let cell = *boundary.choose(rng).expect("a polygon has boundary cells");

    // New lines through the cell center: x = col + 1 and y = row + 1.
    let (ci, cj) = (cell.col as i64, cell.row as i64);
    let inflated: Vec<Point> = poly
        .vertices()
        .iter()
        .map(|p| Point::new(if p.x > ci { p.x + 1 } else { p.x }, if p.y > cj { p.y + 1 } else { p.y }))
        .collect();
    let center = Point::new(ci + 1, cj + 1);
    let n = inflated.len();

    let mut candidates = Vec::new();
    for i in 0..n {
        let prev = inflated[(i + n - 1) % n];
        let v = inflated[i];
        let next = inflated[(i + 1) % n];
        if let Some(cut) = corner_cut(&inflated, i, prev, v, next, center) {
            candidates.push(cut);
        }
    }
    let Some(cut) = candidates.choose(rng) else {
        return Ok(None);
    };
    match OrthoPolygon::new(cut) {
        Ok(p) => Ok(Some(p)),
        Err(_) => Ok(None),
    }
}

/// The vertex list with `v` replaced by the notch reaching `center`, if the
/// rectangle `box(center, v)` sits in the corner at `v` untouched by any
/// other edge.
fn corner_cut(
    pts: &[Point],
    i: usize,
    prev: Point,
    v: Point,
    next: Point,
    center: Point,
) -> Option<Vec<Point>> {
    let cross = (v.x - prev.x) * (next.y - v.y) - (v.y - prev.y) * (next.x - v.x);
    if cross <= 0 {
        return None;
    }
    // Directions from v along its two edges.
    let to_prev = ((prev.x - v.x).signum(), (prev.y - v.y).signum());
    let to_next = ((next.x - v.x).signum(), (next.y - v.y).signum());
    let (hdir, hlen, vdir, vlen) = if to_prev.1 == 0 {
        (to_prev.0, (prev.x - v.x).abs(), to_next.1, (next.y - v.y).abs())
    } else {
        (to_next.0, (next.x - v.x).abs(), to_prev.1, (prev.y - v.y).abs())
    };
    let dx = center.x - v.x;
    let dy = center.y - v.y;
    if dx.signum() != hdir || dy.signum() != vdir || dx.abs() >= hlen || dy.abs() >= vlen {
        return None;
    }
    let (x0, x1) = (v.x.min(center.x), v.x.max(center.x));
    let (y0, y1) = (v.y.min(center.y), v.y.max(center.y));
    let n = pts.len();
    for e in 0..n {
        if e == i || (e + 1) % n == i {
            continue;
        }
        let a = pts[e];
        let b = pts[(e + 1) % n];
        let (ex0, ex1) = (a.x.min(b.x), a.x.max(b.x));
        let (ey0, ey1) = (a.y.min(b.y), a.y.max(b.y));
        if ex0 <= x1 && x0 <= ex1 && ey0 <= y1 && y0 <= ey1 {
            return None;
        }
    }
    let on_prev = if to_prev.1 == 0 { Point::new(center.x, v.y) } else { Point::new(v.x, center.y) };
    let on_next = if to_next.1 == 0 { Point::new(center.x, v.y) } else { Point::new(v.x, center.y) };
    let mut out = Vec::with_capacity(n + 2);
    out.extend_from_slice(&pts[..i]);
    out.extend([on_prev, center, on_next]);
    out.extend_from_slice(&pts[i + 1..]);
    Some(out)
}

/// A 3-Partition instance: split `S` (3q numbers) into q triples summing to T.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreePartitionInstance {
    #[serde(rename = "S")]
    pub values: Vec<u64>,
    pub q: usize,
    #[serde(rename = "T")]
    pub target: u64,
}

impl ThreePartitionInstance {
    pub fn new(values: Vec<u64>, q: usize, target: u64) -> Result<Self> {
        let inst = Self { values, q, target };
        inst.validate()?;
        Ok(inst)
    }

    /// Hard requirements: 3q positive values summing to qT. The strong
    /// bounds `T/4 < n < T/2` only produce a warning.
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.target == 0 {
            return Err(PolygenError::InstanceInvalid("q and T must be positive".into()));
        }
        if self.values.len() != 3 * self.q {
            return Err(PolygenError::InstanceInvalid(format!(
                "expected {} values, got {}",
                3 * self.q,
                self.values.len()
            )));
        }
        if self.values.contains(&0) {
            return Err(PolygenError::InstanceInvalid("values must be positive".into()));
        }
        let sum: u64 = self.values.iter().sum();
        if sum != self.q as u64 * self.target {
            return Err(PolygenError::InstanceInvalid(format!(
                "sum {sum} differs from qT = {}",
                self.q as u64 * self.target
            )));
        }
        Ok(())
    }

    pub fn within_strong_bounds(&self) -> bool {
        self.values.iter().all(|&v| 4 * v > self.target && 2 * v < self.target)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PolygenError::Io(e.to_string()))?;
        let inst: Self = serde_json::from_str(&text).map_err(|e| PolygenError::Io(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }
}

/// Base rectangle with upward spikes. Spike `i` is `spike_width` wide and
/// `spike_lengths[i]` deep; spikes are separated (and flanked) by
/// `spike_gap` cells of base.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombSpec {
    pub base_height: u32,
    pub spike_lengths: Vec<u32>,
    pub spike_width: u32,
    pub spike_gap: u32,
}

impl CombSpec {
    pub fn base_width(&self) -> u32 {
        self.spike_lengths.len() as u32 * (self.spike_width + self.spike_gap) + self.spike_gap
    }

    pub fn base_area(&self) -> u64 {
        self.base_width() as u64 * self.base_height as u64
    }

    pub fn area(&self) -> u64 {
        self.base_area()
            + self.spike_width as u64 * self.spike_lengths.iter().map(|&d| d as u64).sum::<u64>()
    }

    /// Left column of spike `i`.
    pub fn spike_col(&self, i: usize) -> u32 {
        self.spike_gap + i as u32 * (self.spike_width + self.spike_gap)
    }

    /// Every length multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        Self {
            base_height: self.base_height * factor,
            spike_lengths: self.spike_lengths.iter().map(|d| d * factor).collect(),
            spike_width: self.spike_width * factor,
            spike_gap: self.spike_gap * factor,
        }
    }

    pub fn polygon(&self) -> Result<OrthoPolygon> {
        if self.base_height == 0 || self.spike_width == 0 {
            return Err(PolygenError::CombInvalid("base height and spike width must be positive".into()));
        }
        if self.spike_lengths.contains(&0) {
            return Err(PolygenError::CombInvalid("spike lengths must be positive".into()));
        }
        let h = self.base_height as i64;
        let w = self.base_width() as i64;
        if self.spike_gap == 0 {
            return match self.spike_lengths.as_slice() {
                [depth] => Ok(OrthoPolygon::rectangle(w, h + *depth as i64)?),
                _ => Err(PolygenError::CombInvalid("spikes need a gap between them".into())),
            };
        }
        let mut pts = vec![Point::new(0, 0), Point::new(w, 0), Point::new(w, h)];
        for i in (0..self.spike_lengths.len()).rev() {
            let left = self.spike_col(i) as i64;
            let right = left + self.spike_width as i64;
            let top = h + self.spike_lengths[i] as i64;
            pts.extend([
                Point::new(right, h),
                Point::new(right, top),
                Point::new(left, top),
                Point::new(left, h),
            ]);
        }
        pts.push(Point::new(0, h));
        Ok(OrthoPolygon::new(&pts)?)
    }
}

/// The comb gadget: spike `i` is `values[i]` cells deep, one-cell gaps.
pub fn build_comb(
    inst: &ThreePartitionInstance,
    spike_width: u32,
    base_height: u32,
) -> Result<OrthoPolygon> {
    comb_spec(inst, spike_width, base_height, 1)?.polygon()
}

pub fn comb_spec(
    inst: &ThreePartitionInstance,
    spike_width: u32,
    base_height: u32,
    spike_gap: u32,
) -> Result<CombSpec> {
    inst.validate()?;
    if !inst.within_strong_bounds() {
        log::debug!("3-Partition values outside (T/4, T/2)");
    }
    let spike_lengths = inst
        .values
        .iter()
        .map(|&v| u32::try_from(v).map_err(|_| PolygenError::InstanceInvalid("value too large".into())))
        .collect::<Result<Vec<_>>>()?;
    Ok(CombSpec { base_height, spike_lengths, spike_width, spike_gap: spike_gap.max(1) })
}

/// Timing of one robot clearing its triple of spikes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RobotSchedule {
    /// Spike indices, left to right.
    pub spikes: [usize; 3],
    /// Sum of the three spike depths.
    pub clearing_time: u64,
    /// Steps taken by the sweep simulation until the last spike cell is seen.
    pub simulated_time: u64,
    /// `simulated_time - clearing_time`: descents out of cleared spikes and
    /// walking along the base.
    pub overhead: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScheduleReport {
    /// `q` times the slowest robot's clearing time. Equals `qT` exactly when
    /// every triple sums to `T`.
    pub makespan: u64,
    pub balanced: bool,
    pub robots: Vec<RobotSchedule>,
}

/// Evaluates a grouping of spike indices (0-based) into triples, one robot
/// per triple, on the comb gadget of `inst`.
pub fn verify_partition_schedule(
    inst: &ThreePartitionInstance,
    partition: &[Vec<usize>],
) -> Result<ScheduleReport> {
    inst.validate()?;
    let n = inst.values.len();
    for (g, group) in partition.iter().enumerate() {
        if group.len() != 3 {
            return Err(PolygenError::TripleSizeError(g));
        }
    }
    let mut seen = vec![false; n];
    for &i in partition.iter().flatten() {
        if i >= n || seen[i] {
            return Err(PolygenError::NotAPartition(n));
        }
        seen[i] = true;
    }
    if partition.len() != inst.q || !seen.iter().all(|&s| s) {
        return Err(PolygenError::NotAPartition(n));
    }

    let spec = comb_spec(inst, 1, 1, 1)?;
    let grid = rasterize(&spec.polygon()?)?;
    let mut robots = Vec::with_capacity(partition.len());
    for group in partition {
        let mut spikes = [group[0], group[1], group[2]];
        spikes.sort_unstable();
        let clearing_time: u64 = spikes.iter().map(|&s| inst.values[s]).sum();
        let simulated_time = sweep_triple(&spec, &grid, &spikes);
        let overhead = simulated_time - clearing_time;
        // Descents from the first two spikes plus the walk along the base.
        let expected = inst.values[spikes[0]]
            + inst.values[spikes[1]]
            + (spec.spike_col(spikes[2]) - spec.spike_col(spikes[0])) as u64;
        assert_eq!(overhead, expected, "sweep simulation disagrees with the closed form");
        robots.push(RobotSchedule { spikes, clearing_time, simulated_time, overhead });
    }
    let slowest = robots.iter().map(|r| r.clearing_time).max().unwrap_or(0);
    Ok(ScheduleReport {
        makespan: inst.q as u64 * slowest,
        balanced: robots.iter().all(|r| r.clearing_time == inst.target),
        robots,
    })
}

/// Walks a robot from the base cell under the first spike to the tip of each
/// spike in turn, along shortest paths, and returns the step at which the
/// last spike cell is first visited.
fn sweep_triple(spec: &CombSpec, grid: &GridGraph, spikes: &[usize; 3]) -> u64 {
    let base_top = spec.base_height as i32 - 1;
    let col = |s: usize| spec.spike_col(s) as i32;
    let mut pending: Vec<usize> = spikes
        .iter()
        .flat_map(|&s| {
            (1..=spec.spike_lengths[s] as i32)
                .map(move |d| grid.index_of(Cell::new(col(s), base_top + d)).expect("spike cell"))
        })
        .collect();
    let mut pos = grid.index_of(Cell::new(col(spikes[0]), base_top)).expect("base cell");
    let mut t = 0u64;
    for &s in spikes {
        let tip = Cell::new(col(s), base_top + spec.spike_lengths[s] as i32);
        let field = DistanceField::new(grid, grid.index_of(tip).expect("tip cell"));
        while pos != field.goal() {
            pos = field.next_step(grid, pos).expect("comb is connected");
            t += 1;
            pending.retain(|&c| c != pos);
            if pending.is_empty() {
                return t;
            }
        }
    }
    t
}

/// Counts rectangular protrusions: an edge with two convex ends whose
/// neighbors run the same way, spanning a rectangle of depth equal to the
/// shorter neighbor, whose far side opens entirely into the polygon. When
/// the two side edges differ in length the protrusion must also be deeper
/// than it is wide. This is a local heuristic.
pub fn count_spikes(poly: &OrthoPolygon) -> usize {
    let Ok(grid) = rasterize(poly) else {
        return 0;
    };
    let pts = poly.vertices();
    let n = pts.len();
    let mut count = 0;
    for i in 0..n {
        let j = (i + 1) % n;
        if !poly.is_convex(i) || !poly.is_convex(j) {
            continue;
        }
        let a = pts[i];
        let b = pts[j];
        let before = pts[(i + n - 1) % n];
        let after = pts[(j + 1) % n];
        let side_in = (before.x - a.x).abs() + (before.y - a.y).abs();
        let side_out = (after.x - b.x).abs() + (after.y - b.y).abs();
        let depth = side_in.min(side_out);
        let width = (b.x - a.x).abs() + (b.y - a.y).abs();
        if side_in != side_out && depth <= width {
            continue;
        }
        // Inward axis follows the outgoing side.
        let (ix, iy) = ((after.x - b.x).signum(), (after.y - b.y).signum());
        let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
        let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
        // Rectangle cells and the strip just beyond the open side.
        let (inside, beyond): (Vec<Cell>, Vec<Cell>) = if ix == 0 {
            let rows: Vec<i64> = if iy > 0 { (y0..y0 + depth).collect() } else { (y0 - depth..y0).collect() };
            let next_row = if iy > 0 { y0 + depth } else { y0 - depth - 1 };
            (
                rows.iter()
                    .flat_map(|&r| (x0..x1).map(move |c| Cell::new(c as i32, r as i32)))
                    .collect(),
                (x0..x1).map(|c| Cell::new(c as i32, next_row as i32)).collect(),
            )
        } else {
            let cols: Vec<i64> = if ix > 0 { (x0..x0 + depth).collect() } else { (x0 - depth..x0).collect() };
            let next_col = if ix > 0 { x0 + depth } else { x0 - depth - 1 };
            (
                cols.iter()
                    .flat_map(|&c| (y0..y1).map(move |r| Cell::new(c as i32, r as i32)))
                    .collect(),
                (y0..y1).map(|r| Cell::new(next_col as i32, r as i32)).collect(),
            )
        };
        if inside.iter().all(|&c| grid.contains(c)) && beyond.iter().all(|&c| grid.contains(c)) {
            count += 1;
        }
    }
    count
}

/// Random 3-Partition instance that has a solution: `q` random triples each
/// summing to `target`, shuffled.
pub fn random_solvable_instance(q: usize, target: u64, rng: &mut impl Rng) -> ThreePartitionInstance {
    assert!(target >= 3, "each triple needs three positive values");
    let mut values = Vec::with_capacity(3 * q);
    for _ in 0..q {
        let a = rng.gen_range(1..=target - 2);
        let b = rng.gen_range(1..=target - a - 1);
        values.extend([a, b, target - a - b]);
    }
    values.shuffle(rng);
    ThreePartitionInstance { values, q, target }
}
