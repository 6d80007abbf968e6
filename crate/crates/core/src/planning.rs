//! Grid path planning and target assignment.
//!
//! Everything that carries a real-valued cost is generic over [`Scalar`], so
//! the same planners run on `f64` in the simulator and on exact rationals in
//! the optimality checks.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, Zero};
use thiserror::Error;

use crate::geometry::{Cell, GeometryError, GridGraph};
use crate::sfc::Curve;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanningError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("goal ({0}, {1}) is unreachable")]
    Unreachable(i32, i32),
    #[error("cost matrix is not square")]
    NonSquare,
    #[error("cost matrix entry ({0}, {1}) is negative")]
    NegativeEntry(usize, usize),
    #[error("cost matrix entry ({0}, {1}) is not finite")]
    NonFinite(usize, usize),
}

pub type Result<T> = std::result::Result<T, PlanningError>;

/// Numeric type usable for path and assignment costs.
pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    fn from_count(n: u32) -> Self;
    fn to_f64(self) -> f64;
    fn is_finite(self) -> bool;
    /// Slack below which a reduced cost counts as zero, given the largest
    /// magnitude involved.
    fn tolerance(scale: Self) -> Self;
}

impl Scalar for f64 {
    fn from_count(n: u32) -> Self {
        n as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn tolerance(scale: Self) -> Self {
        1e-9 * (1.0 + scale.abs())
    }
}

impl Scalar for f32 {
    fn from_count(n: u32) -> Self {
        n as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    fn tolerance(scale: Self) -> Self {
        1e-4 * (1.0 + scale.abs())
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: u32) -> Self {
        Ratio::from_integer(n as i64)
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn is_finite(self) -> bool {
        true
    }
    fn tolerance(_: Self) -> Self {
        Ratio::zero()
    }
}

/// Per-cell re-traversal penalty.
///
/// Stores visit counts; the cost of a cell is `increment * visits`, so each
/// visit event adds exactly one increment without accumulated rounding.
#[derive(Clone, Debug)]
pub struct CostMap<S> {
    visits: Vec<u32>,
    increment: S,
}

impl<S: Scalar> CostMap<S> {
    /// Zeroed map with the default increment of 0.05 per visit.
    pub fn new(cells: usize) -> Self {
        Self::with_increment(cells, S::one() / S::from_count(20))
    }

    pub fn with_increment(cells: usize, increment: S) -> Self {
        Self { visits: vec![0; cells], increment }
    }

    pub fn for_graph(g: &GridGraph) -> Self {
        Self::new(g.len())
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn increment(&self) -> S {
        self.increment
    }

    /// Records one visit event at `c`.
    pub fn bump(&mut self, g: &GridGraph, c: Cell) -> Result<()> {
        let i = g.require(c)?;
        self.bump_index(i);
        Ok(())
    }

    #[inline]
    pub fn bump_index(&mut self, index: usize) {
        self.visits[index] += 1;
    }

    #[inline]
    pub fn cost_index(&self, index: usize) -> S {
        self.increment * S::from_count(self.visits[index])
    }

    pub fn cost(&self, g: &GridGraph, c: Cell) -> Result<S> {
        Ok(self.cost_index(g.require(c)?))
    }

    pub fn visits(&self, index: usize) -> u32 {
        self.visits[index]
    }

    pub fn reset(&mut self) {
        self.visits.iter_mut().for_each(|v| *v = 0);
    }

    /// Cost of entering a cell: one step plus its penalty.
    #[inline]
    pub fn entry_cost(&self, index: usize) -> S {
        S::one() + self.cost_index(index)
    }
}

/// Sum over entered cells (all but the first) of `1 + L(cell)`.
pub fn path_cost<S: Scalar>(path: &Curve, g: &GridGraph, cm: &CostMap<S>) -> Result<S> {
    let mut total = S::zero();
    for &c in path.cells().iter().skip(1) {
        total = total + cm.entry_cost(g.require(c)?);
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug)]
struct Frontier<S> {
    f: S,
    h: u32,
    seq: u64,
    node: usize,
}

impl<S: PartialOrd> PartialEq for Frontier<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: PartialOrd> Eq for Frontier<S> {}

impl<S: PartialOrd> PartialOrd for Frontier<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: PartialOrd> Ord for Frontier<S> {
    // Reversed so that BinaryHeap pops the smallest (f, h, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .partial_cmp(&self.f)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.h.cmp(&self.h))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// A* over dense indices. Entering cell `v` costs `1 + L(v)`; the Manhattan
/// heuristic is consistent because every step costs at least one.
pub fn astar_indices<S: Scalar>(
    g: &GridGraph,
    cm: &CostMap<S>,
    start: usize,
    goal: usize,
) -> Option<Vec<usize>> {
    let goal_cell = g.cell(goal);
    let h = |i: usize| g.cell(i).manhattan(goal_cell);
    let n = g.len();
    let mut best: Vec<Option<S>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    best[start] = Some(S::zero());
    heap.push(Frontier { f: S::from_count(h(start)), h: h(start), seq, node: start });
    while let Some(Frontier { node, .. }) = heap.pop() {
        if closed[node] {
            continue;
        }
        closed[node] = true;
        if node == goal {
            let mut path = vec![goal];
            let mut cur = goal;
            while cur != start {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        let g_here = best[node].expect("closed node has a cost");
        for next in g.neighbor_indices(node) {
            if closed[next] {
                continue;
            }
            let tentative = g_here + cm.entry_cost(next);
            if best[next].is_none_or(|b| tentative < b) {
                best[next] = Some(tentative);
                parent[next] = node;
                seq += 1;
                let hn = h(next);
                heap.push(Frontier { f: tentative + S::from_count(hn), h: hn, seq, node: next });
            }
        }
    }
    None
}

/// Cheapest path from `start` to `goal` under `length + sum of penalties`.
pub fn astar<S: Scalar>(g: &GridGraph, cm: &CostMap<S>, start: Cell, goal: Cell) -> Result<Curve> {
    let s = g.require(start)?;
    let t = g.require(goal)?;
    astar_indices(g, cm, s, t)
        .map(|p| Curve::new(p.into_iter().map(|i| g.cell(i)).collect()))
        .ok_or(PlanningError::Unreachable(goal.col, goal.row))
}

/// Weighted single-source costs `start -> every cell` under the same
/// objective as [`astar`]. `None` marks unreachable cells.
pub fn cost_field<S: Scalar>(g: &GridGraph, cm: &CostMap<S>, start: usize) -> Vec<Option<S>> {
    let n = g.len();
    let mut best: Vec<Option<S>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    best[start] = Some(S::zero());
    heap.push(Frontier { f: S::zero(), h: 0, seq, node: start });
    while let Some(Frontier { node, f, .. }) = heap.pop() {
        if closed[node] {
            continue;
        }
        closed[node] = true;
        for next in g.neighbor_indices(node) {
            if closed[next] {
                continue;
            }
            let tentative = f + cm.entry_cost(next);
            if best[next].is_none_or(|b| tentative < b) {
                best[next] = Some(tentative);
                seq += 1;
                heap.push(Frontier { f: tentative, h: 0, seq, node: next });
            }
        }
    }
    best
}

/// Unit-weight distances to a fixed goal.
///
/// Paths are read off by descending the field, taking the first neighbor in
/// N, E, S, W order that is one step closer.
#[derive(Clone, Debug)]
pub struct DistanceField {
    goal: usize,
    dist: Vec<u32>,
}

impl DistanceField {
    pub fn new(g: &GridGraph, goal: usize) -> Self {
        let mut dist = vec![u32::MAX; g.len()];
        let mut queue = VecDeque::with_capacity(g.len());
        dist[goal] = 0;
        queue.push_back(goal);
        while let Some(i) = queue.pop_front() {
            let d = dist[i] + 1;
            for j in g.neighbor_indices(i) {
                if dist[j] == u32::MAX {
                    dist[j] = d;
                    queue.push_back(j);
                }
            }
        }
        Self { goal, dist }
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn distance(&self, from: usize) -> Option<u32> {
        (self.dist[from] != u32::MAX).then_some(self.dist[from])
    }

    /// First move of a shortest path from `from`; `from` itself at the goal.
    pub fn next_step(&self, g: &GridGraph, from: usize) -> Option<usize> {
        let d = self.distance(from)?;
        if d == 0 {
            return Some(from);
        }
        g.neighbor_indices(from).find(|&j| self.dist[j] == d - 1)
    }

    pub fn path_from(&self, g: &GridGraph, from: usize) -> Option<Vec<usize>> {
        self.distance(from)?;
        let mut path = vec![from];
        let mut cur = from;
        while cur != self.goal {
            cur = self.next_step(g, cur)?;
            path.push(cur);
        }
        Some(path)
    }
}

/// Unweighted shortest path (every move costs one).
pub fn dijkstra(g: &GridGraph, start: Cell, goal: Cell) -> Result<Curve> {
    let s = g.require(start)?;
    let t = g.require(goal)?;
    DistanceField::new(g, t)
        .path_from(g, s)
        .map(|p| Curve::new(p.into_iter().map(|i| g.cell(i)).collect()))
        .ok_or(PlanningError::Unreachable(goal.col, goal.row))
}

/// A perfect matching of robots (rows) to targets (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<S> {
    /// `targets[robot]` is the column assigned to that row.
    pub targets: Vec<usize>,
    pub cost: S,
}

/// Minimum-cost perfect matching on a square matrix.
///
/// Among all optimal matchings the lexicographically smallest `targets`
/// vector is returned. After the shortest-augmenting-path phase the dual
/// potentials certify optimality, and a matching is optimal exactly when it
/// uses only zero-reduced-cost entries; the tie-break then picks the
/// smallest such matching greedily row by row.
pub fn hungarian<S: Scalar>(costs: &[Vec<S>]) -> Result<Assignment<S>> {
    let n = costs.len();
    let mut scale = S::zero();
    for (i, row) in costs.iter().enumerate() {
        if row.len() != n {
            return Err(PlanningError::NonSquare);
        }
        for (j, &c) in row.iter().enumerate() {
            if !c.is_finite() {
                return Err(PlanningError::NonFinite(i, j));
            }
            if c < S::zero() {
                return Err(PlanningError::NegativeEntry(i, j));
            }
            if c > scale {
                scale = c;
            }
        }
    }
    if n == 0 {
        return Ok(Assignment { targets: Vec::new(), cost: S::zero() });
    }

    // 1-based potentials; column 0 is the virtual source.
    let mut u = vec![S::zero(); n + 1];
    let mut v = vec![S::zero(); n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<S>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta: Option<S> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = costs[i0 - 1][j - 1] - u[i0] - v[j];
                if minv[j].is_none_or(|m| cur < m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                if delta.is_none_or(|d| minv[j].unwrap() < d) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column always remains");
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else if let Some(m) = minv[j] {
                    minv[j] = Some(m - delta);
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let tol = S::tolerance(scale);
    let tight = |i: usize, j: usize| {
        let r = costs[i][j] - u[i + 1] - v[j + 1];
        r <= tol
    };
    let mut assign = vec![0usize; n];
    let mut col_owner = vec![0usize; n];
    for j in 1..=n {
        assign[owner[j] - 1] = j - 1;
        col_owner[j - 1] = owner[j] - 1;
    }

    for i in 0..n {
        for j in 0..n {
            if j == assign[i] {
                break;
            }
            if !tight(i, j) || col_owner[j] < i {
                continue;
            }
            let mut visited = vec![false; n];
            visited[j] = true;
            let mut chain = Vec::new();
            if reroute(col_owner[j], assign[i], i, &tight, &col_owner, &mut visited, &mut chain) {
                // chain holds (row, new column) from the displaced row onward.
                for &(r, c) in &chain {
                    assign[r] = c;
                    col_owner[c] = r;
                }
                assign[i] = j;
                col_owner[j] = i;
                break;
            }
        }
    }

    let cost = assign
        .iter()
        .enumerate()
        .fold(S::zero(), |acc, (i, &j)| acc + costs[i][j]);
    Ok(Assignment { targets: assign, cost })
}

/// Finds an alternating path of tight entries that moves `row` off its
/// column and frees `target`, touching only rows after `fixed_below`.
fn reroute(
    row: usize,
    target: usize,
    fixed_below: usize,
    tight: &impl Fn(usize, usize) -> bool,
    col_owner: &[usize],
    visited: &mut [bool],
    chain: &mut Vec<(usize, usize)>,
) -> bool {
    for c in 0..col_owner.len() {
        if visited[c] || !tight(row, c) {
            continue;
        }
        if c == target {
            chain.push((row, c));
            return true;
        }
        if col_owner[c] <= fixed_below {
            continue;
        }
        visited[c] = true;
        chain.push((row, c));
        if reroute(col_owner[c], target, fixed_below, tight, col_owner, visited, chain) {
            return true;
        }
        chain.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn cells(path: &Curve) -> Vec<(i32, i32)> {
        path.cells().iter().map(|c| (c.col, c.row)).collect()
    }

    #[test]
    fn bump_increments() {
        let g = GridGraph::block(2, 1);
        let mut cm: CostMap<f64> = CostMap::for_graph(&g);
        let c = Cell::new(0, 0);
        cm.bump(&g, c).unwrap();
        assert_eq!(cm.cost(&g, c).unwrap(), 0.05);
        cm.bump(&g, c).unwrap();
        assert_eq!(cm.cost(&g, c).unwrap(), 0.1);
        assert_eq!(cm.bump(&g, Cell::new(4, 0)), Err(GeometryError::CellOutsideGraph(4, 0).into()));

        let mut exact: CostMap<Rational64> = CostMap::for_graph(&g);
        exact.bump(&g, c).unwrap();
        exact.bump(&g, c).unwrap();
        assert_eq!(exact.cost(&g, c).unwrap(), Rational64::new(1, 10));
    }

    #[test]
    fn corridor_astar() {
        let g = GridGraph::block(10, 1);
        let cm: CostMap<f64> = CostMap::for_graph(&g);
        let p = astar(&g, &cm, Cell::new(0, 0), Cell::new(9, 0)).unwrap();
        assert_eq!(p.len(), 10);
        assert_eq!(path_cost(&p, &g, &cm).unwrap(), 9.0);
        let same = astar(&g, &cm, Cell::new(3, 0), Cell::new(3, 0)).unwrap();
        assert_eq!(cells(&same), vec![(3, 0)]);
        assert_eq!(path_cost(&same, &g, &cm).unwrap(), 0.0);
    }

    #[test]
    fn astar_avoids_expensive_column() {
        let g = GridGraph::block(3, 3);
        let mut cm: CostMap<Rational64> = CostMap::for_graph(&g);
        for row in 0..3 {
            for _ in 0..200 {
                cm.bump(&g, Cell::new(1, row)).unwrap();
            }
        }
        // Every route across must enter the middle column once; the cheapest
        // crosses it exactly once.
        let p = astar(&g, &cm, Cell::new(0, 0), Cell::new(2, 2)).unwrap();
        let middle = p.cells().iter().filter(|c| c.col == 1).count();
        assert_eq!(middle, 1);
        assert_eq!(path_cost(&p, &g, &cm).unwrap(), Rational64::from_integer(14));
    }

    #[test]
    fn dijkstra_lengths() {
        let g = GridGraph::block(5, 5);
        let p = dijkstra(&g, Cell::new(0, 0), Cell::new(4, 4)).unwrap();
        assert_eq!(p.len() - 1, 8);
        let p = dijkstra(&g, Cell::new(2, 2), Cell::new(2, 3)).unwrap();
        assert_eq!(p.len() - 1, 1);
        assert!(matches!(
            dijkstra(&g, Cell::new(0, 0), Cell::new(9, 9)),
            Err(PlanningError::Geometry(_))
        ));
    }

    #[test]
    fn unreachable_goal() {
        let g = GridGraph::from_cells([Cell::new(0, 0), Cell::new(2, 0)]);
        let cm: CostMap<f64> = CostMap::for_graph(&g);
        assert_eq!(
            astar(&g, &cm, Cell::new(0, 0), Cell::new(2, 0)),
            Err(PlanningError::Unreachable(2, 0))
        );
        assert_eq!(
            dijkstra(&g, Cell::new(0, 0), Cell::new(2, 0)),
            Err(PlanningError::Unreachable(2, 0))
        );
    }

    #[test]
    fn path_cost_examples() {
        let g = GridGraph::block(3, 1);
        let mut cm: CostMap<Rational64> = CostMap::for_graph(&g);
        let single = Curve::new(vec![Cell::new(0, 0)]);
        assert_eq!(path_cost(&single, &g, &cm).unwrap(), Rational64::zero());
        let three = Curve::new(vec![Cell::new(0, 0), Cell::new(1, 0), Cell::new(2, 0)]);
        assert_eq!(path_cost(&three, &g, &cm).unwrap(), Rational64::from_integer(2));
        cm.bump(&g, Cell::new(1, 0)).unwrap();
        cm.bump(&g, Cell::new(2, 0)).unwrap();
        assert_eq!(path_cost(&three, &g, &cm).unwrap(), Rational64::new(21, 10));
    }

    #[test]
    fn hungarian_small() {
        let a = hungarian(&[vec![0.0]]).unwrap();
        assert_eq!(a.targets, vec![0]);
        assert_eq!(a.cost, 0.0);
        let a = hungarian(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(a.targets, vec![0, 1]);
        assert_eq!(a.cost, 2.0);
        let a = hungarian::<f64>(&[]).unwrap();
        assert!(a.targets.is_empty());
    }

    #[test]
    fn hungarian_ties_pick_smallest_permutation() {
        let a = hungarian(&[vec![1.0; 3], vec![1.0; 3], vec![1.0; 3]]).unwrap();
        assert_eq!(a.targets, vec![0, 1, 2]);
        let a = hungarian(&[vec![2.0, 1.0, 1.0], vec![1.0, 1.0, 2.0], vec![1.0, 2.0, 1.0]]).unwrap();
        assert_eq!(a.targets, vec![1, 0, 2]);
    }

    #[test]
    fn hungarian_errors() {
        assert_eq!(hungarian(&[vec![1.0, 2.0]]), Err(PlanningError::NonSquare));
        assert_eq!(
            hungarian(&[vec![1.0, -2.0], vec![0.0, 0.0]]),
            Err(PlanningError::NegativeEntry(0, 1))
        );
        assert_eq!(
            hungarian(&[vec![1.0, f64::NAN], vec![0.0, 0.0]]),
            Err(PlanningError::NonFinite(0, 1))
        );
    }
}
