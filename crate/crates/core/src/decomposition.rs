//! Rectangulation of a grid graph into disjoint axis-aligned rectangles,
//! junction extraction, and proportional robot allocation.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Cell, GridGraph, Point};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecompositionError {
    #[error("{robots} robots cannot cover {rects} rectangles")]
    TooFewRobots { robots: usize, rects: usize },
}

pub type Result<T> = std::result::Result<T, DecompositionError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Rectangle {
    /// Minimum column and row.
    pub anchor: Cell,
    pub width: u32,
    pub height: u32,
}

impl Rectangle {
    pub fn new(anchor: Cell, width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "rectangles are at least one cell");
        Self { anchor, width, height }
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.col >= self.anchor.col
            && c.row >= self.anchor.row
            && c.col < self.anchor.col + self.width as i32
            && c.row < self.anchor.row + self.height as i32
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32).flat_map(move |r| {
            (0..self.width as i32).map(move |c| Cell::new(self.anchor.col + c, self.anchor.row + r))
        })
    }

    fn col_end(&self) -> i32 {
        self.anchor.col + self.width as i32
    }

    fn row_end(&self) -> i32 {
        self.anchor.row + self.height as i32
    }
}

/// A maximal shared boundary segment between rectangles `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Junction {
    pub a: usize,
    pub b: usize,
    /// Segment endpoints on the lattice.
    pub from: Point,
    pub to: Point,
    /// `(cell in a, adjacent cell in b)` along the segment, in increasing
    /// coordinate order.
    pub pairs: Vec<(Cell, Cell)>,
}

impl Junction {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Middle straddle pair.
    pub fn middle(&self) -> (Cell, Cell) {
        self.pairs[self.pairs.len() / 2]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Rectangulation {
    pub rects: Vec<Rectangle>,
    pub junctions: Vec<Junction>,
}

impl Rectangulation {
    /// Checks disjointness and exact coverage of `g`. Returns the owning
    /// rectangle of every cell, indexed like `g`.
    pub fn owners(&self, g: &GridGraph) -> Option<Vec<usize>> {
        let mut owner = vec![usize::MAX; g.len()];
        for (i, r) in self.rects.iter().enumerate() {
            for c in r.cells() {
                let idx = g.index_of(c)?;
                if owner[idx] != usize::MAX {
                    return None;
                }
                owner[idx] = i;
            }
        }
        owner.iter().all(|&o| o != usize::MAX).then_some(owner)
    }

    pub fn areas(&self) -> Vec<u64> {
        self.rects.iter().map(Rectangle::area).collect()
    }
}

/// Greedy random rectangulation: repeatedly picks a uniformly random
/// uncovered cell and claims the largest rectangle of uncovered cells that
/// contains it.
pub fn rectangulate(g: &GridGraph, seed: u64) -> Rectangulation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cols, rows) = g.bounds();
    let mut free = FreeMask::new(cols as usize, rows as usize);
    for &c in g.cells() {
        free.set(c, true);
    }
    let mut uncovered: Vec<Cell> = g.cells().to_vec();
    let mut rects = Vec::new();
    while !uncovered.is_empty() {
        let seed_cell = uncovered[rng.gen_range(0..uncovered.len())];
        let rect = free.largest_rectangle(seed_cell);
        for c in rect.cells() {
            free.set(c, false);
        }
        uncovered.retain(|&c| !rect.contains(c));
        rects.push(rect);
    }
    let junctions = junctions(&rects);
    Rectangulation { rects, junctions }
}

/// Runs [`rectangulate`] with seeds `seed, seed+1, ...` and keeps the one
/// with the fewest rectangles (earliest seed on ties).
pub fn rectangulate_best_of(g: &GridGraph, seed: u64, attempts: u32) -> Rectangulation {
    (0..attempts.max(1) as u64)
        .map(|i| rectangulate(g, seed.wrapping_add(i)))
        .min_by_key(|r| r.rects.len())
        .expect("at least one attempt")
}

struct FreeMask {
    cols: usize,
    rows: usize,
    bits: Vec<bool>,
}

impl FreeMask {
    fn new(cols: usize, rows: usize) -> Self {
        Self { cols, rows, bits: vec![false; cols * rows] }
    }

    fn set(&mut self, c: Cell, v: bool) {
        self.bits[c.row as usize * self.cols + c.col as usize] = v;
    }

    fn get(&self, col: i64, row: i64) -> bool {
        col >= 0
            && row >= 0
            && (col as usize) < self.cols
            && (row as usize) < self.rows
            && self.bits[row as usize * self.cols + col as usize]
    }

    /// Largest free rectangle containing `c`; ties prefer the wider one,
    /// then the smaller anchor in row-major order.
    fn largest_rectangle(&self, c: Cell) -> Rectangle {
        let (col, row) = (c.col as i64, c.row as i64);
        debug_assert!(self.get(col, row));
        let mut lo = row;
        while self.get(col, lo - 1) {
            lo -= 1;
        }
        let mut hi = row;
        while self.get(col, hi + 1) {
            hi += 1;
        }
        let span = (hi - lo + 1) as usize;
        let mut left = vec![0i64; span];
        let mut right = vec![0i64; span];
        for (k, y) in (lo..=hi).enumerate() {
            let mut l = 0;
            while self.get(col - l - 1, y) {
                l += 1;
            }
            let mut r = 0;
            while self.get(col + r + 1, y) {
                r += 1;
            }
            left[k] = l;
            right[k] = r;
        }
        let pivot = (row - lo) as usize;
        // Running minima outward from the seed row.
        let mut down = vec![(0i64, 0i64); pivot + 1];
        let (mut ml, mut mr) = (i64::MAX, i64::MAX);
        for k in (0..=pivot).rev() {
            ml = ml.min(left[k]);
            mr = mr.min(right[k]);
            down[k] = (ml, mr);
        }
        let mut up = vec![(0i64, 0i64); span];
        let (mut ml, mut mr) = (i64::MAX, i64::MAX);
        for k in pivot..span {
            ml = ml.min(left[k]);
            mr = mr.min(right[k]);
            up[k] = (ml, mr);
        }

        let mut best: Option<(u64, u32, i64, i64, u32)> = None;
        for (bottom, &(dl, dr)) in down.iter().enumerate().take(pivot + 1) {
            for (top, &(ul, ur)) in up.iter().enumerate().skip(pivot) {
                let l = dl.min(ul);
                let r = dr.min(ur);
                let width = (l + r + 1) as u32;
                let height = (top - bottom + 1) as u32;
                let area = width as u64 * height as u64;
                let anchor_row = lo + bottom as i64;
                let anchor_col = col - l;
                let cand = (area, width, anchor_row, anchor_col, height);
                let better = match &best {
                    None => true,
                    Some(b) => {
                        cand.0
                            .cmp(&b.0)
                            .then(cand.1.cmp(&b.1))
                            .then(b.2.cmp(&cand.2))
                            .then(b.3.cmp(&cand.3))
                            == Ordering::Greater
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (_, width, ar, ac, height) = best.expect("seed cell is free");
        Rectangle::new(Cell::new(ac as i32, ar as i32), width, height)
    }
}

/// All maximal shared segments between rectangle pairs, ordered by `(a, b)`.
pub fn junctions(rects: &[Rectangle]) -> Vec<Junction> {
    let mut out = Vec::new();
    for a in 0..rects.len() {
        for b in a + 1..rects.len() {
            if let Some(j) = shared_segment(a, &rects[a], b, &rects[b]) {
                out.push(j);
            }
        }
    }
    out
}

fn shared_segment(ia: usize, a: &Rectangle, ib: usize, b: &Rectangle) -> Option<Junction> {
    let vertical = |x: i32, a_left_of_b: bool| {
        let lo = a.anchor.row.max(b.anchor.row);
        let hi = a.row_end().min(b.row_end());
        (lo < hi).then(|| {
            let (ca, cb) = if a_left_of_b { (x - 1, x) } else { (x, x - 1) };
            Junction {
                a: ia,
                b: ib,
                from: Point::new(x as i64, lo as i64),
                to: Point::new(x as i64, hi as i64),
                pairs: (lo..hi).map(|r| (Cell::new(ca, r), Cell::new(cb, r))).collect(),
            }
        })
    };
    let horizontal = |y: i32, a_below_b: bool| {
        let lo = a.anchor.col.max(b.anchor.col);
        let hi = a.col_end().min(b.col_end());
        (lo < hi).then(|| {
            let (ra, rb) = if a_below_b { (y - 1, y) } else { (y, y - 1) };
            Junction {
                a: ia,
                b: ib,
                from: Point::new(lo as i64, y as i64),
                to: Point::new(hi as i64, y as i64),
                pairs: (lo..hi).map(|c| (Cell::new(c, ra), Cell::new(c, rb))).collect(),
            }
        })
    };
    if a.col_end() == b.anchor.col {
        vertical(b.anchor.col, true)
    } else if b.col_end() == a.anchor.col {
        vertical(a.anchor.col, false)
    } else if a.row_end() == b.anchor.row {
        horizontal(b.anchor.row, true)
    } else if b.row_end() == a.anchor.row {
        horizontal(a.anchor.row, false)
    } else {
        None
    }
}

/// Splits `robots` among rectangles in proportion to area, at least one each.
///
/// Starts from `max(1, floor(quota))`, then removes robots from the most
/// over-served rectangles or adds them to the most under-served ones
/// (largest remainder) until the total matches.
pub fn allocate_robots(areas: &[u64], robots: usize) -> Result<Vec<usize>> {
    let m = areas.len();
    if robots < m || m == 0 {
        return Err(DecompositionError::TooFewRobots { robots, rects: m });
    }
    let total: i128 = areas.iter().map(|&a| a as i128).sum();
    let k = robots as i128;
    let mut counts: Vec<i128> = areas
        .iter()
        .map(|&a| ((k * a as i128) / total).max(1))
        .collect();
    // surplus_i = (count_i - quota_i) * total
    let surplus = |i: usize, counts: &[i128]| counts[i] * total - k * areas[i] as i128;
    let mut sum: i128 = counts.iter().sum();
    while sum > k {
        let i = (0..m)
            .filter(|&i| counts[i] > 1)
            .max_by(|&x, &y| {
                surplus(x, &counts)
                    .cmp(&surplus(y, &counts))
                    .then(areas[y].cmp(&areas[x]))
                    .then(x.cmp(&y))
            })
            .expect("sum exceeds the floor of one per rectangle");
        counts[i] -= 1;
        sum -= 1;
    }
    while sum < k {
        let i = (0..m)
            .max_by(|&x, &y| {
                surplus(y, &counts)
                    .cmp(&surplus(x, &counts))
                    .then(areas[x].cmp(&areas[y]))
                    .then(y.cmp(&x))
            })
            .expect("non-empty");
        counts[i] += 1;
        sum += 1;
    }
    Ok(counts.into_iter().map(|c| c as usize).collect())
}
