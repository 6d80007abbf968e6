//! Generalized Hilbert ("gilbert") curves on arbitrary rectangles and the
//! patrol segments robots walk along them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::Rectangle;
use crate::geometry::{Cell, GridGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SfcError {
    #[error("curve spans {curve_w}x{curve_h} cells but the rectangle is {rect_w}x{rect_h}")]
    DimensionMismatch { curve_w: u32, curve_h: u32, rect_w: u32, rect_h: u32 },
    #[error("cannot split a curve of {len} cells among {count} robots")]
    TooManyRobots { len: usize, count: usize },
    #[error("no in-graph detour for the diagonal step at index {0}")]
    RepairBlocked(usize),
}

pub type Result<T> = std::result::Result<T, SfcError>;

/// An ordered cell sequence: a patrol curve or a planned path.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curve {
    cells: Vec<Cell>,
}

impl Curve {
    pub fn new(cells: Vec<Cell>) -> Self {
        Self { cells }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<Cell> {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Consecutive pairs.
    pub fn steps(&self) -> impl Iterator<Item = (Cell, Cell)> + '_ {
        self.cells.windows(2).map(|w| (w[0], w[1]))
    }

    /// Every step moves one unit horizontally or vertically.
    pub fn is_unit_step(&self) -> bool {
        self.steps().all(|(a, b)| a.manhattan(b) == 1)
    }

    pub fn diagonal_steps(&self) -> usize {
        self.steps().filter(|(a, b)| a.manhattan(*b) == 2 && a.chebyshev(*b) == 1).count()
    }
}

/// Visits all `width * height` cells of `[0, width) x [0, height)` once,
/// starting at the origin.
///
/// The rectangle is split recursively: a long rectangle is halved along its
/// major axis, otherwise it is cut into an "up" part, a long "right" part and
/// a "down" part, until a single row or column remains. Odd sizes can force
/// one diagonal step.
pub fn gilbert_curve(width: u32, height: u32) -> Curve {
    let mut cells = Vec::with_capacity(width as usize * height as usize);
    if width == 0 || height == 0 {
        return Curve::new(cells);
    }
    let (w, h) = (width as i64, height as i64);
    if w >= h {
        gilbert(&mut cells, 0, 0, w, 0, 0, h);
    } else {
        gilbert(&mut cells, 0, 0, 0, h, w, 0);
    }
    Curve::new(cells)
}

/// `(ax, ay)` is the major axis vector and `(bx, by)` the minor one.
fn gilbert(out: &mut Vec<Cell>, x: i64, y: i64, ax: i64, ay: i64, bx: i64, by: i64) {
    let w = (ax + ay).abs();
    let h = (bx + by).abs();
    let (dax, day) = (ax.signum(), ay.signum());
    let (dbx, dby) = (bx.signum(), by.signum());

    if h == 1 {
        for i in 0..w {
            out.push(Cell::new((x + i * dax) as i32, (y + i * day) as i32));
        }
        return;
    }
    if w == 1 {
        for i in 0..h {
            out.push(Cell::new((x + i * dbx) as i32, (y + i * dby) as i32));
        }
        return;
    }

    let (mut ax2, mut ay2) = (ax / 2, ay / 2);
    let (mut bx2, mut by2) = (bx / 2, by / 2);
    let w2 = (ax2 + ay2).abs();
    let h2 = (bx2 + by2).abs();

    if 2 * w > 3 * h {
        // Long rectangle: two halves along the major axis.
        if w2 % 2 != 0 && w > 2 {
            ax2 += dax;
            ay2 += day;
        }
        gilbert(out, x, y, ax2, ay2, bx, by);
        gilbert(out, x + ax2, y + ay2, ax - ax2, ay - ay2, bx, by);
    } else {
        if h2 % 2 != 0 && h > 2 {
            bx2 += dbx;
            by2 += dby;
        }
        gilbert(out, x, y, bx2, by2, ax2, ay2);
        gilbert(out, x + bx2, y + by2, ax, ay, bx - bx2, by - by2);
        gilbert(
            out,
            x + (ax - dax) + (bx2 - dbx),
            y + (ay - day) + (by2 - dby),
            -bx2,
            -by2,
            -(ax - ax2),
            -(ay - ay2),
        );
    }
}

/// Replaces each diagonal step with an L-shaped detour through an in-graph
/// corner, horizontal leg first when possible.
pub fn repair_curve(curve: &Curve, g: &GridGraph) -> Result<Curve> {
    let mut out = Vec::with_capacity(curve.len() + 4);
    for (i, &c) in curve.cells().iter().enumerate() {
        if let Some(&prev) = out.last() {
            let prev: Cell = prev;
            if prev.manhattan(c) == 2 && prev.chebyshev(c) == 1 {
                let horizontal_first = Cell::new(c.col, prev.row);
                let vertical_first = Cell::new(prev.col, c.row);
                if g.contains(horizontal_first) {
                    out.push(horizontal_first);
                } else if g.contains(vertical_first) {
                    out.push(vertical_first);
                } else {
                    return Err(SfcError::RepairBlocked(i));
                }
            }
        }
        out.push(c);
    }
    Ok(Curve::new(out))
}

/// Translates a curve built on `[0, w) x [0, h)` onto the rectangle.
pub fn place_curve(rect: &Rectangle, curve: &Curve) -> Result<Curve> {
    let max_col = curve.cells().iter().map(|c| c.col).max().unwrap_or(0);
    let max_row = curve.cells().iter().map(|c| c.row).max().unwrap_or(0);
    let min_col = curve.cells().iter().map(|c| c.col).min().unwrap_or(0);
    let min_row = curve.cells().iter().map(|c| c.row).min().unwrap_or(0);
    let fits = min_col >= 0
        && min_row >= 0
        && (max_col as u32) < rect.width
        && (max_row as u32) < rect.height;
    if !fits {
        return Err(SfcError::DimensionMismatch {
            curve_w: (max_col - min_col + 1).max(0) as u32,
            curve_h: (max_row - min_row + 1).max(0) as u32,
            rect_w: rect.width,
            rect_h: rect.height,
        });
    }
    Ok(Curve::new(
        curve
            .cells()
            .iter()
            .map(|c| Cell::new(c.col + rect.anchor.col, c.row + rect.anchor.row))
            .collect(),
    ))
}

/// The repaired curve covering `rect`, in absolute coordinates.
pub fn rectangle_patrol(rect: &Rectangle) -> Curve {
    let raw = gilbert_curve(rect.width, rect.height);
    let local = GridGraph::block(rect.width, rect.height);
    let repaired = repair_curve(&raw, &local).expect("a full block always admits the detour");
    place_curve(rect, &repaired).expect("curve built for this rectangle")
}

/// Evenly spaced start indices: robot `i` starts at `floor(i * len / count)`.
pub fn assign_segments(curve: &Curve, count: usize) -> Result<Vec<usize>> {
    let len = curve.len();
    if count == 0 || count > len {
        return Err(SfcError::TooManyRobots { len, count });
    }
    Ok((0..count).map(|i| i * len / count).collect())
}

/// A contiguous index range `[start, end]` of a curve that one robot walks
/// back and forth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Steps for one forward-and-back sweep.
    pub fn period(&self) -> usize {
        2 * (self.len() - 1)
    }
}

/// Turns start indices into inclusive segments: each robot runs to the cell
/// before its successor's start, the last one to the end of the curve.
pub fn segments(curve: &Curve, count: usize) -> Result<Vec<Segment>> {
    let starts = assign_segments(curve, count)?;
    Ok(starts
        .iter()
        .enumerate()
        .map(|(i, &s)| Segment {
            start: s,
            end: starts.get(i + 1).map_or(curve.len() - 1, |&n| n - 1),
        })
        .collect())
}
