//! Orthogonal polygons on the integer lattice and their grid graphs.
//!
//! Coordinates are in cell units: one lattice step is one cell side. A cell
//! `(col, row)` is the unit square `[col, col+1] x [row, row+1]`, and robots
//! sit at its center. Rows grow northwards.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("polygon needs at least 4 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("edge {0} is neither horizontal nor vertical")]
    NonOrthogonalEdge(usize),
    #[error("edge {0} has zero length")]
    DegenerateEdge(usize),
    #[error("orthogonal polygons have an even vertex count, got {0}")]
    OddVertexCount(usize),
    #[error("edges {0} and {1} are both horizontal or both vertical")]
    CollinearEdges(usize, usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersection(usize, usize),
    #[error("vertex {0} is not on the integer lattice")]
    NonIntegralVertex(usize),
    #[error("no cell lies inside the polygon")]
    EmptyInterior,
    #[error("grid graph is not connected")]
    Disconnected,
    #[error("cell ({0}, {1}) is not in the grid graph")]
    CellOutsideGraph(i32, i32),
    #[error("polygon file: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// A lattice point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

impl From<[i64; 2]> for Point {
    fn from([x, y]: [i64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [i64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl From<(i64, i64)> for Point {
    fn from((x, y): (i64, i64)) -> Self {
        Self { x, y }
    }
}

/// Index of a unit pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub col: i32,
    pub row: i32,
}

impl Cell {
    pub const fn new(col: i32, row: i32) -> Self {
        Self { col, row }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }

    pub fn chebyshev(self, other: Cell) -> u32 {
        self.col.abs_diff(other.col).max(self.row.abs_diff(other.row))
    }

    /// Neighbors in N, E, S, W order, regardless of membership.
    pub fn around(self) -> [Cell; 4] {
        [
            Cell::new(self.col, self.row + 1),
            Cell::new(self.col + 1, self.row),
            Cell::new(self.col, self.row - 1),
            Cell::new(self.col - 1, self.row),
        ]
    }
}

impl From<[i32; 2]> for Cell {
    fn from([col, row]: [i32; 2]) -> Self {
        Self { col, row }
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.col, c.row]
    }
}

impl From<(i32, i32)> for Cell {
    fn from((col, row): (i32, i32)) -> Self {
        Self { col, row }
    }
}

/// An axis-parallel edge between two consecutive vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: Point,
    pub to: Point,
}

impl Edge {
    pub fn is_horizontal(&self) -> bool {
        self.from.y == self.to.y
    }

    pub fn length(&self) -> i64 {
        (self.to.x - self.from.x).abs() + (self.to.y - self.from.y).abs()
    }

    pub fn x_range(&self) -> (i64, i64) {
        (self.from.x.min(self.to.x), self.from.x.max(self.to.x))
    }

    pub fn y_range(&self) -> (i64, i64) {
        (self.from.y.min(self.to.y), self.from.y.max(self.to.y))
    }

    /// Unit direction vector.
    pub fn direction(&self) -> (i64, i64) {
        ((self.to.x - self.from.x).signum(), (self.to.y - self.from.y).signum())
    }

    fn intersects(&self, other: &Edge) -> bool {
        let (ax0, ax1) = self.x_range();
        let (ay0, ay1) = self.y_range();
        let (bx0, bx1) = other.x_range();
        let (by0, by1) = other.y_range();
        ax0 <= bx1 && bx0 <= ax1 && ay0 <= by1 && by0 <= ay1
    }
}

/// A simple orthogonal polygon with counter-clockwise integer vertices,
/// translated so that its bounding box starts at the origin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrthoPolygon {
    vertices: Vec<Point>,
}

impl OrthoPolygon {
    /// Validates and normalizes a vertex list. A repeated closing vertex is
    /// dropped, clockwise input is reversed, and the result is translated to
    /// the origin and starts at its lowest-leftmost vertex.
    pub fn new<P: Into<Point> + Copy>(points: &[P]) -> Result<Self> {
        let mut pts: Vec<Point> = points.iter().map(|&p| p.into()).collect();
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        let n = pts.len();
        if n < 2 {
            return Err(GeometryError::TooFewVertices(n));
        }
        let edges: Vec<Edge> = (0..n)
            .map(|i| Edge { from: pts[i], to: pts[(i + 1) % n] })
            .collect();
        for (i, e) in edges.iter().enumerate() {
            if e.from == e.to {
                return Err(GeometryError::DegenerateEdge(i));
            }
            if e.from.x != e.to.x && e.from.y != e.to.y {
                return Err(GeometryError::NonOrthogonalEdge(i));
            }
        }
        if n < 4 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if n % 2 == 1 {
            return Err(GeometryError::OddVertexCount(n));
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if edges[i].is_horizontal() == edges[j].is_horizontal() {
                return Err(GeometryError::CollinearEdges(i, j));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Perpendicular neighbours only meet at the shared vertex.
                    continue;
                }
                if edges[i].intersects(&edges[j]) {
                    return Err(GeometryError::SelfIntersection(i, j));
                }
            }
        }
        if twice_signed_area(&pts) < 0 {
            pts.reverse();
        }
        let min_x = pts.iter().map(|p| p.x).min().unwrap_or(0);
        let min_y = pts.iter().map(|p| p.y).min().unwrap_or(0);
        for p in &mut pts {
            p.x -= min_x;
            p.y -= min_y;
        }
        let first = (0..n).min_by_key(|&i| (pts[i].y, pts[i].x)).unwrap_or(0);
        pts.rotate_left(first);
        Ok(Self { vertices: pts })
    }

    /// Axis-aligned rectangle `[0, width] x [0, height]`.
    pub fn rectangle(width: i64, height: i64) -> Result<Self> {
        Self::new(&[(0, 0), (width, 0), (width, height), (0, height)])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Edge { from: self.vertices[i], to: self.vertices[(i + 1) % n] })
    }

    /// Enclosed area in cells (shoelace).
    pub fn area(&self) -> i64 {
        twice_signed_area(&self.vertices) / 2
    }

    /// Length of the shortest boundary edge.
    pub fn shortest_edge(&self) -> i64 {
        self.edges().map(|e| e.length()).min().unwrap_or(0)
    }

    /// `(width, height)` of the bounding box.
    pub fn bounds(&self) -> (i64, i64) {
        let w = self.vertices.iter().map(|p| p.x).max().unwrap_or(0);
        let h = self.vertices.iter().map(|p| p.y).max().unwrap_or(0);
        (w, h)
    }

    /// Whether vertex `i` is convex (interior angle 90 degrees).
    pub fn is_convex(&self, i: usize) -> bool {
        let n = self.vertices.len();
        let prev = self.vertices[(i + n - 1) % n];
        let cur = self.vertices[i];
        let next = self.vertices[(i + 1) % n];
        let cross = (cur.x - prev.x) * (next.y - cur.y) - (cur.y - prev.y) * (next.x - cur.x);
        cross > 0
    }

    /// Scales every coordinate by `factor`.
    pub fn scaled(&self, factor: i64) -> Result<Self> {
        let pts: Vec<Point> = self
            .vertices
            .iter()
            .map(|p| Point::new(p.x * factor, p.y * factor))
            .collect();
        Self::new(&pts)
    }
}

fn twice_signed_area(pts: &[Point]) -> i64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum()
}

/// On-disk polygon: `{"vertices": [[x, y], ...], "cell_size_m": 5.0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonFile {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default = "default_cell_size")]
    pub cell_size_m: f64,
}

fn default_cell_size() -> f64 {
    5.0
}

impl PolygonFile {
    pub fn from_polygon(poly: &OrthoPolygon, cell_size_m: f64) -> Self {
        Self {
            vertices: poly.vertices().iter().map(|p| [p.x as f64, p.y as f64]).collect(),
            cell_size_m,
        }
    }

    /// Rejects non-integral coordinates rather than snapping them.
    pub fn to_polygon(&self) -> Result<OrthoPolygon> {
        let mut pts = Vec::with_capacity(self.vertices.len());
        for (i, [x, y]) in self.vertices.iter().enumerate() {
            if x.fract() != 0.0 || y.fract() != 0.0 || !x.is_finite() || !y.is_finite() {
                return Err(GeometryError::NonIntegralVertex(i));
            }
            pts.push(Point::new(*x as i64, *y as i64));
        }
        OrthoPolygon::new(&pts)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| GeometryError::Io(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string(self).map_err(|e| GeometryError::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| GeometryError::Io(e.to_string()))
    }
}

pub(crate) const NO_CELL: u32 = u32::MAX;

/// Interior cells of a polygon with implicit 4-adjacency.
///
/// Cells are numbered densely in row-major order (row, then col); the dense
/// index is what the planners and simulator work with.
#[derive(Clone, Debug)]
pub struct GridGraph {
    cols: u32,
    rows: u32,
    lookup: Vec<u32>,
    cells: Vec<Cell>,
    adjacency: Vec<[u32; 4]>,
}

impl GridGraph {
    /// Builds a graph from an arbitrary cell set (used for sub-regions and tests).
    pub fn from_cells(cells: impl IntoIterator<Item = Cell>) -> Self {
        let mut cells: Vec<Cell> = cells.into_iter().collect();
        cells.sort_by_key(|c| (c.row, c.col));
        cells.dedup();
        assert!(
            cells.iter().all(|c| c.col >= 0 && c.row >= 0),
            "cells must have non-negative coordinates"
        );
        let cols = cells.iter().map(|c| c.col as u32 + 1).max().unwrap_or(0);
        let rows = cells.iter().map(|c| c.row as u32 + 1).max().unwrap_or(0);
        let mut lookup = vec![NO_CELL; cols as usize * rows as usize];
        for (i, c) in cells.iter().enumerate() {
            lookup[c.row as usize * cols as usize + c.col as usize] = i as u32;
        }
        let mut g = Self { cols, rows, lookup, cells, adjacency: Vec::new() };
        g.adjacency = g
            .cells
            .iter()
            .map(|c| c.around().map(|n| g.raw_index(n)))
            .collect();
        g
    }

    /// A full `width x height` block anchored at the origin.
    pub fn block(width: u32, height: u32) -> Self {
        Self::from_cells(
            (0..height as i32).flat_map(|r| (0..width as i32).map(move |c| Cell::new(c, r))),
        )
    }

    fn raw_index(&self, c: Cell) -> u32 {
        if c.col < 0 || c.row < 0 || c.col as u32 >= self.cols || c.row as u32 >= self.rows {
            return NO_CELL;
        }
        self.lookup[c.row as usize * self.cols as usize + c.col as usize]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `(n_cols, n_rows)` of the bounding grid.
    pub fn bounds(&self) -> (u32, u32) {
        (self.cols, self.rows)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> Cell {
        self.cells[index]
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.raw_index(c) != NO_CELL
    }

    pub fn index_of(&self, c: Cell) -> Option<usize> {
        match self.raw_index(c) {
            NO_CELL => None,
            i => Some(i as usize),
        }
    }

    pub(crate) fn require(&self, c: Cell) -> Result<usize> {
        self.index_of(c).ok_or(GeometryError::CellOutsideGraph(c.col, c.row))
    }

    /// Member neighbors of `c` in N, E, S, W order.
    pub fn neighbors(&self, c: Cell) -> Result<Vec<Cell>> {
        let i = self.require(c)?;
        Ok(self.neighbor_indices(i).map(|j| self.cells[j]).collect())
    }

    /// Dense indices of member neighbors in N, E, S, W order.
    #[inline]
    pub fn neighbor_indices(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[index]
            .iter()
            .filter(|&&j| j != NO_CELL)
            .map(|&j| j as usize)
    }

    /// Raw N, E, S, W slots; absent neighbors are `None`.
    pub fn neighbor_slots(&self, index: usize) -> [Option<usize>; 4] {
        self.adjacency[index].map(|j| (j != NO_CELL).then_some(j as usize))
    }

    pub fn is_connected(&self) -> bool {
        if self.cells.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for j in self.neighbor_indices(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.cells.len()
    }
}

/// Selects the cells whose centers see an odd number of boundary crossings
/// along all four axis rays.
///
/// Centers sit on half-integers and edges on integers, so a ray never meets a
/// vertex and the crossing counts are unambiguous.
pub fn rasterize(poly: &OrthoPolygon) -> Result<GridGraph> {
    let (w, h) = poly.bounds();
    // Per row: x of every vertical edge spanning that row. Per column: y of
    // every horizontal edge spanning that column.
    let mut row_cross: Vec<Vec<i64>> = vec![Vec::new(); h as usize];
    let mut col_cross: Vec<Vec<i64>> = vec![Vec::new(); w as usize];
    for e in poly.edges() {
        if e.is_horizontal() {
            let (x0, x1) = e.x_range();
            for col in x0..x1 {
                col_cross[col as usize].push(e.from.y);
            }
        } else {
            let (y0, y1) = e.y_range();
            for row in y0..y1 {
                row_cross[row as usize].push(e.from.x);
            }
        }
    }
    row_cross.iter_mut().for_each(|v| v.sort_unstable());
    col_cross.iter_mut().for_each(|v| v.sort_unstable());

    let mut cells = Vec::new();
    for row in 0..h {
        let xs = &row_cross[row as usize];
        for col in 0..w {
            // Crossings strictly west of the center are edges with x <= col.
            let west = xs.partition_point(|&x| x <= col);
            let east = xs.len() - west;
            if west % 2 == 0 || east.is_multiple_of(2) {
                continue;
            }
            let ys = &col_cross[col as usize];
            let south = ys.partition_point(|&y| y <= row);
            let north = ys.len() - south;
            if south % 2 == 1 && north % 2 == 1 {
                cells.push(Cell::new(col as i32, row as i32));
            }
        }
    }
    if cells.is_empty() {
        return Err(GeometryError::EmptyInterior);
    }
    let g = GridGraph::from_cells(cells);
    if !g.is_connected() {
        return Err(GeometryError::Disconnected);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_shape() -> OrthoPolygon {
        OrthoPolygon::new(&[(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn unit_square_is_valid() {
        let p = OrthoPolygon::new(&[(0, 0), (1, 0), (1, 1), (0, 1)]).unwrap();
        assert_eq!(p.vertex_count(), 4);
        assert_eq!(p.area(), 1);
    }

    #[test]
    fn l_shape_is_valid() {
        let p = l_shape();
        assert_eq!(p.vertex_count(), 6);
        assert_eq!(p.area(), 3);
    }

    #[test]
    fn diagonal_edge_rejected() {
        assert_eq!(
            OrthoPolygon::new(&[(0, 0), (1, 1), (0, 1)]),
            Err(GeometryError::NonOrthogonalEdge(0))
        );
    }

    #[test]
    fn degenerate_and_collinear_rejected() {
        assert!(matches!(
            OrthoPolygon::new(&[(0, 0), (0, 0), (1, 0), (1, 1), (0, 1)]),
            Err(GeometryError::DegenerateEdge(0))
        ));
        assert!(matches!(
            OrthoPolygon::new(&[(0, 0), (1, 0), (2, 0), (2, 1), (0, 1), (0, 1)]),
            Err(GeometryError::DegenerateEdge(_))
        ));
        assert!(matches!(
            OrthoPolygon::new(&[(0, 0), (1, 0), (2, 0), (2, 1), (0, 1)]),
            Err(GeometryError::OddVertexCount(5))
        ));
        assert!(matches!(
            OrthoPolygon::new(&[(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (0, 1)]),
            Err(GeometryError::CollinearEdges(..))
        ));
    }

    #[test]
    fn self_intersection_rejected() {
        // Two rectangles joined through a crossing bow-tie.
        let pts = [(0, 0), (2, 0), (2, 2), (1, 2), (1, -1), (3, -1), (3, 1), (0, 1)];
        assert!(matches!(OrthoPolygon::new(&pts), Err(GeometryError::SelfIntersection(..))));
        // Touching at a vertex is also not simple.
        let pts = [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (1, 2), (1, 1), (0, 1)];
        assert!(matches!(OrthoPolygon::new(&pts), Err(GeometryError::SelfIntersection(..))));
    }

    #[test]
    fn clockwise_input_is_reoriented_and_translated() {
        let p = OrthoPolygon::new(&[(5, 5), (5, 7), (8, 7), (8, 5)]).unwrap();
        assert_eq!(p.vertices()[0], Point::new(0, 0));
        assert_eq!(p.area(), 6);
        assert!((0..4).all(|i| p.is_convex(i)));
    }

    #[test]
    fn rasterize_small_cases() {
        let sq = OrthoPolygon::rectangle(1, 1).unwrap();
        assert_eq!(rasterize(&sq).unwrap().cells(), &[Cell::new(0, 0)]);
        let g = rasterize(&l_shape()).unwrap();
        assert_eq!(g.cells(), &[Cell::new(0, 0), Cell::new(1, 0), Cell::new(0, 1)]);
    }

    #[test]
    fn neighbor_counts() {
        let one = GridGraph::block(1, 1);
        assert!(one.neighbors(Cell::new(0, 0)).unwrap().is_empty());
        let corridor = GridGraph::block(3, 1);
        assert_eq!(corridor.neighbors(Cell::new(1, 0)).unwrap().len(), 2);
        let block = GridGraph::block(3, 3);
        assert_eq!(
            block.neighbors(Cell::new(1, 1)).unwrap(),
            vec![Cell::new(1, 2), Cell::new(2, 1), Cell::new(1, 0), Cell::new(0, 1)]
        );
        assert_eq!(
            block.neighbors(Cell::new(5, 5)),
            Err(GeometryError::CellOutsideGraph(5, 5))
        );
    }

    #[test]
    fn polygon_file_rejects_fractional_vertices() {
        let f = PolygonFile {
            vertices: vec![[0.0, 0.0], [1.5, 0.0], [1.5, 1.0], [0.0, 1.0]],
            cell_size_m: 5.0,
        };
        assert_eq!(f.to_polygon(), Err(GeometryError::NonIntegralVertex(1)));
        let text = r#"{"vertices": [[0,0],[2,0],[2,1],[0,1]], "cell_size_m": 5}"#;
        let f: PolygonFile = serde_json::from_str(text).unwrap();
        assert_eq!(f.to_polygon().unwrap().area(), 2);
    }
}
