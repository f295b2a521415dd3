//! Structured 2D grids on rectangles or the periodic unit cell, discrete
//! fields, per-cell gradients, quadrature, and dyadic square families.
//!
//! Scalar fields are nodal (bilinear within each cell); vector and matrix
//! fields are per-cell constants. Gradients are taken at cell centers, so
//! every downstream algebraic quantity (DU, det DU, dilatations) is a
//! per-cell value.

use crate::error::{Error, Result};

const GEOM_TOL: f64 = 1e-9;

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn unit_square() -> Self {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    /// Centered square of the given half-width inside `self`.
    pub fn centered_square(&self, half_side: f64) -> Rect {
        let cx = 0.5 * (self.x0 + self.x1);
        let cy = 0.5 * (self.y0 + self.y1);
        Rect::new(cx - half_side, cx + half_side, cy - half_side, cy + half_side)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, other: &Rect, tol: f64) -> bool {
        other.x0 >= self.x0 - tol
            && other.x1 <= self.x1 + tol
            && other.y0 >= self.y0 - tol
            && other.y1 <= self.y1 + tol
    }

    fn is_unit_square(&self) -> bool {
        (self.x0).abs() < GEOM_TOL
            && (self.x1 - 1.0).abs() < GEOM_TOL
            && (self.y0).abs() < GEOM_TOL
            && (self.y1 - 1.0).abs() < GEOM_TOL
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Dirichlet,
    Periodic,
}

/// Structured rectangular mesh. `nx * ny` cells; nodes are shared between
/// cells, with opposite edges identified for periodic topology.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub domain: Rect,
    pub topology: Topology,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, domain: Rect, topology: Topology) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::DegenerateGrid(nx, ny));
        }
        if domain.width() <= 0.0 || domain.height() <= 0.0 {
            return Err(Error::DegenerateGrid(nx, ny));
        }
        if topology == Topology::Periodic && !domain.is_unit_square() {
            return Err(Error::NonUnitPeriodicDomain(format!(
                "[{}, {}] x [{}, {}]",
                domain.x0, domain.x1, domain.y0, domain.y1
            )));
        }
        Ok(Grid { nx, ny, domain, topology })
    }

    /// Unit-cell periodic grid with n cells per axis.
    pub fn periodic_unit_cell(n: usize) -> Result<Self> {
        Grid::new(n, n, Rect::unit_square(), Topology::Periodic)
    }

    pub fn hx(&self) -> f64 {
        self.domain.width() / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.domain.height() / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Distinct nodes per axis (periodic identification collapses one).
    pub fn nodes_x(&self) -> usize {
        match self.topology {
            Topology::Dirichlet => self.nx + 1,
            Topology::Periodic => self.nx,
        }
    }

    pub fn nodes_y(&self) -> usize {
        match self.topology {
            Topology::Dirichlet => self.ny + 1,
            Topology::Periodic => self.ny,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes_x() * self.nodes_y()
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Node id for lattice coordinates (i, j); wraps for periodic grids.
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        match self.topology {
            Topology::Dirichlet => {
                debug_assert!(i <= self.nx && j <= self.ny);
                j * (self.nx + 1) + i
            }
            Topology::Periodic => (j % self.ny) * self.nx + (i % self.nx),
        }
    }

    pub fn node_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.domain.x0 + i as f64 * self.hx(),
            self.domain.y0 + j as f64 * self.hy(),
        )
    }

    pub fn is_boundary_node(&self, i: usize, j: usize) -> bool {
        match self.topology {
            Topology::Dirichlet => i == 0 || i == self.nx || j == 0 || j == self.ny,
            Topology::Periodic => false,
        }
    }

    pub fn cell_id(&self, ci: usize, cj: usize) -> usize {
        cj * self.nx + ci
    }

    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn cell_center(&self, cell: usize) -> (f64, f64) {
        let (ci, cj) = self.cell_coords(cell);
        (
            self.domain.x0 + (ci as f64 + 0.5) * self.hx(),
            self.domain.y0 + (cj as f64 + 0.5) * self.hy(),
        )
    }

    /// Corner node ids of a cell, counter-clockwise from the lower-left.
    pub fn cell_nodes(&self, cell: usize) -> [usize; 4] {
        let (ci, cj) = self.cell_coords(cell);
        [
            self.node_id(ci, cj),
            self.node_id(ci + 1, cj),
            self.node_id(ci + 1, cj + 1),
            self.node_id(ci, cj + 1),
        ]
    }

    /// Dyadic subdivision family of `region` up to `max_level`.
    ///
    /// The side at level l is min(width, height) / 2^l; for non-square
    /// regions the squares tile from the lower-left corner. Fails when the
    /// finest squares would fall below one grid cell.
    pub fn dyadic_squares(&self, region: Rect, max_level: u32) -> Result<Vec<Square>> {
        if !self.domain.contains(&region, GEOM_TOL) {
            return Err(Error::SquareOutsideDomain(
                region.x0, region.x1, region.y0, region.y1,
            ));
        }
        let base = region.width().min(region.height());
        let finest = base / f64::powi(2.0, max_level as i32);
        if finest < self.hx().min(self.hy()) * (1.0 - GEOM_TOL) {
            return Err(Error::ResolutionExceeded { level: max_level });
        }
        let mut out = Vec::new();
        for level in 0..=max_level {
            let side = base / f64::powi(2.0, level as i32);
            let kx = (region.width() / side + GEOM_TOL).floor() as usize;
            let ky = (region.height() / side + GEOM_TOL).floor() as usize;
            for jy in 0..ky {
                for jx in 0..kx {
                    out.push(Square {
                        center: [
                            region.x0 + (jx as f64 + 0.5) * side,
                            region.y0 + (jy as f64 + 0.5) * side,
                        ],
                        side,
                        level,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Mean of a per-cell sampled quantity over a square, weighting each
    /// cell by its overlap area. Exact for cell-wise constant data.
    pub fn mean_over_rect<F: Fn(usize) -> f64>(&self, rect: &Rect, f: F) -> Result<f64> {
        let tol = GEOM_TOL * (1.0 + self.domain.width().abs() + self.domain.height().abs());
        if !self.domain.contains(rect, tol) {
            return Err(Error::SquareOutsideDomain(rect.x0, rect.x1, rect.y0, rect.y1));
        }
        let (hx, hy) = (self.hx(), self.hy());
        let i0 = (((rect.x0 - self.domain.x0) / hx - GEOM_TOL).floor()).max(0.0) as usize;
        let j0 = (((rect.y0 - self.domain.y0) / hy - GEOM_TOL).floor()).max(0.0) as usize;
        let i1 = ((((rect.x1 - self.domain.x0) / hx + GEOM_TOL).ceil()) as usize).min(self.nx);
        let j1 = ((((rect.y1 - self.domain.y0) / hy + GEOM_TOL).ceil()) as usize).min(self.ny);
        let mut acc = 0.0;
        let mut total = 0.0;
        for cj in j0..j1 {
            let cy0 = self.domain.y0 + cj as f64 * hy;
            let oy = overlap(cy0, cy0 + hy, rect.y0, rect.y1);
            if oy <= 0.0 {
                continue;
            }
            for ci in i0..i1 {
                let cx0 = self.domain.x0 + ci as f64 * hx;
                let ox = overlap(cx0, cx0 + hx, rect.x0, rect.x1);
                if ox <= 0.0 {
                    continue;
                }
                let w = ox * oy;
                acc += w * f(self.cell_id(ci, cj));
                total += w;
            }
        }
        Ok(acc / total)
    }

    /// Cells whose centers lie inside the rectangle.
    pub fn cells_in_rect(&self, rect: &Rect) -> Vec<usize> {
        (0..self.n_cells())
            .filter(|&c| {
                let (x, y) = self.cell_center(c);
                x > rect.x0 && x < rect.x1 && y > rect.y0 && y < rect.y1
            })
            .collect()
    }
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// One square of a dyadic family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Square {
    pub center: [f64; 2],
    pub side: f64,
    pub level: u32,
}

impl Square {
    pub fn rect(&self) -> Rect {
        Rect::new(
            self.center[0] - 0.5 * self.side,
            self.center[0] + 0.5 * self.side,
            self.center[1] - 0.5 * self.side,
            self.center[1] + 0.5 * self.side,
        )
    }
}

/// Nodal scalar field; bilinear within each cell.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::FieldSizeMismatch { got: values.len(), want: grid.n_nodes() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(k));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let mut values = vec![0.0; grid.n_nodes()];
        for j in 0..grid.nodes_y() {
            for i in 0..grid.nodes_x() {
                let (x, y) = grid.node_pos(i, j);
                values[grid.node_id(i, j)] = f(x, y);
            }
        }
        ScalarField::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.n_nodes()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node_id(i, j)]
    }

    /// Bilinear value at the cell center (= mean of corner values).
    pub fn cell_center_value(&self, cell: usize) -> f64 {
        let n = self.grid.cell_nodes(cell);
        0.25 * (self.values[n[0]] + self.values[n[1]] + self.values[n[2]] + self.values[n[3]])
    }

    /// Field shifted by a constant.
    pub fn shifted(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Per-cell center values as a cell field.
    pub fn to_cell_field(&self) -> CellField {
        CellField {
            grid: self.grid,
            values: (0..self.grid.n_cells()).map(|c| self.cell_center_value(c)).collect(),
        }
    }
}

/// Scalar value per cell.
#[derive(Clone, Debug)]
pub struct CellField {
    grid: Grid,
    values: Vec<f64>,
}

impl CellField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::FieldSizeMismatch { got: values.len(), want: grid.n_cells() });
        }
        Ok(CellField { grid, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.n_cells())
            .map(|c| {
                let (x, y) = grid.cell_center(c);
                f(x, y)
            })
            .collect();
        CellField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    /// Nodal field by averaging the cells adjacent to each node.
    pub fn to_nodal(&self) -> ScalarField {
        let g = self.grid;
        let mut sums = vec![0.0; g.n_nodes()];
        let mut counts = vec![0u32; g.n_nodes()];
        for c in 0..g.n_cells() {
            for &n in &g.cell_nodes(c) {
                sums[n] += self.values[c];
                counts[n] += 1;
            }
        }
        for (s, &k) in sums.iter_mut().zip(&counts) {
            *s /= k.max(1) as f64;
        }
        ScalarField { grid: g, values: sums }
    }
}

/// 2-vector per cell.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Grid,
    values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::FieldSizeMismatch { got: values.len(), want: grid.n_cells() });
        }
        Ok(VectorField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField { grid, values: vec![[0.0; 2]; grid.n_cells()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> [f64; 2] {
        self.values[cell]
    }
}

/// 2x2 matrix per cell, stored row-major.
#[derive(Clone, Debug)]
pub struct MatrixField {
    grid: Grid,
    values: Vec<[[f64; 2]; 2]>,
}

impl MatrixField {
    pub fn new(grid: Grid, values: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::FieldSizeMismatch { got: values.len(), want: grid.n_cells() });
        }
        Ok(MatrixField { grid, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> [[f64; 2]; 2]>(grid: Grid, f: F) -> Self {
        let values = (0..grid.n_cells())
            .map(|c| {
                let (x, y) = grid.cell_center(c);
                f(x, y)
            })
            .collect();
        MatrixField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[[[f64; 2]; 2]] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> [[f64; 2]; 2] {
        self.values[cell]
    }
}

/// Per-cell constant gradient of a nodal field (bilinear reconstruction
/// differentiated at the cell center). Exact on affine fields.
pub fn gradient(u: &ScalarField) -> VectorField {
    let g = *u.grid();
    let (hx, hy) = (g.hx(), g.hy());
    let values = (0..g.n_cells())
        .map(|c| {
            let n = g.cell_nodes(c);
            let v = u.values();
            [
                (v[n[1]] + v[n[2]] - v[n[0]] - v[n[3]]) / (2.0 * hx),
                (v[n[3]] + v[n[2]] - v[n[0]] - v[n[1]]) / (2.0 * hy),
            ]
        })
        .collect();
    VectorField { grid: g, values }
}

/// Mean of a nodal field over a square via cell-midpoint quadrature.
pub fn integrate_mean(f: &ScalarField, q: &Square) -> Result<f64> {
    f.grid().mean_over_rect(&q.rect(), |c| f.cell_center_value(c))
}
