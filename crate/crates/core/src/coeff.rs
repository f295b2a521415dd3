//! Coefficient matrices sigma in the uniform ellipticity class M(alpha,
//! beta): validation, the derived scalars b = s12 - s21 and c = det sigma,
//! and the Lipschitz bound E on their gradients.

use crate::error::{Error, Result};
use crate::mesh::{CellField, Grid, MatrixField, Topology, VectorField};

/// Smallest eigenvalue of the symmetric part of a 2x2 matrix.
fn min_eig_sym(m: [[f64; 2]; 2]) -> f64 {
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
}

fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inv2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let d = det2(m);
    if d == 0.0 {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EllipticityCondition {
    /// sigma xi . xi >= alpha |xi|^2 failed
    Lower,
    /// sigma^{-1} xi . xi >= beta^{-1} |xi|^2 failed
    Inverse,
}

/// Per-field outcome of the two ellipticity inequalities.
#[derive(Clone, Debug)]
pub struct EllipticityReport {
    pub pass: bool,
    /// min over cells of lambda_min((sigma + sigma^T)/2)
    pub min_eig: f64,
    /// min over cells of lambda_min((sigma^{-1} + sigma^{-T})/2)
    pub min_eig_inverse: f64,
    pub worst_cell: usize,
    pub effective_k: f64,
    pub violations: Vec<(usize, EllipticityCondition)>,
}

pub fn validate_sigma(sigma: &MatrixField, alpha: f64, beta: f64) -> EllipticityReport {
    assert!(alpha > 0.0 && beta > 0.0, "alpha, beta must be positive");
    let slack = 1e-12;
    let mut min_eig = f64::INFINITY;
    let mut min_eig_inverse = f64::INFINITY;
    let mut worst_cell = 0;
    let mut violations = Vec::new();
    for (cell, &m) in sigma.values().iter().enumerate() {
        let e = min_eig_sym(m);
        if e < min_eig {
            min_eig = e;
            worst_cell = cell;
        }
        if e < alpha - slack * alpha.abs() {
            violations.push((cell, EllipticityCondition::Lower));
        }
        match inv2(m) {
            Some(mi) if det2(m) > 0.0 => {
                let ei = min_eig_sym(mi);
                min_eig_inverse = min_eig_inverse.min(ei);
                if ei < 1.0 / beta - slack / beta {
                    violations.push((cell, EllipticityCondition::Inverse));
                }
            }
            _ => {
                min_eig_inverse = f64::NEG_INFINITY;
                violations.push((cell, EllipticityCondition::Inverse));
            }
        }
    }
    EllipticityReport {
        pass: violations.is_empty(),
        min_eig,
        min_eig_inverse,
        worst_cell,
        effective_k: (1.0 / alpha).max(beta),
        violations,
    }
}

/// Validated per-cell coefficient matrix with its ellipticity constants
/// and the scalars entering the drift equation.
#[derive(Clone, Debug)]
pub struct SigmaField {
    sigma: MatrixField,
    pub alpha: f64,
    pub beta: f64,
    /// K = max(1/alpha, beta)
    pub k: f64,
    /// antisymmetric part s12 - s21, per cell
    pub b: CellField,
    /// det sigma, per cell
    pub c: CellField,
    /// sup |grad c| + sup |grad b| (discrete unless overridden)
    pub lip_e: f64,
    grad_b: VectorField,
    grad_c: VectorField,
}

impl SigmaField {
    pub fn new(sigma: MatrixField, alpha: f64, beta: f64) -> Result<Self> {
        let report = validate_sigma(&sigma, alpha, beta);
        if !report.pass {
            let (cell, cond) = report.violations[0];
            return Err(Error::Ellipticity(format!(
                "{} inequality failed at {} cell(s), first at cell {} (min sym eig {:.6e}, min inv sym eig {:.6e})",
                match cond {
                    EllipticityCondition::Lower => "first (lower-bound)",
                    EllipticityCondition::Inverse => "second (inverse)",
                },
                report.violations.len(),
                cell,
                report.min_eig,
                report.min_eig_inverse,
            )));
        }
        for (cell, &m) in sigma.values().iter().enumerate() {
            if det2(m) <= 0.0 {
                return Err(Error::Ellipticity(format!(
                    "det sigma <= 0 at cell {cell}"
                )));
            }
        }
        let grid = *sigma.grid();
        let b = CellField::new(
            grid,
            sigma.values().iter().map(|m| m[0][1] - m[1][0]).collect(),
        )?;
        let c = CellField::new(grid, sigma.values().iter().map(|m| det2(*m)).collect())?;
        let grad_b = cell_gradient(&b);
        let grad_c = cell_gradient(&c);
        let lip_e = sup_norm(&grad_c) + sup_norm(&grad_b);
        Ok(SigmaField {
            sigma,
            alpha,
            beta,
            k: (1.0 / alpha).max(beta),
            b,
            c,
            lip_e,
            grad_b,
            grad_c,
        })
    }

    pub fn from_fn<F: Fn(f64, f64) -> [[f64; 2]; 2]>(
        grid: Grid,
        f: F,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        SigmaField::new(MatrixField::from_fn(grid, f), alpha, beta)
    }

    pub fn identity(grid: Grid) -> SigmaField {
        SigmaField::from_fn(grid, |_, _| [[1.0, 0.0], [0.0, 1.0]], 1.0, 1.0).unwrap()
    }

    /// Replace the discrete Lipschitz bound with an exact analytic one.
    pub fn with_lipschitz_bound(mut self, e: f64) -> Self {
        self.lip_e = e;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.sigma.grid()
    }

    pub fn matrix(&self) -> &MatrixField {
        &self.sigma
    }

    pub fn value(&self, cell: usize) -> [[f64; 2]; 2] {
        self.sigma.value(cell)
    }

    pub fn grad_b(&self) -> &VectorField {
        &self.grad_b
    }

    pub fn grad_c(&self) -> &VectorField {
        &self.grad_c
    }

    /// Does 1/alpha = beta = K hold (the convention used for the
    /// quasiconformality bounds)?
    pub fn convention_k(&self) -> bool {
        (1.0 / self.alpha - self.beta).abs() <= 1e-12 * self.beta
    }

    /// Symmetric part of sigma at a cell.
    pub fn sym(&self, cell: usize) -> [[f64; 2]; 2] {
        let m = self.sigma.value(cell);
        let off = 0.5 * (m[0][1] + m[1][0]);
        [[m[0][0], off], [off, m[1][1]]]
    }

    /// Trace of sigma integrated over the domain.
    pub fn trace_integral(&self) -> f64 {
        let grid = self.grid();
        let a = grid.cell_area();
        self.sigma
            .values()
            .iter()
            .map(|m| a * (m[0][0] + m[1][1]))
            .sum()
    }
}

fn sup_norm(v: &VectorField) -> f64 {
    v.values()
        .iter()
        .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt())
        .fold(0.0, f64::max)
}

/// Gradient of a cell field: central differences of cell values, one-sided
/// at Dirichlet boundaries, wrapped on periodic grids.
pub fn cell_gradient(f: &CellField) -> VectorField {
    let grid = *f.grid();
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let periodic = grid.topology == Topology::Periodic;
    let v = f.values();
    let mut out = Vec::with_capacity(grid.n_cells());
    for cj in 0..ny {
        for ci in 0..nx {
            let gx = axis_diff(
                |i| v[grid.cell_id(i, cj)],
                ci,
                nx,
                hx,
                periodic,
            );
            let gy = axis_diff(
                |j| v[grid.cell_id(ci, j)],
                cj,
                ny,
                hy,
                periodic,
            );
            out.push([gx, gy]);
        }
    }
    VectorField::new(grid, out).unwrap()
}

fn axis_diff<F: Fn(usize) -> f64>(at: F, i: usize, n: usize, h: f64, periodic: bool) -> f64 {
    if periodic {
        (at((i + 1) % n) - at((i + n - 1) % n)) / (2.0 * h)
    } else if i == 0 {
        (at(1) - at(0)) / h
    } else if i == n - 1 {
        (at(n - 1) - at(n - 2)) / h
    } else {
        (at(i + 1) - at(i - 1)) / (2.0 * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Rect, Topology};

    fn unit_grid(n: usize) -> Grid {
        Grid::new(n, n, Rect::unit_square(), Topology::Dirichlet).unwrap()
    }

    #[test]
    fn identity_passes() {
        let g = unit_grid(4);
        let m = MatrixField::from_fn(g, |_, _| [[1.0, 0.0], [0.0, 1.0]]);
        let r = validate_sigma(&m, 1.0, 1.0);
        assert!(r.pass);
        assert_eq!(r.effective_k, 1.0);
        let s = SigmaField::new(m, 1.0, 1.0).unwrap();
        assert_eq!(s.k, 1.0);
        assert_eq!(s.lip_e, 0.0);
        for c in 0..g.n_cells() {
            assert_eq!(s.b.value(c), 0.0);
            assert_eq!(s.c.value(c), 1.0);
        }
    }

    #[test]
    fn diagonal_two_half() {
        // oracle: eigenvalues of diag(2, 1/2) are {2, 1/2}; of its inverse
        // {1/2, 2}; both inequalities are tight with alpha=1/2, beta=2
        let g = unit_grid(4);
        let m = MatrixField::from_fn(g, |_, _| [[2.0, 0.0], [0.0, 0.5]]);
        let r = validate_sigma(&m, 0.5, 2.0);
        assert!(r.pass);
        assert_eq!(r.effective_k, 2.0);
        assert!((r.min_eig - 0.5).abs() < 1e-14);
        assert!((r.min_eig_inverse - 0.5).abs() < 1e-14);
    }

    #[test]
    fn indefinite_fails_first_inequality() {
        let g = unit_grid(2);
        let m = MatrixField::from_fn(g, |_, _| [[1.0, 0.0], [0.0, -1.0]]);
        let r = validate_sigma(&m, 0.1, 10.0);
        assert!(!r.pass);
        assert!(r
            .violations
            .iter()
            .any(|&(_, c)| c == EllipticityCondition::Lower));
        assert!(SigmaField::new(m, 0.1, 10.0).is_err());
    }

    #[test]
    fn constant_nonsymmetric_scalars() {
        // sigma = I + J = [[1,-1],[1,1]]: b = -2, c = 2, E = 0
        let g = unit_grid(4);
        let s = SigmaField::from_fn(g, |_, _| [[1.0, -1.0], [1.0, 1.0]], 0.5, 2.7).unwrap();
        for c in 0..g.n_cells() {
            assert_eq!(s.b.value(c), -2.0);
            assert_eq!(s.c.value(c), 2.0);
        }
        assert_eq!(s.lip_e, 0.0);
    }

    #[test]
    fn linear_det_gradient() {
        // sigma = diag(1 + x, 1): c = 1 + x, grad c -> (1, 0), E -> 1
        for n in [16, 64] {
            let g = unit_grid(n);
            let s =
                SigmaField::from_fn(g, |x, _| [[1.0 + x, 0.0], [0.0, 1.0]], 0.9, 2.1).unwrap();
            assert!((s.lip_e - 1.0).abs() < 1e-10, "n={n}: E={}", s.lip_e);
            for c in 0..g.n_cells() {
                assert!((s.grad_c().value(c)[0] - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn operator_norm_bound() {
        // |sigma xi| <= beta |xi| on a direction sample
        let g = unit_grid(4);
        let s = SigmaField::from_fn(g, |_, _| [[1.0, -1.0], [1.0, 1.0]], 0.5, 2.0).unwrap();
        for k in 0..16 {
            let th = k as f64 * std::f64::consts::PI / 8.0;
            let xi = [th.cos(), th.sin()];
            for c in 0..g.n_cells() {
                let m = s.value(c);
                let y = [
                    m[0][0] * xi[0] + m[0][1] * xi[1],
                    m[1][0] * xi[0] + m[1][1] * xi[1],
                ];
                let ny = (y[0] * y[0] + y[1] * y[1]).sqrt();
                assert!(ny <= s.beta + 1e-12, "direction {k}: |sigma xi| = {ny}");
            }
        }
    }

    #[test]
    fn translation_consistency_laminate() {
        // shifting the laminate pattern by half a period shifts b and c
        let g = Grid::periodic_unit_cell(8).unwrap();
        let lam = |x: f64| if x.rem_euclid(1.0) < 0.5 { 2.0 } else { 0.5 };
        let s1 = SigmaField::from_fn(g, |x, _| [[lam(x), 0.0], [0.0, 1.0 / lam(x)]], 0.5, 2.0)
            .unwrap();
        let s2 = SigmaField::from_fn(
            g,
            |x, _| [[lam(x + 0.5), 0.0], [0.0, 1.0 / lam(x + 0.5)]],
            0.5,
            2.0,
        )
        .unwrap();
        for cj in 0..8 {
            for ci in 0..8 {
                let shifted = g.cell_id((ci + 4) % 8, cj);
                assert_eq!(s1.c.value(g.cell_id(ci, cj)), s2.c.value(shifted));
                assert_eq!(s1.b.value(g.cell_id(ci, cj)), s2.b.value(shifted));
            }
        }
    }
}
