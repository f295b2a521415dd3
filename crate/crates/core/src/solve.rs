//! Weak forms on the structured grid: Dirichlet problems, the periodic
//! cell problem, and weak-residual evaluation for div(sigma grad w + w B).
//!
//! Bilinear nodal elements with 2x2 Gauss quadrature per cell. With
//! cell-wise constant sigma the quadrature is exact, so affine functions
//! are reproduced exactly for any constant sigma, symmetric or not.

use crate::coeff::SigmaField;
use crate::error::{Error, Result};
use crate::linalg::{solve_linear, Csr};
use crate::mesh::{gradient, Grid, ScalarField, Topology, VectorField};

/// Relative residual tolerance for the linear solvers.
pub const SOLVER_TOL: f64 = 1e-13;

const GAUSS_1D: [f64; 2] = [
    0.5 - 0.28867513459481287, // (1 - 1/sqrt(3)) / 2
    0.5 + 0.28867513459481287,
];

/// Reference-cell shape functions, counter-clockwise from lower-left.
fn shape(xi: f64, eta: f64) -> [f64; 4] {
    [
        (1.0 - xi) * (1.0 - eta),
        xi * (1.0 - eta),
        xi * eta,
        (1.0 - xi) * eta,
    ]
}

/// Physical gradients of the shape functions at a reference point.
fn shape_grad(xi: f64, eta: f64, hx: f64, hy: f64) -> [[f64; 2]; 4] {
    [
        [-(1.0 - eta) / hx, -(1.0 - xi) / hy],
        [(1.0 - eta) / hx, -xi / hy],
        [eta / hx, xi / hy],
        [-eta / hx, (1.0 - xi) / hy],
    ]
}

/// Element matrix K[a][b] = int_cell (sigma grad N_b) . grad N_a.
fn element_stiffness(hx: f64, hy: f64, s: [[f64; 2]; 2]) -> [[f64; 4]; 4] {
    let mut k = [[0.0; 4]; 4];
    let w = 0.25 * hx * hy;
    for &xi in &GAUSS_1D {
        for &eta in &GAUSS_1D {
            let g = shape_grad(xi, eta, hx, hy);
            for a in 0..4 {
                for b in 0..4 {
                    let sg = [
                        s[0][0] * g[b][0] + s[0][1] * g[b][1],
                        s[1][0] * g[b][0] + s[1][1] * g[b][1],
                    ];
                    k[a][b] += w * (sg[0] * g[a][0] + sg[1] * g[a][1]);
                }
            }
        }
    }
    k
}

/// Element load for the flux of an affine component: int (sigma e_axis) . grad N_a.
fn element_affine_flux(hx: f64, hy: f64, s: [[f64; 2]; 2], axis: usize) -> [f64; 4] {
    let se = [s[0][axis], s[1][axis]];
    let mut out = [0.0; 4];
    let w = 0.25 * hx * hy;
    for &xi in &GAUSS_1D {
        for &eta in &GAUSS_1D {
            let g = shape_grad(xi, eta, hx, hy);
            for a in 0..4 {
                out[a] += w * (se[0] * g[a][0] + se[1] * g[a][1]);
            }
        }
    }
    out
}

/// Sparse system with node-ordered unknowns.
pub struct LinearSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
}

/// Assemble int (sigma grad u) . grad phi over all grid nodes, using a
/// per-cell matrix weight (`sigma` or its symmetric part).
fn assemble_all_nodes<W: Fn(usize) -> [[f64; 2]; 2]>(grid: &Grid, weight: W) -> Csr {
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut triplets = Vec::with_capacity(grid.n_cells() * 16);
    for cell in 0..grid.n_cells() {
        let nodes = grid.cell_nodes(cell);
        let k = element_stiffness(hx, hy, weight(cell));
        for a in 0..4 {
            for b in 0..4 {
                triplets.push((nodes[a], nodes[b], k[a][b]));
            }
        }
    }
    Csr::from_triplets(grid.n_nodes(), &triplets)
}

/// A sigma-harmonic mapping: two components on the same grid, optionally
/// with an affine part x (periodic correctors store U = x + phi).
#[derive(Clone, Debug)]
pub struct MapField {
    pub u1: ScalarField,
    pub u2: ScalarField,
    /// true when the stored fields are correctors of the identity map
    pub identity_plus_corrector: bool,
    pub sense_preserving: bool,
}

impl MapField {
    pub fn from_components(u1: ScalarField, u2: ScalarField) -> Result<Self> {
        if u1.grid() != u2.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(MapField { u1, u2, identity_plus_corrector: false, sense_preserving: true })
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    fn component(&self, k: usize) -> &ScalarField {
        if k == 0 {
            &self.u1
        } else {
            &self.u2
        }
    }

    /// Per-cell constant gradient of component k (affine part included).
    pub fn component_gradient(&self, k: usize) -> VectorField {
        let mut g = gradient(self.component(k));
        if self.identity_plus_corrector {
            let grid = *self.grid();
            let vals: Vec<[f64; 2]> = g
                .values()
                .iter()
                .map(|v| {
                    let mut v = *v;
                    v[k] += 1.0;
                    v
                })
                .collect();
            g = VectorField::new(grid, vals).unwrap();
        }
        g
    }

    /// Gradient of component k at a reference point of a cell, from the
    /// bilinear reconstruction.
    pub fn gradient_at(&self, k: usize, cell: usize, xi: f64, eta: f64) -> [f64; 2] {
        let grid = self.grid();
        let nodes = grid.cell_nodes(cell);
        let g = shape_grad(xi, eta, grid.hx(), grid.hy());
        let v = self.component(k).values();
        let mut out = [0.0; 2];
        for a in 0..4 {
            out[0] += v[nodes[a]] * g[a][0];
            out[1] += v[nodes[a]] * g[a][1];
        }
        if self.identity_plus_corrector {
            out[k] += 1.0;
        }
        out
    }
}

/// Dirichlet problem div(sigma grad u) = 0 with nodal boundary data.
pub fn solve_dirichlet<G: Fn(f64, f64) -> f64>(sigma: &SigmaField, g: G) -> Result<ScalarField> {
    let grid = *sigma.grid();
    assert_eq!(grid.topology, Topology::Dirichlet, "solve_dirichlet needs a Dirichlet grid");
    let (hx, hy) = (grid.hx(), grid.hy());
    // interior numbering
    let mut eq = vec![usize::MAX; grid.n_nodes()];
    let mut n_unknowns = 0;
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            if !grid.is_boundary_node(i, j) {
                eq[grid.node_id(i, j)] = n_unknowns;
                n_unknowns += 1;
            }
        }
    }
    let mut boundary = vec![0.0; grid.n_nodes()];
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            if grid.is_boundary_node(i, j) {
                let (x, y) = grid.node_pos(i, j);
                boundary[grid.node_id(i, j)] = g(x, y);
            }
        }
    }
    let mut triplets = Vec::with_capacity(grid.n_cells() * 16);
    let mut rhs = vec![0.0; n_unknowns];
    for cell in 0..grid.n_cells() {
        let nodes = grid.cell_nodes(cell);
        let k = element_stiffness(hx, hy, sigma.value(cell));
        for a in 0..4 {
            let row = eq[nodes[a]];
            if row == usize::MAX {
                continue;
            }
            for b in 0..4 {
                let col = eq[nodes[b]];
                if col == usize::MAX {
                    rhs[row] -= k[a][b] * boundary[nodes[b]];
                } else {
                    triplets.push((row, col, k[a][b]));
                }
            }
        }
    }
    let matrix = Csr::from_triplets(n_unknowns, &triplets);
    let (x, _stats) = solve_linear(&matrix, &rhs, SOLVER_TOL)?;
    let mut values = boundary;
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let id = grid.node_id(i, j);
            if eq[id] != usize::MAX {
                values[id] = x[eq[id]];
            }
        }
    }
    ScalarField::new(grid, values)
}

/// Periodic cell problem: U = x + phi with phi periodic and mean zero,
/// div(sigma grad u^i) = 0 on the unit cell for i = 1, 2.
pub fn solve_cell_problem(sigma: &SigmaField) -> Result<MapField> {
    let grid = *sigma.grid();
    assert_eq!(grid.topology, Topology::Periodic, "cell problem needs a periodic grid");
    let (hx, hy) = (grid.hx(), grid.hy());
    let a_full = assemble_all_nodes(&grid, |c| sigma.value(c));
    let mut comps = Vec::with_capacity(2);
    for axis in 0..2 {
        // rhs_a = - int (sigma e_axis) . grad N_a
        let mut rhs = vec![0.0; grid.n_nodes()];
        for cell in 0..grid.n_cells() {
            let nodes = grid.cell_nodes(cell);
            let f = element_affine_flux(hx, hy, sigma.value(cell), axis);
            for a in 0..4 {
                rhs[nodes[a]] -= f[a];
            }
        }
        let phi = solve_grounded(&a_full, &rhs)?;
        let mut field = ScalarField::new(grid, phi)?;
        // mean-zero normalization of the corrector
        let mean: f64 = (0..grid.n_cells())
            .map(|c| field.cell_center_value(c))
            .sum::<f64>()
            * grid.cell_area();
        field = field.shifted(-mean);
        comps.push(field);
    }
    let u2 = comps.pop().unwrap();
    let u1 = comps.pop().unwrap();
    Ok(MapField { u1, u2, identity_plus_corrector: true, sense_preserving: true })
}

/// Solve a consistent singular system (constants in the kernel) by
/// grounding node 0.
fn solve_grounded(a: &Csr, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let mut triplets = Vec::new();
    for r in 0..n {
        if r == 0 {
            triplets.push((0, 0, 1.0));
            continue;
        }
        for k in a.indptr[r]..a.indptr[r + 1] {
            triplets.push((r, a.indices[k], a.data[k]));
        }
    }
    let ag = Csr::from_triplets(n, &triplets);
    let mut b = rhs.to_vec();
    b[0] = 0.0;
    let (x, _) = solve_linear(&ag, &b, SOLVER_TOL)?;
    Ok(x)
}

pub use crate::linalg::SolveStats as LinearSolveStats;

/// Normalized weak residual of div(sigma grad w + w B) over the grid's
/// test space: max over nodal test functions phi of
/// |int (sigma grad w + w B) . grad phi| / (||grad phi|| (||grad w|| + ||w||)).
pub fn weak_residual(sigma: &SigmaField, w: &ScalarField, drift: Option<&VectorField>) -> f64 {
    let grid = *sigma.grid();
    assert_eq!(w.grid(), &grid, "field grid mismatch");
    let (hx, hy) = (grid.hx(), grid.hy());
    let wq = 0.25 * hx * hy;
    let v = w.values();
    let mut r = vec![0.0; grid.n_nodes()];
    let mut grad_phi_sq = vec![0.0; grid.n_nodes()];
    let mut w_l2_sq = 0.0;
    let mut gw_l2_sq = 0.0;
    for cell in 0..grid.n_cells() {
        let nodes = grid.cell_nodes(cell);
        let s = sigma.value(cell);
        let bv = drift.map(|d| d.value(cell)).unwrap_or([0.0, 0.0]);
        for &xi in &GAUSS_1D {
            for &eta in &GAUSS_1D {
                let nsh = shape(xi, eta);
                let g = shape_grad(xi, eta, hx, hy);
                let mut wval = 0.0;
                let mut gw = [0.0; 2];
                for a in 0..4 {
                    wval += v[nodes[a]] * nsh[a];
                    gw[0] += v[nodes[a]] * g[a][0];
                    gw[1] += v[nodes[a]] * g[a][1];
                }
                let flux = [
                    s[0][0] * gw[0] + s[0][1] * gw[1] + wval * bv[0],
                    s[1][0] * gw[0] + s[1][1] * gw[1] + wval * bv[1],
                ];
                for a in 0..4 {
                    r[nodes[a]] += wq * (flux[0] * g[a][0] + flux[1] * g[a][1]);
                    grad_phi_sq[nodes[a]] += wq * (g[a][0] * g[a][0] + g[a][1] * g[a][1]);
                }
                w_l2_sq += wq * wval * wval;
                gw_l2_sq += wq * (gw[0] * gw[0] + gw[1] * gw[1]);
            }
        }
    }
    let denom_field = gw_l2_sq.sqrt() + w_l2_sq.sqrt();
    if denom_field == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    match grid.topology {
        Topology::Dirichlet => {
            for j in 1..grid.ny {
                for i in 1..grid.nx {
                    let id = grid.node_id(i, j);
                    let nr = r[id].abs() / (grad_phi_sq[id].sqrt() * denom_field);
                    worst = worst.max(nr);
                }
            }
        }
        Topology::Periodic => {
            for id in 0..grid.n_nodes() {
                let nr = r[id].abs() / (grad_phi_sq[id].sqrt() * denom_field);
                worst = worst.max(nr);
            }
        }
    }
    worst
}

/// Sum of the assembled residuals over interior test functions; vanishes
/// to machine precision for exact discrete solutions (flux conservation).
pub fn residual_sum(sigma: &SigmaField, w: &ScalarField) -> f64 {
    let grid = *sigma.grid();
    let a = assemble_all_nodes(&grid, |c| sigma.value(c));
    let mut out = vec![0.0; grid.n_nodes()];
    a.matvec(w.values(), &mut out);
    match grid.topology {
        Topology::Dirichlet => {
            let mut s = 0.0;
            for j in 1..grid.ny {
                for i in 1..grid.nx {
                    s += out[grid.node_id(i, j)];
                }
            }
            s
        }
        Topology::Periodic => out.iter().sum(),
    }
}

/// L2 and H1-seminorm of a nodal field via Gauss quadrature.
pub fn field_norms(w: &ScalarField) -> (f64, f64) {
    let grid = *w.grid();
    let (hx, hy) = (grid.hx(), grid.hy());
    let wq = 0.25 * hx * hy;
    let v = w.values();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for cell in 0..grid.n_cells() {
        let nodes = grid.cell_nodes(cell);
        for &xi in &GAUSS_1D {
            for &eta in &GAUSS_1D {
                let nsh = shape(xi, eta);
                let g = shape_grad(xi, eta, hx, hy);
                let mut wval = 0.0;
                let mut gw = [0.0; 2];
                for a in 0..4 {
                    wval += v[nodes[a]] * nsh[a];
                    gw[0] += v[nodes[a]] * g[a][0];
                    gw[1] += v[nodes[a]] * g[a][1];
                }
                l2 += wq * wval * wval;
                h1 += wq * (gw[0] * gw[0] + gw[1] * gw[1]);
            }
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// L2 distance between a nodal field and an analytic function, sampled at
/// Gauss points.
pub fn l2_error<F: Fn(f64, f64) -> f64>(w: &ScalarField, exact: F) -> f64 {
    // 3-point Gauss: the squared error of a bilinear against a smooth
    // function is quartic per cell, which 2-point rules undersample
    const P: [f64; 3] = [
        0.5 - 0.5 * 0.7745966692414834,
        0.5,
        0.5 + 0.5 * 0.7745966692414834,
    ];
    const W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let grid = *w.grid();
    let (hx, hy) = (grid.hx(), grid.hy());
    let v = w.values();
    let mut acc = 0.0;
    for cell in 0..grid.n_cells() {
        let nodes = grid.cell_nodes(cell);
        let (ci, cj) = grid.cell_coords(cell);
        let (x0, y0) = grid.node_pos(ci, cj);
        for (qi, &xi) in P.iter().enumerate() {
            for (qj, &eta) in P.iter().enumerate() {
                let nsh = shape(xi, eta);
                let mut wval = 0.0;
                for a in 0..4 {
                    wval += v[nodes[a]] * nsh[a];
                }
                let d = wval - exact(x0 + xi * hx, y0 + eta * hy);
                acc += W[qi] * W[qj] * hx * hy * d * d;
            }
        }
    }
    acc.sqrt()
}

/// Energy int sigma grad u . grad u of a nodal field (Gauss quadrature).
pub fn sigma_energy_scalar(sigma: &SigmaField, w: &ScalarField) -> f64 {
    let grid = *sigma.grid();
    let (hx, hy) = (grid.hx(), grid.hy());
    let wq = 0.25 * hx * hy;
    let v = w.values();
    let mut acc = 0.0;
    for cell in 0..grid.n_cells() {
        let nodes = grid.cell_nodes(cell);
        let s = sigma.value(cell);
        for &xi in &GAUSS_1D {
            for &eta in &GAUSS_1D {
                let g = shape_grad(xi, eta, hx, hy);
                let mut gw = [0.0; 2];
                for a in 0..4 {
                    gw[0] += v[nodes[a]] * g[a][0];
                    gw[1] += v[nodes[a]] * g[a][1];
                }
                acc += wq
                    * ((s[0][0] * gw[0] + s[0][1] * gw[1]) * gw[0]
                        + (s[1][0] * gw[0] + s[1][1] * gw[1]) * gw[1]);
            }
        }
    }
    acc
}

/// Gauss-quadrature integral of sigma grad u^k . grad u^k for a mapping
/// component, affine part included.
pub fn sigma_energy_component(sigma: &SigmaField, u: &MapField, k: usize) -> f64 {
    let grid = *sigma.grid();
    let (hx, hy) = (grid.hx(), grid.hy());
    let wq = 0.25 * hx * hy;
    let mut acc = 0.0;
    for cell in 0..grid.n_cells() {
        let s = sigma.value(cell);
        for &xi in &GAUSS_1D {
            for &eta in &GAUSS_1D {
                let gw = u.gradient_at(k, cell, xi, eta);
                acc += wq
                    * ((s[0][0] * gw[0] + s[0][1] * gw[1]) * gw[0]
                        + (s[1][0] * gw[0] + s[1][1] * gw[1]) * gw[1]);
            }
        }
    }
    acc
}

/// Normalized weak residual of the cell problem for both components:
/// max over nodal test functions phi of |int sigma grad u^i . grad phi|
/// with the affine part of u^i included.
pub fn cell_problem_residual(sigma: &SigmaField, u: &MapField) -> f64 {
    let grid = *sigma.grid();
    assert_eq!(u.grid(), &grid, "field grid mismatch");
    let (hx, hy) = (grid.hx(), grid.hy());
    let wq = 0.25 * hx * hy;
    let mut worst = 0.0f64;
    for k in 0..2 {
        let mut r = vec![0.0; grid.n_nodes()];
        let mut grad_phi_sq = vec![0.0; grid.n_nodes()];
        let mut gu_l2_sq = 0.0;
        for cell in 0..grid.n_cells() {
            let nodes = grid.cell_nodes(cell);
            let s = sigma.value(cell);
            for &xi in &GAUSS_1D {
                for &eta in &GAUSS_1D {
                    let g = shape_grad(xi, eta, hx, hy);
                    let gw = u.gradient_at(k, cell, xi, eta);
                    let flux = [
                        s[0][0] * gw[0] + s[0][1] * gw[1],
                        s[1][0] * gw[0] + s[1][1] * gw[1],
                    ];
                    for a in 0..4 {
                        r[nodes[a]] += wq * (flux[0] * g[a][0] + flux[1] * g[a][1]);
                        grad_phi_sq[nodes[a]] += wq * (g[a][0] * g[a][0] + g[a][1] * g[a][1]);
                    }
                    gu_l2_sq += wq * (gw[0] * gw[0] + gw[1] * gw[1]);
                }
            }
        }
        let denom_field = gu_l2_sq.sqrt();
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                if grid.topology == Topology::Dirichlet && grid.is_boundary_node(i, j) {
                    continue;
                }
                let id = grid.node_id(i, j);
                worst = worst.max(r[id].abs() / (grad_phi_sq[id].sqrt() * denom_field));
            }
        }
    }
    worst
}

/// Integral of det DU over the grid from the bilinear reconstruction;
/// exact null-Lagrangian value for periodic maps.
pub fn jacobian_integral(u: &MapField) -> f64 {
    let grid = *u.grid();
    let (hx, hy) = (grid.hx(), grid.hy());
    let wq = 0.25 * hx * hy;
    let mut acc = 0.0;
    for cell in 0..grid.n_cells() {
        for &xi in &GAUSS_1D {
            for &eta in &GAUSS_1D {
                let g1 = u.gradient_at(0, cell, xi, eta);
                let g2 = u.gradient_at(1, cell, xi, eta);
                acc += wq * (g1[0] * g2[1] - g1[1] * g2[0]);
            }
        }
    }
    acc
}

/// Gauss points on the reference cell, exposed for the conjugate module.
pub(crate) fn gauss_points() -> [(f64, f64); 4] {
    [
        (GAUSS_1D[0], GAUSS_1D[0]),
        (GAUSS_1D[1], GAUSS_1D[0]),
        (GAUSS_1D[1], GAUSS_1D[1]),
        (GAUSS_1D[0], GAUSS_1D[1]),
    ]
}

pub(crate) fn shape_grad_at(xi: f64, eta: f64, hx: f64, hy: f64) -> [[f64; 2]; 4] {
    shape_grad(xi, eta, hx, hy)
}

pub(crate) fn assemble_weighted<W: Fn(usize) -> [[f64; 2]; 2]>(grid: &Grid, weight: W) -> Csr {
    assemble_all_nodes(grid, weight)
}

pub(crate) fn solve_grounded_system(a: &Csr, rhs: &[f64]) -> Result<Vec<f64>> {
    solve_grounded(a, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    fn dirichlet_grid(n: usize) -> Grid {
        Grid::new(n, n, Rect::unit_square(), Topology::Dirichlet).unwrap()
    }

    #[test]
    fn affine_reproduction_identity() {
        let g = dirichlet_grid(8);
        let sigma = SigmaField::identity(g);
        let u = solve_dirichlet(&sigma, |x, _| x).unwrap();
        let exact = ScalarField::from_fn(g, |x, _| x).unwrap();
        for (a, b) in u.values().iter().zip(exact.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(weak_residual(&sigma, &u, None) < 1e-12);
    }

    #[test]
    fn affine_reproduction_nonsymmetric() {
        let g = dirichlet_grid(16);
        let sigma =
            SigmaField::from_fn(g, |_, _| [[1.0, -1.0], [1.0, 1.0]], 0.5, 2.7).unwrap();
        let u = solve_dirichlet(&sigma, |x, y| 2.0 * x - 3.0 * y + 0.25).unwrap();
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let (x, y) = g.node_pos(i, j);
                assert!(
                    (u.node(i, j) - (2.0 * x - 3.0 * y + 0.25)).abs() < 1e-12,
                    "node ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn harmonic_polynomial_convergence() {
        // oracle: x^2 - y^2 is harmonic; L2 error should drop at order 2
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let g = dirichlet_grid(n);
            let sigma = SigmaField::identity(g);
            let u = solve_dirichlet(&sigma, |x, y| x * x - y * y).unwrap();
            errs.push(l2_error(&u, |x, y| x * x - y * y));
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 1.8 && order1 < 2.3, "order {order1}");
        assert!(order2 > 1.8 && order2 < 2.3, "order {order2}");
    }

    #[test]
    fn maximum_principle() {
        let g = dirichlet_grid(24);
        let sigma = SigmaField::identity(g);
        let gb = |x: f64, y: f64| (3.0 * x).sin() + (2.0 * y).cos();
        let u = solve_dirichlet(&sigma, gb).unwrap();
        let mut gmin = f64::INFINITY;
        let mut gmax = f64::NEG_INFINITY;
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                if g.is_boundary_node(i, j) {
                    let (x, y) = g.node_pos(i, j);
                    gmin = gmin.min(gb(x, y));
                    gmax = gmax.max(gb(x, y));
                }
            }
        }
        for &v in u.values() {
            assert!(v >= gmin - 1e-10 && v <= gmax + 1e-10);
        }
    }

    #[test]
    fn dirichlet_laminate_matches_1d_oracle() {
        // independent oracle: 1D two-point finite differences for
        // (a u')' = 0, u(0)=0, u(1)=1, a = 2 on [0,1/2), 1/2 on [1/2,1)
        let n = 32;
        let a1 = 2.0;
        let a2 = 0.5;
        let h = 1.0 / n as f64;
        let aface = |i: usize| {
            // harmonic coefficient at cell i's center
            let x = (i as f64 + 0.5) * h;
            if x < 0.5 {
                a1
            } else {
                a2
            }
        };
        // solve tridiagonal for interior nodes 1..n
        let m = n - 1;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 1..n {
            let al = aface(i - 1);
            let ar = aface(i);
            let row = i - 1;
            diag[row] = (al + ar) / h;
            if i > 1 {
                lower[row] = -al / h;
            } else {
                rhs[row] += al / h * 0.0;
            }
            if i < n - 1 {
                upper[row] = -ar / h;
            } else {
                rhs[row] += ar / h * 1.0;
            }
        }
        // Thomas algorithm
        for i in 1..m {
            let f = lower[i] / diag[i - 1];
            diag[i] -= f * upper[i - 1];
            rhs[i] -= f * rhs[i - 1];
        }
        let mut oracle = vec![0.0; m];
        oracle[m - 1] = rhs[m - 1] / diag[m - 1];
        for i in (0..m - 1).rev() {
            oracle[i] = (rhs[i] - upper[i] * oracle[i + 1]) / diag[i];
        }
        // flux from the oracle: a du/dx on the first cell
        let h_flux = aface(0) * (oracle[0] - 0.0) / h;
        assert!((h_flux - 0.8).abs() < 1e-10, "oracle flux {h_flux}");

        // 2D solve with the same coefficient, boundary data = 1D profile
        let g = dirichlet_grid(n);
        let sigma = SigmaField::from_fn(
            g,
            |x, _| {
                let a = if x < 0.5 { a1 } else { a2 };
                [[a, 0.0], [0.0, 1.0]]
            },
            0.5,
            2.0,
        )
        .unwrap();
        let profile = move |x: f64| {
            let hmean = 0.8;
            if x <= 0.5 {
                hmean * x / a1
            } else {
                hmean * (0.5 / a1 + (x - 0.5) / a2)
            }
        };
        let u = solve_dirichlet(&sigma, move |x, _| profile(x)).unwrap();
        // solution is a function of x1 only, with a * du/dx = 0.8
        let du = gradient(&u);
        for c in 0..g.n_cells() {
            let (x, _) = g.cell_center(c);
            let a = if x < 0.5 { a1 } else { a2 };
            assert!((a * du.value(c)[0] - 0.8).abs() < 1e-9, "cell {c}");
            assert!(du.value(c)[1].abs() < 1e-9);
        }
        // and matches the 1D oracle at the nodes
        for i in 1..n {
            assert!((u.node(i, n / 2) - oracle[i - 1]).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_problem_identity() {
        let g = Grid::periodic_unit_cell(8).unwrap();
        let sigma = SigmaField::identity(g);
        let u = solve_cell_problem(&sigma).unwrap();
        for &v in u.u1.values() {
            assert!(v.abs() < 1e-12);
        }
        for &v in u.u2.values() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn cell_problem_constant_nonsymmetric() {
        let g = Grid::periodic_unit_cell(8).unwrap();
        let sigma =
            SigmaField::from_fn(g, |_, _| [[1.0, -1.0], [1.0, 1.0]], 0.38, 2.62).unwrap();
        let u = solve_cell_problem(&sigma).unwrap();
        for &v in u.u1.values().iter().chain(u.u2.values()) {
            assert!(v.abs() < 1e-11, "corrector should vanish, got {v}");
        }
    }

    #[test]
    fn cell_problem_laminate() {
        // oracle: 1D cell problem, H = (int 1/a)^{-1} = 0.8,
        // d1 u1 = H / a in {0.4, 1.6}, u2 = x2
        let g = Grid::periodic_unit_cell(16).unwrap();
        let sigma = SigmaField::from_fn(
            g,
            |x, _| {
                let a = if x.rem_euclid(1.0) < 0.5 { 2.0 } else { 0.5 };
                [[a, 0.0], [0.0, 1.0 / a]]
            },
            0.5,
            2.0,
        )
        .unwrap();
        let u = solve_cell_problem(&sigma).unwrap();
        let g1 = u.component_gradient(0);
        let g2 = u.component_gradient(1);
        for c in 0..g.n_cells() {
            let (x, _) = g.cell_center(c);
            let expect = if x < 0.5 { 0.4 } else { 1.6 };
            assert!((g1.value(c)[0] - expect).abs() < 1e-9, "cell {c}");
            assert!(g1.value(c)[1].abs() < 1e-9);
            assert!((g2.value(c)[1] - 1.0).abs() < 1e-10);
            assert!(g2.value(c)[0].abs() < 1e-10);
        }
        // corrector means are zero
        let mean1: f64 =
            (0..g.n_cells()).map(|c| u.u1.cell_center_value(c)).sum::<f64>() * g.cell_area();
        assert!(mean1.abs() < 1e-12);
        // residuals at solver tolerance (affine part included)
        assert!(cell_problem_residual(&sigma, &u) < 1e-9);
    }

    #[test]
    fn weak_residual_examples() {
        let g = dirichlet_grid(12);
        let sigma = SigmaField::identity(g);
        let w = ScalarField::from_fn(g, |x, _| x).unwrap();
        assert!(weak_residual(&sigma, &w, None) < 1e-13);
        let c = ScalarField::from_fn(g, |_, _| 3.7).unwrap();
        assert_eq!(weak_residual(&sigma, &c, None), 0.0);
    }

    #[test]
    fn weak_residual_detects_perturbation() {
        let g = dirichlet_grid(16);
        let sigma = SigmaField::identity(g);
        let u = solve_dirichlet(&sigma, |x, y| x * x - y * y).unwrap();
        let base = weak_residual(&sigma, &u, None);
        let h = g.hx();
        let mut vals = u.values().to_vec();
        let id = g.node_id(8, 8);
        vals[id] += h * h;
        let pert = ScalarField::new(g, vals).unwrap();
        let r1 = weak_residual(&sigma, &pert, None);
        assert!(r1 > 10.0 * base.max(1e-14), "r1={r1}, base={base}");
        // scales with the perturbation
        let mut vals2 = u.values().to_vec();
        vals2[id] += 2.0 * h * h;
        let pert2 = ScalarField::new(g, vals2).unwrap();
        let r2 = weak_residual(&sigma, &pert2, None);
        assert!(r2 > 1.5 * r1);
    }

    #[test]
    fn flux_conservation() {
        let g = dirichlet_grid(16);
        let sigma = SigmaField::from_fn(
            g,
            |x, y| [[1.0 + 0.3 * x, 0.1], [0.1, 1.0 + 0.2 * y]],
            0.5,
            2.0,
        )
        .unwrap();
        let u = solve_dirichlet(&sigma, |x, y| x + 0.5 * y).unwrap();
        assert!(residual_sum(&sigma, &u).abs() < 1e-10);
    }

    #[test]
    fn energy_identity_symmetric() {
        // for symmetric sigma the energy equals the boundary flux pairing;
        // check via the assembled form: a(u, u) = a(u, g_ext) where g_ext
        // is any nodal extension of the boundary data (difference is an
        // interior test function)
        let g = dirichlet_grid(16);
        let sigma =
            SigmaField::from_fn(g, |_, _| [[2.0, 0.0], [0.0, 0.5]], 0.5, 2.0).unwrap();
        let u = solve_dirichlet(&sigma, |x, y| x + y).unwrap();
        let ext = ScalarField::from_fn(g, |x, y| x + y).unwrap();
        let a = assemble_all_nodes(&g, |c| sigma.value(c));
        let mut au = vec![0.0; g.n_nodes()];
        a.matvec(u.values(), &mut au);
        let energy = sigma_energy_scalar(&sigma, &u);
        let pairing: f64 = au.iter().zip(ext.values()).map(|(r, e)| r * e).sum();
        assert!((energy - pairing).abs() < 1e-9 * energy.abs().max(1.0));
    }
}
