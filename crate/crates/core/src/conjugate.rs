//! Stream functions, the first-order Beltrami system, and the complex
//! dilatations mu, nu.
//!
//! The stream function is recovered by a global least-squares fit of
//! grad(u~) to J sigma grad(u), weighted by the symmetric part of sigma.
//! With that weighting the normal equations make u~ an exact discrete
//! solution of div(sigma grad u~) = 0 whenever sigma is symmetric with
//! det sigma = 1.

use crate::coeff::SigmaField;
use crate::error::{Error, Result};
use crate::mesh::{gradient, CellField, ScalarField};
use crate::solve::{gauss_points, shape_grad_at, assemble_weighted, solve_grounded_system, weak_residual};

/// A potential u together with its stream function u~; F = u + i u~.
#[derive(Clone, Debug)]
pub struct ConjugatePair {
    pub u: ScalarField,
    pub u_tilde: ScalarField,
    /// L2 norm of grad(u~) - J sigma grad(u)
    pub mismatch: f64,
    /// weak residual of u itself (compatibility of the target field)
    pub compatibility_residual: f64,
    /// set when the compatibility residual exceeds the warning threshold
    pub compatibility_warning: bool,
}

const COMPAT_WARN_TOL: f64 = 1e-6;

pub fn stream_function(sigma: &SigmaField, u: &ScalarField) -> Result<ConjugatePair> {
    let grid = *sigma.grid();
    if u.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let (hx, hy) = (grid.hx(), grid.hy());
    let wq = 0.25 * hx * hy;
    let a = assemble_weighted(&grid, |c| sigma.sym(c));
    let mut rhs = vec![0.0; grid.n_nodes()];
    let v = u.values();
    for cell in 0..grid.n_cells() {
        let nodes = grid.cell_nodes(cell);
        let s = sigma.value(cell);
        let ssym = sigma.sym(cell);
        for (xi, eta) in gauss_points() {
            let g = shape_grad_at(xi, eta, hx, hy);
            let mut gu = [0.0; 2];
            for a_loc in 0..4 {
                gu[0] += v[nodes[a_loc]] * g[a_loc][0];
                gu[1] += v[nodes[a_loc]] * g[a_loc][1];
            }
            // target t = J sigma grad u
            let sgu = [
                s[0][0] * gu[0] + s[0][1] * gu[1],
                s[1][0] * gu[0] + s[1][1] * gu[1],
            ];
            let t = [-sgu[1], sgu[0]];
            // weighted rhs: (sigma_sym t) . grad phi
            let st = [
                ssym[0][0] * t[0] + ssym[0][1] * t[1],
                ssym[1][0] * t[0] + ssym[1][1] * t[1],
            ];
            for a_loc in 0..4 {
                rhs[nodes[a_loc]] += wq * (st[0] * g[a_loc][0] + st[1] * g[a_loc][1]);
            }
        }
    }
    let sol = solve_grounded_system(&a, &rhs)?;
    let mut u_tilde = ScalarField::new(grid, sol)?;
    let mean: f64 = (0..grid.n_cells())
        .map(|c| u_tilde.cell_center_value(c))
        .sum::<f64>()
        * grid.cell_area()
        / grid.domain.area();
    u_tilde = u_tilde.shifted(-mean);

    // unweighted mismatch, Gauss quadrature
    let vt = u_tilde.values().to_vec();
    let mut mis = 0.0;
    for cell in 0..grid.n_cells() {
        let nodes = grid.cell_nodes(cell);
        let s = sigma.value(cell);
        for (xi, eta) in gauss_points() {
            let g = shape_grad_at(xi, eta, hx, hy);
            let mut gu = [0.0; 2];
            let mut gt = [0.0; 2];
            for a_loc in 0..4 {
                gu[0] += v[nodes[a_loc]] * g[a_loc][0];
                gu[1] += v[nodes[a_loc]] * g[a_loc][1];
                gt[0] += vt[nodes[a_loc]] * g[a_loc][0];
                gt[1] += vt[nodes[a_loc]] * g[a_loc][1];
            }
            let sgu = [
                s[0][0] * gu[0] + s[0][1] * gu[1],
                s[1][0] * gu[0] + s[1][1] * gu[1],
            ];
            let d = [gt[0] + sgu[1], gt[1] - sgu[0]];
            mis += wq * (d[0] * d[0] + d[1] * d[1]);
        }
    }
    let compatibility_residual = weak_residual(sigma, u, None);
    Ok(ConjugatePair {
        u: u.clone(),
        u_tilde,
        mismatch: mis.sqrt(),
        compatibility_residual,
        compatibility_warning: compatibility_residual > COMPAT_WARN_TOL,
    })
}

/// Complex dilatations mu, nu per cell, with the essential-sup bound.
#[derive(Clone, Debug)]
pub struct BeltramiPair {
    pub mu_re: CellField,
    pub mu_im: CellField,
    pub nu_re: CellField,
    pub nu_im: CellField,
    /// max over cells of |mu| + |nu|
    pub k_ess: f64,
    /// (1 + k_ess) / (1 - k_ess)
    pub k_belt: f64,
}

pub fn beltrami_coefficients(sigma: &SigmaField) -> BeltramiPair {
    let grid = *sigma.grid();
    let n = grid.n_cells();
    let mut mu_re = Vec::with_capacity(n);
    let mut mu_im = Vec::with_capacity(n);
    let mut nu_re = Vec::with_capacity(n);
    let mut nu_im = Vec::with_capacity(n);
    let mut k_ess = 0.0f64;
    for c in 0..n {
        let s = sigma.value(c);
        let tr = s[0][0] + s[1][1];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let den = 1.0 + tr + det;
        let mr = (s[1][1] - s[0][0]) / den;
        let mi = -(s[0][1] + s[1][0]) / den;
        let nr = (1.0 - det) / den;
        let ni = (s[0][1] - s[1][0]) / den;
        k_ess = k_ess.max((mr * mr + mi * mi).sqrt() + (nr * nr + ni * ni).sqrt());
        mu_re.push(mr);
        mu_im.push(mi);
        nu_re.push(nr);
        nu_im.push(ni);
    }
    BeltramiPair {
        mu_re: CellField::new(grid, mu_re).unwrap(),
        mu_im: CellField::new(grid, mu_im).unwrap(),
        nu_re: CellField::new(grid, nu_re).unwrap(),
        nu_im: CellField::new(grid, nu_im).unwrap(),
        k_ess,
        k_belt: (1.0 + k_ess) / (1.0 - k_ess),
    }
}

/// Normalized L2 residual of F_zbar = mu F_z + nu conj(F_z), with the
/// Wirtinger derivatives taken from per-cell gradients of u and u~.
pub fn beltrami_residual(pair: &ConjugatePair, belt: &BeltramiPair) -> f64 {
    let grid = *pair.u.grid();
    assert_eq!(belt.mu_re.grid(), &grid, "field grid mismatch");
    let gu = gradient(&pair.u);
    let gt = gradient(&pair.u_tilde);
    let area = grid.cell_area();
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..grid.n_cells() {
        let du = gu.value(c);
        let dt = gt.value(c);
        // F_z = ((u_x + ut_y) + i (ut_x - u_y)) / 2
        let fz = [0.5 * (du[0] + dt[1]), 0.5 * (dt[0] - du[1])];
        // F_zbar = ((u_x - ut_y) + i (ut_x + u_y)) / 2
        let fzb = [0.5 * (du[0] - dt[1]), 0.5 * (dt[0] + du[1])];
        let mu = [belt.mu_re.value(c), belt.mu_im.value(c)];
        let nu = [belt.nu_re.value(c), belt.nu_im.value(c)];
        let r = [
            fzb[0] - (mu[0] * fz[0] - mu[1] * fz[1]) - (nu[0] * fz[0] + nu[1] * fz[1]),
            fzb[1] - (mu[0] * fz[1] + mu[1] * fz[0]) - (nu[1] * fz[0] - nu[0] * fz[1]),
        ];
        num += area * (r[0] * r[0] + r[1] * r[1]);
        let m = (fz[0] * fz[0] + fz[1] * fz[1]).sqrt() + (fzb[0] * fzb[0] + fzb[1] * fzb[1]).sqrt();
        den += area * m * m;
    }
    if den == 0.0 {
        return 0.0;
    }
    (num / den).sqrt()
}
