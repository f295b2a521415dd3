//! Differential quantities of a mapping U: DU, det DU, the distortions d
//! and d^sigma, the fields w^i = det DU / (sigma grad u^i . grad u^i),
//! and the drift fields B^i that make w^i a weak solution of
//! div(sigma grad w + w B) = 0.

use crate::coeff::SigmaField;
use crate::error::{Error, Result};
use crate::mesh::{CellField, Grid, MatrixField, Rect, VectorField};
use crate::solve::MapField;

/// Relative degeneracy threshold; scaled by the squared field magnitude.
pub const EPS_DEGENERATE: f64 = 1e-12;

/// Per-cell DU and det DU with degeneracy flags.
#[derive(Clone, Debug)]
pub struct DifferentialField {
    /// rows are grad u^1 and grad u^2
    pub du: MatrixField,
    pub det: CellField,
    /// cells where det DU <= eps or a component gradient is negligible
    pub degenerate: Vec<usize>,
    degenerate_mask: Vec<bool>,
    /// absolute degeneracy threshold used (EPS_DEGENERATE * scale^2)
    pub eps: f64,
}

impl DifferentialField {
    fn build(du: MatrixField) -> DifferentialField {
        let grid = *du.grid();
        let mut scale_sq = 0.0f64;
        for m in du.values() {
            let hs = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1];
            scale_sq = scale_sq.max(hs);
        }
        let eps = EPS_DEGENERATE * scale_sq.max(1e-300);
        let mut det = Vec::with_capacity(grid.n_cells());
        let mut degenerate = Vec::new();
        let mut mask = vec![false; grid.n_cells()];
        for (c, m) in du.values().iter().enumerate() {
            let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            det.push(d);
            let g1 = m[0][0] * m[0][0] + m[0][1] * m[0][1];
            let g2 = m[1][0] * m[1][0] + m[1][1] * m[1][1];
            if d <= eps || g1 < eps || g2 < eps {
                degenerate.push(c);
                mask[c] = true;
            }
        }
        DifferentialField {
            det: CellField::new(grid, det).unwrap(),
            du,
            degenerate,
            degenerate_mask: mask,
            eps,
        }
    }

    /// Differential from the per-cell gradients of a discrete mapping.
    pub fn from_map(u: &MapField) -> DifferentialField {
        let grid = *u.grid();
        let g1 = u.component_gradient(0);
        let g2 = u.component_gradient(1);
        let vals: Vec<[[f64; 2]; 2]> = (0..grid.n_cells())
            .map(|c| [g1.value(c), g2.value(c)])
            .collect();
        DifferentialField::build(MatrixField::new(grid, vals).unwrap())
    }

    /// Differential sampled from an analytic DU at cell centers.
    pub fn from_fn<F: Fn(f64, f64) -> [[f64; 2]; 2]>(grid: Grid, f: F) -> DifferentialField {
        DifferentialField::build(MatrixField::from_fn(grid, f))
    }

    pub fn grid(&self) -> &Grid {
        self.du.grid()
    }

    pub fn is_degenerate(&self, cell: usize) -> bool {
        self.degenerate_mask[cell]
    }
}

/// Convenience alias matching the operation name.
pub fn map_differential(u: &MapField) -> DifferentialField {
    DifferentialField::from_map(u)
}

/// Dilatation and drift data of a mapping for a given sigma.
#[derive(Clone, Debug)]
pub struct DilatationReport {
    /// |DU|^2 / (2 det DU); NaN on degenerate cells
    pub d: CellField,
    /// Trace(DU sigma DU^T) / (2 det DU); NaN on degenerate cells
    pub d_sigma: CellField,
    pub w1: CellField,
    pub w2: CellField,
    pub b1: VectorField,
    pub b2: VectorField,
    pub sup_d_sigma: f64,
    pub inf_d_sigma: f64,
    /// max over non-degenerate cells of |d_sigma - (1/w1 + 1/w2)/2|
    pub identity_residual: f64,
    pub degenerate_cells: usize,
    pub degenerate_dominated: bool,
    /// subregion used for sup/inf
    pub subregion: Rect,
}

/// All dilatation fields over the subregion (sup/inf restricted to it;
/// fields cover the whole grid).
pub fn dilatation_fields(
    diff: &DifferentialField,
    sigma: &SigmaField,
    subregion: Option<Rect>,
) -> Result<DilatationReport> {
    let grid = *diff.grid();
    if sigma.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let sub = subregion.unwrap_or(grid.domain);
    let n = grid.n_cells();
    let mut d = Vec::with_capacity(n);
    let mut d_sig = Vec::with_capacity(n);
    let mut w1 = Vec::with_capacity(n);
    let mut w2 = Vec::with_capacity(n);
    let mut identity_residual = 0.0f64;
    for c in 0..n {
        let m = diff.du.value(c);
        let det = diff.det.value(c);
        if diff.is_degenerate(c) {
            d.push(f64::NAN);
            d_sig.push(f64::NAN);
            w1.push(f64::NAN);
            w2.push(f64::NAN);
            continue;
        }
        let s = sigma.value(c);
        let hs = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1];
        let q1 = quad_form(s, m[0]);
        let q2 = quad_form(s, m[1]);
        let dv = hs / (2.0 * det);
        let ds = (q1 + q2) / (2.0 * det);
        let wv1 = det / q1;
        let wv2 = det / q2;
        identity_residual = identity_residual.max((ds - 0.5 * (1.0 / wv1 + 1.0 / wv2)).abs());
        d.push(dv);
        d_sig.push(ds);
        w1.push(wv1);
        w2.push(wv2);
    }
    let (b1, b2) = drift_fields(diff, sigma);
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for c in grid.cells_in_rect(&sub) {
        let v = d_sig[c];
        if v.is_finite() {
            sup = sup.max(v);
            inf = inf.min(v);
        }
    }
    let degenerate_cells = diff.degenerate.len();
    Ok(DilatationReport {
        d: CellField::new(grid, d)?,
        d_sigma: CellField::new(grid, d_sig)?,
        w1: CellField::new(grid, w1)?,
        w2: CellField::new(grid, w2)?,
        b1,
        b2,
        sup_d_sigma: sup,
        inf_d_sigma: inf,
        identity_residual,
        degenerate_cells,
        degenerate_dominated: degenerate_cells * 10 > n,
        subregion: sub,
    })
}

fn quad_form(s: [[f64; 2]; 2], v: [f64; 2]) -> f64 {
    (s[0][0] * v[0] + s[0][1] * v[1]) * v[0] + (s[1][0] * v[0] + s[1][1] * v[1]) * v[1]
}

/// Drift fields B^i of the w^i equation; zero where grad u^i is below
/// the degeneracy threshold.
pub fn drift_fields(diff: &DifferentialField, sigma: &SigmaField) -> (VectorField, VectorField) {
    let grid = *diff.grid();
    let gb = sigma.grad_b();
    let gc = sigma.grad_c();
    let mut out = [Vec::with_capacity(grid.n_cells()), Vec::with_capacity(grid.n_cells())];
    for c in 0..grid.n_cells() {
        let m = diff.du.value(c);
        let s = sigma.value(c);
        let dc = gc.value(c);
        let db = gb.value(c);
        for (i, row) in m.iter().enumerate() {
            let gu = *row;
            let norm_sq = gu[0] * gu[0] + gu[1] * gu[1];
            if norm_sq < diff.eps {
                out[i].push([0.0, 0.0]);
                continue;
            }
            let jgu = [-gu[1], gu[0]];
            let jtgu = [gu[1], -gu[0]];
            let sgu = [
                s[0][0] * gu[0] + s[0][1] * gu[1],
                s[1][0] * gu[0] + s[1][1] * gu[1],
            ];
            let denom = sgu[0] * gu[0] + sgu[1] * gu[1];
            let a1 = jgu[0] * dc[0] + jgu[1] * dc[1];
            let a2 = jgu[0] * db[0] + jgu[1] * db[1];
            out[i].push([
                (a1 * jtgu[0] + a2 * sgu[0]) / denom,
                (a1 * jtgu[1] + a2 * sgu[1]) / denom,
            ]);
        }
    }
    let b2 = VectorField::new(grid, out[1].split_off(0)).unwrap();
    let b1 = VectorField::new(grid, out[0].split_off(0)).unwrap();
    (b1, b2)
}
