//! Quantitative estimators: BMO norm, Muckenhoupt A_p constant, Harnack
//! ratio of d^sigma, the mean-power corollary bound, and the global
//! bound chain for periodic solutions.

use crate::coeff::SigmaField;
use crate::dilatation::{dilatation_fields, DifferentialField};
use crate::error::{Error, Result};
use crate::mesh::{CellField, Rect};
use crate::solve::{jacobian_integral, sigma_energy_component, MapField};

/// Sup over the dyadic square family of the mean oscillation
/// (1/|Q|) int_Q |phi - phi_Q|.
pub fn bmo_norm(phi: &CellField, region: Rect, max_level: u32) -> Result<f64> {
    let grid = phi.grid();
    let squares = grid.dyadic_squares(region, max_level)?;
    let mut sup = 0.0f64;
    for q in &squares {
        let rect = q.rect();
        let mean = grid.mean_over_rect(&rect, |c| phi.value(c))?;
        let osc = grid.mean_over_rect(&rect, |c| (phi.value(c) - mean).abs())?;
        sup = sup.max(osc);
    }
    Ok(sup)
}

/// Muckenhoupt constant with an infinity flag for vanishing weights.
#[derive(Clone, Copy, Debug)]
pub struct ApConstant {
    pub constant: f64,
    pub p: f64,
    pub infinite: bool,
}

/// Max over the dyadic family of (mean w) (mean w^{-1/(p-1)})^{p-1}.
pub fn muckenhoupt_constant(
    weight: &CellField,
    p: f64,
    region: Rect,
    max_level: u32,
) -> Result<ApConstant> {
    if p <= 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    let grid = weight.grid();
    let zero_cells = weight.values().iter().filter(|&&w| w <= 0.0).count();
    if zero_cells * 100 > grid.n_cells() {
        return Ok(ApConstant { constant: f64::INFINITY, p, infinite: true });
    }
    let squares = grid.dyadic_squares(region, max_level)?;
    let ex = -1.0 / (p - 1.0);
    let mut sup = 0.0f64;
    let mut infinite = false;
    for q in &squares {
        let rect = q.rect();
        let mean_w = grid.mean_over_rect(&rect, |c| weight.value(c).max(0.0))?;
        let mean_neg = grid.mean_over_rect(&rect, |c| {
            let w = weight.value(c);
            if w <= 0.0 {
                f64::INFINITY
            } else {
                w.powf(ex)
            }
        })?;
        if !mean_neg.is_finite() {
            infinite = true;
            continue;
        }
        sup = sup.max(mean_w * mean_neg.powf(p - 1.0));
    }
    Ok(ApConstant {
        constant: if infinite { f64::INFINITY } else { sup },
        p,
        infinite,
    })
}

/// Harnack ratio sup/inf of a positive cell field over a subregion.
/// Non-finite cells are excluded and counted; a non-positive minimum is
/// an error.
#[derive(Clone, Copy, Debug)]
pub struct HarnackRatio {
    pub ratio: f64,
    pub sup: f64,
    pub inf: f64,
    pub excluded_cells: usize,
}

pub fn harnack_ratio(d_sigma: &CellField, subregion: Rect) -> Result<HarnackRatio> {
    let grid = d_sigma.grid();
    if !grid.domain.contains(&subregion, 1e-9) {
        return Err(Error::SquareOutsideDomain(
            subregion.x0,
            subregion.x1,
            subregion.y0,
            subregion.y1,
        ));
    }
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut excluded = 0usize;
    let mut seen = 0usize;
    for c in grid.cells_in_rect(&subregion) {
        let v = d_sigma.value(c);
        if !v.is_finite() {
            excluded += 1;
            continue;
        }
        seen += 1;
        sup = sup.max(v);
        inf = inf.min(v);
    }
    if seen == 0 {
        return Err(Error::HarnackUndefined("no usable cells in subregion".into()));
    }
    if inf <= 0.0 {
        return Err(Error::HarnackUndefined(format!("minimum {inf} is not positive")));
    }
    Ok(HarnackRatio { ratio: sup / inf, sup, inf, excluded_cells: excluded })
}

/// Both sides of sup_A d <= H (mean_A d^delta)^(1/delta).
#[derive(Clone, Copy, Debug)]
pub struct CorollaryCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn corollary_bound(
    d_sigma: &CellField,
    delta: f64,
    h: f64,
    region: Rect,
) -> Result<CorollaryCheck> {
    if delta <= 0.0 {
        return Err(Error::NonPositiveDelta);
    }
    let grid = d_sigma.grid();
    let mut sup = f64::NEG_INFINITY;
    let mut acc = 0.0;
    let mut count = 0usize;
    for c in grid.cells_in_rect(&region) {
        let v = d_sigma.value(c);
        if !v.is_finite() || v <= 0.0 {
            continue;
        }
        sup = sup.max(v);
        acc += v.powf(delta);
        count += 1;
    }
    if count == 0 {
        return Err(Error::HarnackUndefined("no usable cells in region".into()));
    }
    let rhs = h * (acc / count as f64).powf(1.0 / delta);
    Ok(CorollaryCheck { lhs: sup, rhs, holds: sup <= rhs * (1.0 + 1e-12) })
}

/// One named check of the global bound chain.
#[derive(Clone, Debug)]
pub struct BoundCheck {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Global quantities for a periodic solution and the product bound
/// sup d^sigma <= C H K.
#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub bmo_log_det: f64,
    pub ap_constant: f64,
    pub ap_p: f64,
    pub harnack_h: f64,
    pub delta: f64,
    pub energy_sigma: f64,
    pub trace_integral: f64,
    pub area_integral: f64,
    pub sup_d_sigma: f64,
    /// measured product C * H * K
    pub bound_m: f64,
    pub checks: Vec<BoundCheck>,
}

pub struct AnalysisParams {
    /// A_p exponents to scan; the best (smallest) constant is reported
    pub p_scan: Vec<f64>,
    pub max_level: u32,
    /// Harnack subregion; defaults to the centered half-side square
    pub subregion: Option<Rect>,
    pub quad_tol: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams { p_scan: vec![1.5, 2.0, 3.0], max_level: 3, subregion: None, quad_tol: 1e-6 }
    }
}

/// Energy, area, A_p, Harnack, and the assembled bound chain for a
/// periodic cell-problem solution.
pub fn global_checks(
    u: &MapField,
    sigma: &SigmaField,
    params: &AnalysisParams,
) -> Result<AnalysisReport> {
    let grid = *u.grid();
    let region = grid.domain;
    let sub = params
        .subregion
        .unwrap_or_else(|| region.centered_square(0.25 * region.width().min(region.height())));

    let energy = sigma_energy_component(sigma, u, 0) + sigma_energy_component(sigma, u, 1);
    let trace_integral = sigma.trace_integral();
    let two_k = 2.0 * sigma.k;
    let area = jacobian_integral(u);

    let diff = DifferentialField::from_map(u);
    let rep = dilatation_fields(&diff, sigma, Some(sub))?;
    let harnack = harnack_ratio(&rep.d_sigma, sub)?;

    // A_p of det DU: scan p, keep the best constant
    let mut best = ApConstant { constant: f64::INFINITY, p: params.p_scan[0], infinite: true };
    for &p in &params.p_scan {
        let ap = muckenhoupt_constant(&diff.det, p, region, params.max_level)?;
        if !ap.infinite && ap.constant < best.constant {
            best = ap;
        }
    }
    let delta = 0.5f64.min(1.0 / (2.0 * (best.p - 1.0)));

    // BMO of log det DU, clamped at the degeneracy threshold
    let log_det = CellField::new(
        grid,
        diff.det
            .values()
            .iter()
            .map(|&d| d.max(diff.eps).ln())
            .collect(),
    )?;
    let bmo = bmo_norm(&log_det, region, params.max_level)?;

    // sup d^sigma over the whole domain
    let mut sup_d = f64::NEG_INFINITY;
    for &v in rep.d_sigma.values() {
        if v.is_finite() {
            sup_d = sup_d.max(v);
        }
    }
    let bound_m = best.constant * harnack.ratio * sigma.k;
    let tol = params.quad_tol;
    let checks = vec![
        BoundCheck {
            name: "energy_le_trace",
            measured: energy,
            bound: trace_integral + tol,
            pass: energy <= trace_integral + tol,
        },
        BoundCheck {
            name: "trace_le_2k",
            measured: trace_integral,
            bound: two_k + tol,
            pass: trace_integral <= two_k + tol,
        },
        BoundCheck {
            name: "area_identity",
            measured: area,
            bound: 1.0,
            pass: (area - 1.0).abs() <= tol,
        },
        BoundCheck {
            name: "sup_dsigma_le_chk",
            measured: sup_d,
            bound: bound_m,
            pass: sup_d <= bound_m * (1.0 + 1e-9),
        },
    ];
    Ok(AnalysisReport {
        bmo_log_det: bmo,
        ap_constant: best.constant,
        ap_p: best.p,
        harnack_h: harnack.ratio,
        delta,
        energy_sigma: energy,
        trace_integral,
        area_integral: area,
        sup_d_sigma: sup_d,
        bound_m,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Grid, ScalarField, Topology};

    fn unit_grid(n: usize) -> Grid {
        Grid::new(n, n, Rect::unit_square(), Topology::Dirichlet).unwrap()
    }

    #[test]
    fn bmo_of_constant_is_zero() {
        let g = unit_grid(16);
        let phi = ScalarField::from_fn(g, |_, _| 3.0).unwrap().to_cell_field();
        assert_eq!(bmo_norm(&phi, Rect::unit_square(), 2).unwrap(), 0.0);
    }

    #[test]
    fn bmo_of_linear_is_quarter() {
        // oracle: mean of |x - 1/2| over the unit square is 1/4, attained
        // on the full square; smaller squares only reduce the oscillation
        let g = unit_grid(64);
        let phi = ScalarField::from_fn(g, |x, _| x).unwrap().to_cell_field();
        let v = bmo_norm(&phi, Rect::unit_square(), 3).unwrap();
        assert!((v - 0.25).abs() < 1e-12, "{v}");
    }

    #[test]
    fn bmo_shift_invariance() {
        let g = unit_grid(32);
        let phi = ScalarField::from_fn(g, |x, y| (x * 3.0).sin() + y * y)
            .unwrap()
            .to_cell_field();
        let shifted = CellField::new(g, phi.values().iter().map(|v| v + 11.0).collect()).unwrap();
        let a = bmo_norm(&phi, Rect::unit_square(), 2).unwrap();
        let b = bmo_norm(&shifted, Rect::unit_square(), 2).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn ap_of_unit_weight() {
        let g = unit_grid(16);
        let w = CellField::new(g, vec![1.0; g.n_cells()]).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let ap = muckenhoupt_constant(&w, p, Rect::unit_square(), 2).unwrap();
            assert!((ap.constant - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn ap_laminate_oracle() {
        // oracle: w in {0.4, 1.6} on half cells; mean w = 1 and
        // mean 1/w = (2.5 + 0.625)/2 = 1.5625 for p = 2
        let g = unit_grid(32);
        let w = CellField::from_fn(g, |x, _| if x < 0.5 { 0.4 } else { 1.6 });
        let ap = muckenhoupt_constant(&w, 2.0, Rect::unit_square(), 3).unwrap();
        assert!((ap.constant - 1.5625).abs() < 1e-12, "{}", ap.constant);
    }

    #[test]
    fn ap_zero_half_plane_is_infinite() {
        let g = unit_grid(16);
        let w = CellField::from_fn(g, |x, _| if x < 0.5 { 0.0 } else { 1.0 });
        let ap = muckenhoupt_constant(&w, 2.0, Rect::unit_square(), 1).unwrap();
        assert!(ap.infinite);
    }

    #[test]
    fn ap_monotone_in_level() {
        let g = unit_grid(64);
        let w = CellField::from_fn(g, |x, y| 0.5 + (x * 7.0).sin().abs() + y);
        let mut prev = 0.0;
        for level in 0..=3 {
            let ap = muckenhoupt_constant(&w, 2.0, Rect::unit_square(), level).unwrap();
            assert!(ap.constant >= prev - 1e-13);
            prev = ap.constant;
        }
    }

    #[test]
    fn harnack_constant_field() {
        let g = unit_grid(16);
        let d = CellField::new(g, vec![1.025; g.n_cells()]).unwrap();
        let h = harnack_ratio(&d, Rect::new(0.25, 0.75, 0.25, 0.75)).unwrap();
        assert_eq!(h.ratio, 1.0);
    }

    #[test]
    fn harnack_hypocycloid_disk() {
        // analytic radial profile d(r) = (1+r^2)/(1-r^2) sampled on the
        // disk r <= 1/2 (cells outside masked): H -> d(1/2)/d(0) = 5/3
        let g = Grid::new(128, 128, Rect::new(-0.6, 0.6, -0.6, 0.6), Topology::Dirichlet)
            .unwrap();
        let d = CellField::from_fn(g, |x, y| {
            let r2 = x * x + y * y;
            if r2 <= 0.25 {
                (1.0 + r2) / (1.0 - r2)
            } else {
                f64::NAN
            }
        });
        let h = harnack_ratio(&d, Rect::new(-0.55, 0.55, -0.55, 0.55)).unwrap();
        assert!(h.excluded_cells > 0);
        assert!((h.ratio - 5.0 / 3.0).abs() < 0.02, "H = {}", h.ratio);
    }

    #[test]
    fn harnack_flags_zero() {
        let g = unit_grid(8);
        let mut vals = vec![1.0; g.n_cells()];
        vals[10] = 0.0;
        let d = CellField::new(g, vals).unwrap();
        assert!(matches!(
            harnack_ratio(&d, Rect::new(0.05, 0.95, 0.05, 0.95)),
            Err(Error::HarnackUndefined(_))
        ));
    }

    #[test]
    fn corollary_constant_field() {
        let g = unit_grid(16);
        let d = CellField::new(g, vec![2.0; g.n_cells()]).unwrap();
        let c = corollary_bound(&d, 1.0, 1.3, Rect::new(0.1, 0.9, 0.1, 0.9)).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-14);
        assert!((c.rhs - 2.6).abs() < 1e-12);
        assert!(c.holds);
    }

    #[test]
    fn corollary_hypocycloid() {
        // brute-force quadrature of the radial profile on cell centers is
        // the oracle here: the left side is d at the largest radius in the
        // region and the right side is H times the mean (delta = 1)
        let g = Grid::new(128, 128, Rect::new(-0.6, 0.6, -0.6, 0.6), Topology::Dirichlet)
            .unwrap();
        let d = CellField::from_fn(g, |x, y| {
            let r2 = x * x + y * y;
            if r2 <= 0.25 {
                (1.0 + r2) / (1.0 - r2)
            } else {
                f64::NAN
            }
        });
        let c = corollary_bound(&d, 1.0, 5.0 / 3.0, Rect::new(-0.55, 0.55, -0.55, 0.55))
            .unwrap();
        assert!((c.lhs - 5.0 / 3.0).abs() < 0.02);
        assert!(c.holds);
    }

    #[test]
    fn corollary_rejects_zero_delta() {
        let g = unit_grid(8);
        let d = CellField::new(g, vec![1.0; g.n_cells()]).unwrap();
        assert!(matches!(
            corollary_bound(&d, 0.0, 1.0, Rect::unit_square()),
            Err(Error::NonPositiveDelta)
        ));
    }

    #[test]
    fn global_checks_identity() {
        let g = Grid::periodic_unit_cell(16).unwrap();
        let sigma = SigmaField::identity(g);
        let u = crate::solve::solve_cell_problem(&sigma).unwrap();
        let rep = global_checks(&u, &sigma, &AnalysisParams::default()).unwrap();
        assert!((rep.energy_sigma - 2.0).abs() < 1e-10);
        assert!((rep.area_integral - 1.0).abs() < 1e-12);
        assert!((rep.sup_d_sigma - 1.0).abs() < 1e-12);
        assert!(rep.checks.iter().all(|c| c.pass));
    }

    #[test]
    fn global_checks_laminate() {
        // closed-form laminate integrals: energy = H + 1/H = 2.05, area 1
        let g = Grid::periodic_unit_cell(64).unwrap();
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
        let u = crate::solve::solve_cell_problem(&sigma).unwrap();
        let rep = global_checks(&u, &sigma, &AnalysisParams::default()).unwrap();
        assert!((rep.energy_sigma - 2.05).abs() < 1e-8, "{}", rep.energy_sigma);
        assert!((rep.area_integral - 1.0).abs() < 1e-10);
        assert!(rep.energy_sigma <= 2.0 * sigma.k * 2.0);
        assert!((rep.harnack_h - 1.0).abs() < 1e-8);
        assert!(rep.checks.iter().all(|c| c.pass), "{:?}", rep.checks);
    }
}
