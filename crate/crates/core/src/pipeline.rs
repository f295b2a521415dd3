//! Orchestration: case -> solve -> conjugate -> dilatation -> analysis,
//! with named tolerance checks against the case oracles.

use crate::analysis::{
    bmo_norm, global_checks, harnack_ratio, AnalysisParams, AnalysisReport, HarnackRatio,
};
use crate::cases::{make_case, CaseBundle};
use crate::coeff::SigmaField;
use crate::config::RunConfig;
use crate::conjugate::{beltrami_coefficients, BeltramiPair};
use crate::dilatation::{dilatation_fields, DifferentialField, DilatationReport};
use crate::error::{Error, Result};
use crate::mesh::{CellField, Grid, ScalarField, Topology};
use crate::solve::{
    jacobian_integral, sigma_energy_component, solve_cell_problem, solve_dirichlet, weak_residual,
    MapField,
};

/// Everything computed on one grid.
pub struct GridRun {
    pub n: usize,
    pub grid: Grid,
    pub sigma: SigmaField,
    pub map: MapField,
    pub diff: DifferentialField,
    pub dilatation: DilatationReport,
    pub beltrami: BeltramiPair,
    /// periodic cases only
    pub analysis: Option<AnalysisReport>,
    pub harnack: Option<HarnackRatio>,
    pub bmo_log_det: f64,
    /// normalized weak residual of div(sigma grad w^i + w^i B^i)
    pub weak_res: [Option<f64>; 2],
    pub energy: Option<f64>,
    pub area: Option<f64>,
    pub min_det: f64,
}

#[derive(Clone, Debug)]
pub struct OracleCmp {
    pub name: &'static str,
    pub measured: f64,
    pub expected: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct GridSummary {
    pub n: usize,
    pub sup_d_sigma: f64,
    pub inf_d_sigma: f64,
    pub identity_residual: f64,
    pub degenerate_cells: usize,
    pub k_ess: f64,
    pub k_belt: f64,
    pub harnack: Option<f64>,
    pub bmo_log_det: f64,
    pub energy: Option<f64>,
    pub area: Option<f64>,
    pub weak_res: [Option<f64>; 2],
    pub max_drift: f64,
    pub drift_bound: f64,
    pub sense_preserving: bool,
    pub oracle_cmp: Vec<OracleCmp>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub case: String,
    pub params: Vec<(String, f64)>,
    pub grids: Vec<GridSummary>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

pub struct Pipeline {
    pub bundle: CaseBundle,
    pub runs: Vec<GridRun>,
    pub report: RunReport,
}

fn max_drift_norm(run: &GridRun) -> f64 {
    let mut m = 0.0f64;
    for b in [&run.dilatation.b1, &run.dilatation.b2] {
        for v in b.values() {
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if n.is_finite() {
                m = m.max(n);
            }
        }
    }
    m
}

fn drift_bound(sigma: &SigmaField) -> f64 {
    (1.0 + sigma.beta) * sigma.lip_e / sigma.alpha
}

/// Solve and measure one grid of a case.
pub fn run_grid(bundle: &CaseBundle, n: usize, cfg: &RunConfig) -> Result<GridRun> {
    let grid = bundle.grid(n)?;
    let sigma = bundle.sigma(grid)?;
    let map = match grid.topology {
        Topology::Periodic => solve_cell_problem(&sigma)?,
        Topology::Dirichlet => {
            let sample_exact = bundle
                .exact
                .as_ref()
                .map(|e| !e.solve)
                .unwrap_or(false);
            if sample_exact {
                let m = bundle.exact.as_ref().unwrap().map.clone();
                let m2 = m.clone();
                MapField::from_components(
                    ScalarField::from_fn(grid, move |x, y| m(x, y)[0])?,
                    ScalarField::from_fn(grid, move |x, y| m2(x, y)[1])?,
                )?
            } else {
                let bd = bundle.boundary.as_ref().ok_or_else(|| {
                    Error::Config(format!(
                        "case {} has Dirichlet topology but no boundary data",
                        bundle.name
                    ))
                })?;
                let (g1, g2) = (bd[0].clone(), bd[1].clone());
                MapField::from_components(
                    solve_dirichlet(&sigma, move |x, y| g1(x, y))?,
                    solve_dirichlet(&sigma, move |x, y| g2(x, y))?,
                )?
            }
        }
    };
    let diff = DifferentialField::from_map(&map);
    let sub = cfg.analysis.subregion.unwrap_or_else(|| {
        grid.domain
            .centered_square(0.25 * grid.domain.width().min(grid.domain.height()))
    });
    let dilatation = dilatation_fields(&diff, &sigma, Some(sub))?;
    let beltrami = beltrami_coefficients(&sigma);

    let params = AnalysisParams {
        p_scan: cfg.analysis.p_scan.clone(),
        max_level: cfg.analysis.max_level,
        subregion: Some(sub),
        ..Default::default()
    };
    let analysis = match grid.topology {
        Topology::Periodic => Some(global_checks(&map, &sigma, &params)?),
        Topology::Dirichlet => None,
    };

    let harnack = harnack_ratio(&dilatation.d_sigma, sub).ok();
    let log_det = CellField::new(
        grid,
        diff.det
            .values()
            .iter()
            .map(|&d| d.max(diff.eps).ln())
            .collect(),
    )?;
    let bmo_log_det = bmo_norm(&log_det, grid.domain, cfg.analysis.max_level)?;

    let mut weak_res = [None, None];
    if dilatation.degenerate_cells == 0 {
        for (i, (w, b)) in [
            (&dilatation.w1, &dilatation.b1),
            (&dilatation.w2, &dilatation.b2),
        ]
        .into_iter()
        .enumerate()
        {
            let nodal = w.to_nodal();
            weak_res[i] = Some(weak_residual(&sigma, &nodal, Some(b)));
        }
    }

    let (energy, area) = match grid.topology {
        Topology::Periodic => (
            Some(sigma_energy_component(&sigma, &map, 0) + sigma_energy_component(&sigma, &map, 1)),
            Some(jacobian_integral(&map)),
        ),
        Topology::Dirichlet => (None, None),
    };
    let min_det = diff
        .det
        .values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    Ok(GridRun {
        n,
        grid,
        sigma,
        map,
        diff,
        dilatation,
        beltrami,
        analysis,
        harnack,
        bmo_log_det,
        weak_res,
        energy,
        area,
        min_det,
    })
}

fn max_rel_dev(field: &CellField, expected: f64) -> f64 {
    let mut m = 0.0f64;
    for &v in field.values() {
        if v.is_finite() {
            m = m.max((v - expected).abs() / expected.abs().max(1e-300));
        }
    }
    m
}

fn oracle_comparisons(bundle: &CaseBundle, run: &GridRun) -> Vec<OracleCmp> {
    let mut out = Vec::new();
    let o = &bundle.oracles;
    let mut push = |name, measured: f64, expected: f64| {
        out.push(OracleCmp {
            name,
            measured,
            expected,
            rel_err: (measured - expected).abs() / expected.abs().max(1e-300),
        });
    };
    if let Some(c) = o.d_sigma_const {
        let mean = finite_mean(run.dilatation.d_sigma.values());
        push("d_sigma_const", mean, c);
    }
    if let Some(c) = o.w1_const {
        push("w1_const", finite_mean(run.dilatation.w1.values()), c);
    }
    if let Some(c) = o.w2_const {
        push("w2_const", finite_mean(run.dilatation.w2.values()), c);
    }
    if let (Some(e), Some(measured)) = (o.energy, run.energy) {
        push("energy", measured, e);
    }
    if let Some(f) = &o.det_du {
        let mut worst = 0.0f64;
        let mut at = (0.0, 0.0);
        for c in 0..run.grid.n_cells() {
            let (x, y) = run.grid.cell_center(c);
            let expect = f(x, y);
            let err = (run.diff.det.value(c) - expect).abs() / expect.abs().max(1e-300);
            if err > worst {
                worst = err;
                at = (x, y);
            }
        }
        let _ = at;
        out.push(OracleCmp {
            name: "det_du_max_rel_err",
            measured: worst,
            expected: 0.0,
            rel_err: worst,
        });
    }
    out
}

fn finite_mean(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for &x in v {
        if x.is_finite() {
            acc += x;
            n += 1;
        }
    }
    acc / n.max(1) as f64
}

fn evaluate_check(
    name: &str,
    tol: f64,
    bundle: &CaseBundle,
    run: &GridRun,
) -> Result<CheckResult> {
    let o = &bundle.oracles;
    let need = |opt: Option<f64>, what: &str| {
        opt.ok_or_else(|| {
            Error::Config(format!("check `{name}` needs {what}, which case {} lacks", bundle.name))
        })
    };
    let (measured, pass) = match name {
        "d_sigma_const" => {
            let c = need(o.d_sigma_const, "a d_sigma oracle")?;
            let m = max_rel_dev(&run.dilatation.d_sigma, c);
            (m, m <= tol)
        }
        "w_fields" => {
            let w1 = need(o.w1_const, "a w1 oracle")?;
            let w2 = need(o.w2_const, "a w2 oracle")?;
            let m = max_rel_dev(&run.dilatation.w1, w1).max(max_rel_dev(&run.dilatation.w2, w2));
            (m, m <= tol)
        }
        "area_identity" => {
            let a = need(run.area, "a periodic solve")?;
            let m = (a - 1.0).abs();
            (m, m <= tol)
        }
        "energy_bound" => {
            let e = need(run.energy, "a periodic solve")?;
            let m = e - run.sigma.trace_integral();
            (m, m <= tol)
        }
        "energy_oracle" => {
            let expect = need(o.energy, "an energy oracle")?;
            let e = need(run.energy, "a periodic solve")?;
            let m = (e - expect).abs();
            (m, m <= tol)
        }
        "decomposition_identity" => {
            let m = run.dilatation.identity_residual;
            (m, m <= tol)
        }
        "drift_bound" => {
            let m = max_drift_norm(run) - drift_bound(&run.sigma);
            (m, m <= tol)
        }
        "k_ess_bound" => {
            let k = run.sigma.k;
            let m = run.beltrami.k_ess - (k - 1.0) / (k + 1.0);
            (m, m <= tol)
        }
        "harnack" => {
            let m = run.harnack.map(|h| h.ratio).unwrap_or(f64::NAN);
            (m, m <= tol)
        }
        "oracle_detdu" => {
            if o.det_du.is_none() {
                return Err(Error::Config(format!(
                    "check `oracle_detdu` needs a det DU oracle, which case {} lacks",
                    bundle.name
                )));
            }
            let f = o.det_du.as_ref().unwrap();
            let mut m = 0.0f64;
            for c in 0..run.grid.n_cells() {
                let (x, y) = run.grid.cell_center(c);
                let expect = f(x, y);
                m = m.max((run.diff.det.value(c) - expect).abs() / expect.abs().max(1e-300));
            }
            (m, m <= tol)
        }
        "w_residual" => {
            let m = run.weak_res.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
            let ok = run.weak_res.iter().all(|r| r.is_some()) && m <= tol;
            (m, ok)
        }
        "max_principle" => {
            if run.grid.topology != Topology::Dirichlet {
                return Err(Error::Config(
                    "check `max_principle` applies to Dirichlet cases only".into(),
                ));
            }
            let mut m = 0.0f64;
            for comp in [&run.map.u1, &run.map.u2] {
                let g = run.grid;
                let mut bd_min = f64::INFINITY;
                let mut bd_max = f64::NEG_INFINITY;
                for j in 0..=g.ny {
                    for i in 0..=g.nx {
                        if g.is_boundary_node(i, j) {
                            let v = comp.node(i, j);
                            bd_min = bd_min.min(v);
                            bd_max = bd_max.max(v);
                        }
                    }
                }
                for &v in comp.values() {
                    m = m.max(v - bd_max).max(bd_min - v);
                }
            }
            (m, m <= tol)
        }
        "sense_preserving" => {
            let m = -run.min_det;
            (m, run.min_det > 0.0 && run.dilatation.degenerate_cells == 0)
        }
        other => {
            return Err(Error::Config(format!("unknown check `{other}`")));
        }
    };
    Ok(CheckResult { name: name.to_string(), measured, tolerance: tol, pass })
}

fn summarize(bundle: &CaseBundle, run: &GridRun) -> GridSummary {
    GridSummary {
        n: run.n,
        sup_d_sigma: run.dilatation.sup_d_sigma,
        inf_d_sigma: run.dilatation.inf_d_sigma,
        identity_residual: run.dilatation.identity_residual,
        degenerate_cells: run.dilatation.degenerate_cells,
        k_ess: run.beltrami.k_ess,
        k_belt: run.beltrami.k_belt,
        harnack: run.harnack.map(|h| h.ratio),
        bmo_log_det: run.bmo_log_det,
        energy: run.energy,
        area: run.area,
        weak_res: run.weak_res,
        max_drift: max_drift_norm(run),
        drift_bound: drift_bound(&run.sigma),
        sense_preserving: run.min_det > 0.0 && run.dilatation.degenerate_cells == 0,
        oracle_cmp: oracle_comparisons(bundle, run),
    }
}

/// Run every grid of the config and evaluate the checks on the finest.
pub fn execute(cfg: &RunConfig) -> Result<Pipeline> {
    let bundle = make_case(&cfg.case, &cfg.params)?;
    bundle.self_check()?;
    let mut runs = Vec::with_capacity(cfg.grids.len());
    for &n in &cfg.grids {
        runs.push(run_grid(&bundle, n, cfg)?);
    }
    let grids = runs.iter().map(|r| summarize(&bundle, r)).collect();
    let finest = runs.last().expect("config guarantees at least one grid");
    let mut checks = Vec::new();
    for (name, &tol) in &cfg.checks {
        checks.push(evaluate_check(name, tol, &bundle, finest)?);
    }
    let passed = checks.iter().all(|c| c.pass);
    let report = RunReport {
        case: bundle.name.clone(),
        params: cfg.params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        grids,
        checks,
        passed,
    };
    Ok(Pipeline { bundle, runs, report })
}
