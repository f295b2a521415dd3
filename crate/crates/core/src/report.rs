//! Deterministic text rendering of run reports and field exports.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{CellField, ScalarField, VectorField};
use crate::pipeline::{GridRun, RunReport};

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.12e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_else(|| "-".to_string())
}

/// Render the full run report; identical inputs yield identical bytes.
pub fn render_report(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "case = {}", r.case);
    for (k, v) in &r.params {
        let _ = writeln!(s, "param {k} = {v}");
    }
    for g in &r.grids {
        let _ = writeln!(s, "\n[grid {}]", g.n);
        let _ = writeln!(s, "sup_d_sigma = {}", fmt(g.sup_d_sigma));
        let _ = writeln!(s, "inf_d_sigma = {}", fmt(g.inf_d_sigma));
        let _ = writeln!(s, "harnack_H = {}", fmt_opt(g.harnack));
        let _ = writeln!(s, "identity_residual = {}", fmt(g.identity_residual));
        let _ = writeln!(s, "degenerate_cells = {}", g.degenerate_cells);
        let _ = writeln!(s, "k_ess = {}", fmt(g.k_ess));
        let _ = writeln!(s, "k_beltrami = {}", fmt(g.k_belt));
        let _ = writeln!(s, "bmo_log_det = {}", fmt(g.bmo_log_det));
        let _ = writeln!(s, "energy_sigma = {}", fmt_opt(g.energy));
        let _ = writeln!(s, "area_integral = {}", fmt_opt(g.area));
        let _ = writeln!(s, "weak_residual_w1 = {}", fmt_opt(g.weak_res[0]));
        let _ = writeln!(s, "weak_residual_w2 = {}", fmt_opt(g.weak_res[1]));
        let _ = writeln!(s, "max_drift = {}", fmt(g.max_drift));
        let _ = writeln!(s, "drift_bound = {}", fmt(g.drift_bound));
        let _ = writeln!(s, "sense_preserving = {}", g.sense_preserving);
        for c in &g.oracle_cmp {
            let _ = writeln!(
                s,
                "oracle {}: measured = {} expected = {} rel_err = {}",
                c.name,
                fmt(c.measured),
                fmt(c.expected),
                fmt(c.rel_err)
            );
        }
    }
    let _ = writeln!(s, "\n[checks]");
    for c in &r.checks {
        let _ = writeln!(
            s,
            "check {}: measured = {} tolerance = {} {}",
            c.name,
            fmt(c.measured),
            fmt(c.tolerance),
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(s, "\nresult = {}", if r.passed { "PASS" } else { "FAIL" });
    s
}

pub fn write_report(r: &RunReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("report.txt"), render_report(r))?;
    Ok(())
}

fn nodal_table(f: &ScalarField) -> String {
    let g = f.grid();
    let mut s = String::from("x,y,value\n");
    for j in 0..g.nodes_y() {
        for i in 0..g.nodes_x() {
            let (x, y) = g.node_pos(i, j);
            let _ = writeln!(s, "{x:.9},{y:.9},{}", fmt(f.node(i, j)));
        }
    }
    s
}

fn cell_table(f: &CellField) -> String {
    let g = f.grid();
    let mut s = String::from("cx,cy,value\n");
    for c in 0..g.n_cells() {
        let (x, y) = g.cell_center(c);
        let _ = writeln!(s, "{x:.9},{y:.9},{}", fmt(f.value(c)));
    }
    s
}

fn vector_table(f: &VectorField) -> String {
    let g = f.grid();
    let mut s = String::from("cx,cy,vx,vy\n");
    for c in 0..g.n_cells() {
        let (x, y) = g.cell_center(c);
        let v = f.value(c);
        let _ = writeln!(s, "{x:.9},{y:.9},{},{}", fmt(v[0]), fmt(v[1]));
    }
    s
}

pub const EXPORTABLE_FIELDS: &[&str] = &[
    "u1", "u2", "det_du", "d", "d_sigma", "w1", "w2", "b1", "b2", "log_det", "beltrami", "sigma",
];

/// Serialize one named field of a finished grid run.
pub fn export_field(run: &GridRun, name: &str) -> Result<String> {
    let out = match name {
        "u1" => nodal_table(&run.map.u1),
        "u2" => nodal_table(&run.map.u2),
        "det_du" => cell_table(&run.diff.det),
        "d" => cell_table(&run.dilatation.d),
        "d_sigma" => cell_table(&run.dilatation.d_sigma),
        "w1" => cell_table(&run.dilatation.w1),
        "w2" => cell_table(&run.dilatation.w2),
        "b1" => vector_table(&run.dilatation.b1),
        "b2" => vector_table(&run.dilatation.b2),
        "log_det" => {
            let g = run.grid;
            let vals = run
                .diff
                .det
                .values()
                .iter()
                .map(|&d| d.max(run.diff.eps).ln())
                .collect();
            cell_table(&CellField::new(g, vals)?)
        }
        "beltrami" => {
            let g = run.grid;
            let b = &run.beltrami;
            let mut s = String::from("cx,cy,mu_re,mu_im,nu_re,nu_im\n");
            for c in 0..g.n_cells() {
                let (x, y) = g.cell_center(c);
                let _ = writeln!(
                    s,
                    "{x:.9},{y:.9},{},{},{},{}",
                    fmt(b.mu_re.value(c)),
                    fmt(b.mu_im.value(c)),
                    fmt(b.nu_re.value(c)),
                    fmt(b.nu_im.value(c))
                );
            }
            s
        }
        "sigma" => {
            let g = run.grid;
            let mut s = String::from("cx,cy,s11,s12,s21,s22\n");
            for c in 0..g.n_cells() {
                let (x, y) = g.cell_center(c);
                let m = run.sigma.value(c);
                let _ = writeln!(
                    s,
                    "{x:.9},{y:.9},{},{},{},{}",
                    fmt(m[0][0]),
                    fmt(m[0][1]),
                    fmt(m[1][0]),
                    fmt(m[1][1])
                );
            }
            s
        }
        other => return Err(Error::UnknownField(other.to_string())),
    };
    Ok(out)
}
