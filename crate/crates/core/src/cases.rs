//! Built-in analytic scenarios with oracles: coefficient fields, exact
//! solutions, Dirichlet boundary data, and expected report values.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::coeff::SigmaField;
use crate::error::{Error, Result};
use crate::mesh::{Grid, Rect, Topology};

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type MapFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(f64, f64) -> [[f64; 2]; 2] + Send + Sync>;

/// Analytic solution: the mapping and its differential.
#[derive(Clone)]
pub struct ExactSolution {
    pub map: MapFn,
    pub du: MatrixFn,
    /// solve anyway (Dirichlet extension of the boundary data) instead of
    /// sampling the map at the nodes
    pub solve: bool,
}

/// Expected values frozen from closed-form computation.
#[derive(Clone, Default)]
pub struct Oracles {
    pub d_sigma_const: Option<f64>,
    pub w1_const: Option<f64>,
    pub w2_const: Option<f64>,
    /// total sigma-energy of the periodic solution
    pub energy: Option<f64>,
    pub det_du: Option<ScalarFn>,
    /// radial profile of d for radially symmetric distortion
    pub d_radial: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    /// correctors vanish identically (constant sigma)
    pub zero_corrector: bool,
    /// drift fields vanish identically (E = 0)
    pub zero_drift: bool,
}

/// A fully specified scenario ready to be meshed and run.
#[derive(Clone)]
pub struct CaseBundle {
    pub name: String,
    pub topology: Topology,
    pub domain: Rect,
    pub alpha: f64,
    pub beta: f64,
    pub sigma_fn: MatrixFn,
    /// exact Lipschitz constant E when known (overrides the discrete one)
    pub lipschitz_e: Option<f64>,
    /// Dirichlet data per component; required for Dirichlet topology
    pub boundary: Option<[ScalarFn; 2]>,
    pub exact: Option<ExactSolution>,
    pub oracles: Oracles,
}

impl CaseBundle {
    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::new(n, n, self.domain, self.topology)
    }

    /// Validated coefficient field on the given grid.
    pub fn sigma(&self, grid: Grid) -> Result<SigmaField> {
        let f = self.sigma_fn.clone();
        let s = SigmaField::from_fn(grid, move |x, y| f(x, y), self.alpha, self.beta)?;
        Ok(match self.lipschitz_e {
            Some(e) => s.with_lipschitz_bound(e),
            None => s,
        })
    }

    /// d^sigma from the analytic differential at a point.
    pub fn exact_d_sigma(&self, x: f64, y: f64) -> Option<f64> {
        let exact = self.exact.as_ref()?;
        let m = (exact.du)(x, y);
        let s = (self.sigma_fn)(x, y);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det <= 0.0 {
            return None;
        }
        let mut tr = 0.0;
        for row in m {
            let sg = [
                s[0][0] * row[0] + s[0][1] * row[1],
                s[1][0] * row[0] + s[1][1] * row[1],
            ];
            tr += sg[0] * row[0] + sg[1] * row[1];
        }
        Some(tr / (2.0 * det))
    }

    /// Cross-check the stored closed forms against the analytic
    /// differential at pseudo-random interior points.
    pub fn self_check(&self) -> Result<()> {
        let Some(exact) = self.exact.as_ref() else {
            return Ok(());
        };
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let x = self.domain.x0 + next() * self.domain.width();
            let y = self.domain.y0 + next() * self.domain.height();
            let m = (exact.du)(x, y);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if let Some(f) = &self.oracles.det_du {
                let expect = f(x, y);
                if (det - expect).abs() > 1e-12 * (1.0 + expect.abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "case {}: analytic det DU {det} disagrees with oracle {expect} at ({x}, {y})",
                        self.name
                    )));
                }
            }
            let Some(ds) = self.exact_d_sigma(x, y) else { continue };
            let expect = if let Some(c) = self.oracles.d_sigma_const {
                Some(c)
            } else {
                self.oracles
                    .d_radial
                    .as_ref()
                    .map(|f| f((x * x + y * y).sqrt()))
            };
            if let Some(expect) = expect {
                if (ds - expect).abs() > 1e-12 * (1.0 + expect.abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "case {}: analytic d^sigma {ds} disagrees with oracle {expect} at ({x}, {y})",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Registry entry for `cases` listings.
pub struct CaseInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [(&'static str, f64)],
}

pub const REGISTRY: &[CaseInfo] = &[
    CaseInfo {
        name: "identity",
        summary: "sigma = I on the periodic unit cell; U = x, every dilatation is 1",
        params: &[],
    },
    CaseInfo {
        name: "hypocycloid",
        summary: "U = z + z^2-bar/2 on [-0.7, 0.7]^2, sigma = I; det DU = 1 - r^2",
        params: &[],
    },
    CaseInfo {
        name: "laminate",
        summary: "sigma = diag(a, 1/a), a piecewise constant in x1 on the unit cell",
        params: &[("a1", 2.0), ("a2", 0.5)],
    },
    CaseInfo {
        name: "constant_nonsymmetric",
        summary: "sigma = I + t J constant on the unit cell; zero correctors and drift",
        params: &[("t", 1.0)],
    },
    CaseInfo {
        name: "smooth_detvarying",
        summary: "sigma = g I with det sigma = 1 + lambda sin(2 pi x1) sin(2 pi x2)",
        params: &[("lambda", 0.3)],
    },
    CaseInfo {
        name: "kneser_rado_convex",
        summary: "harmonic extension of a sheared identity onto a convex image",
        params: &[("shear", 0.5)],
    },
];

fn get_param(
    params: &BTreeMap<String, f64>,
    allowed: &[(&str, f64)],
    key: &str,
) -> f64 {
    params
        .get(key)
        .copied()
        .unwrap_or_else(|| allowed.iter().find(|(k, _)| *k == key).unwrap().1)
}

fn check_params(name: &str, params: &BTreeMap<String, f64>, allowed: &[(&str, f64)]) -> Result<()> {
    for k in params.keys() {
        if !allowed.iter().any(|(a, _)| a == k) {
            return Err(Error::InvalidParameter(format!(
                "case {name} does not accept parameter `{k}`"
            )));
        }
    }
    Ok(())
}

pub fn make_case(name: &str, params: &BTreeMap<String, f64>) -> Result<CaseBundle> {
    let info = REGISTRY
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::UnknownCase(name.to_string()))?;
    check_params(name, params, info.params)?;
    let bundle = match name {
        "identity" => identity_case(),
        "hypocycloid" => hypocycloid_case(),
        "laminate" => laminate_case(
            get_param(params, info.params, "a1"),
            get_param(params, info.params, "a2"),
        )?,
        "constant_nonsymmetric" => {
            constant_nonsymmetric_case(get_param(params, info.params, "t"))?
        }
        "smooth_detvarying" => smooth_detvarying_case(get_param(params, info.params, "lambda"))?,
        "kneser_rado_convex" => kneser_rado_case(get_param(params, info.params, "shear")),
        _ => unreachable!(),
    };
    Ok(bundle)
}

fn identity_case() -> CaseBundle {
    CaseBundle {
        name: "identity".into(),
        topology: Topology::Periodic,
        domain: Rect::unit_square(),
        alpha: 1.0,
        beta: 1.0,
        sigma_fn: Arc::new(|_, _| [[1.0, 0.0], [0.0, 1.0]]),
        lipschitz_e: Some(0.0),
        boundary: None,
        exact: Some(ExactSolution {
            map: Arc::new(|x, y| [x, y]),
            du: Arc::new(|_, _| [[1.0, 0.0], [0.0, 1.0]]),
            solve: false,
        }),
        oracles: Oracles {
            d_sigma_const: Some(1.0),
            w1_const: Some(1.0),
            w2_const: Some(1.0),
            energy: Some(2.0),
            det_du: Some(Arc::new(|_, _| 1.0)),
            d_radial: None,
            zero_corrector: true,
            zero_drift: true,
        },
    }
}

fn hypocycloid_case() -> CaseBundle {
    // U(z) = z + z-bar^2 / 2 in components; det DU = 1 - |z|^2
    let map: MapFn = Arc::new(|x, y| [x + 0.5 * (x * x - y * y), y - x * y]);
    let du: MatrixFn = Arc::new(|x, y| [[1.0 + x, -y], [-y, 1.0 - x]]);
    CaseBundle {
        name: "hypocycloid".into(),
        topology: Topology::Dirichlet,
        domain: Rect::new(-0.7, 0.7, -0.7, 0.7),
        alpha: 1.0,
        beta: 1.0,
        sigma_fn: Arc::new(|_, _| [[1.0, 0.0], [0.0, 1.0]]),
        lipschitz_e: Some(0.0),
        boundary: Some([
            {
                let m = map.clone();
                Arc::new(move |x, y| m(x, y)[0])
            },
            {
                let m = map.clone();
                Arc::new(move |x, y| m(x, y)[1])
            },
        ]),
        exact: Some(ExactSolution { map, du, solve: false }),
        oracles: Oracles {
            det_du: Some(Arc::new(|x, y| 1.0 - x * x - y * y)),
            d_radial: Some(Arc::new(|r| (1.0 + r * r) / (1.0 - r * r))),
            zero_drift: true,
            ..Default::default()
        },
    }
}

fn laminate_case(a1: f64, a2: f64) -> Result<CaseBundle> {
    if a1 <= 0.0 || a2 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "laminate slabs must be positive, got a1 = {a1}, a2 = {a2}"
        )));
    }
    // harmonic mean across the slabs; u^1 has constant flux a d1(u^1) = h
    let h = 2.0 / (1.0 / a1 + 1.0 / a2);
    let slab = move |x: f64| if x.rem_euclid(1.0) < 0.5 { a1 } else { a2 };
    let alpha = a1.min(a2).min(1.0 / a1).min(1.0 / a2);
    let beta = a1.max(a2).max(1.0 / a1).max(1.0 / a2);
    let map: MapFn = Arc::new(move |x, y| {
        let xf = x.rem_euclid(1.0);
        let per = x - xf;
        let u1 = if xf < 0.5 {
            h / a1 * xf
        } else {
            0.5 * h / a1 + h / a2 * (xf - 0.5)
        };
        [per + u1, y]
    });
    let du: MatrixFn = Arc::new(move |x, _| [[h / slab(x), 0.0], [0.0, 1.0]]);
    Ok(CaseBundle {
        name: "laminate".into(),
        topology: Topology::Periodic,
        domain: Rect::unit_square(),
        alpha,
        beta,
        sigma_fn: Arc::new(move |x, _| {
            let a = slab(x);
            [[a, 0.0], [0.0, 1.0 / a]]
        }),
        // det sigma = 1 and b = 0 identically
        lipschitz_e: Some(0.0),
        boundary: None,
        exact: Some(ExactSolution { map, du, solve: false }),
        oracles: Oracles {
            d_sigma_const: Some((h * h + 1.0) / (2.0 * h)),
            w1_const: Some(1.0 / h),
            w2_const: Some(h),
            energy: Some(h + 1.0 / h),
            det_du: Some(Arc::new(move |x, _| h / slab(x))),
            d_radial: None,
            zero_corrector: false,
            zero_drift: true,
        },
    })
}

fn constant_nonsymmetric_case(t: f64) -> Result<CaseBundle> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t = {t}")));
    }
    // |nu| for sigma = I + tJ; alpha and beta are registered so that
    // K = (1 + k)/(1 - k) makes the quasiconformality bound sharp
    let k = t.abs() / (t * t + 4.0).sqrt();
    let kq = (1.0 + k) / (1.0 - k);
    Ok(CaseBundle {
        name: "constant_nonsymmetric".into(),
        topology: Topology::Periodic,
        domain: Rect::unit_square(),
        alpha: 1.0 / kq,
        beta: kq,
        sigma_fn: Arc::new(move |_, _| [[1.0, -t], [t, 1.0]]),
        lipschitz_e: Some(0.0),
        boundary: None,
        exact: Some(ExactSolution {
            map: Arc::new(|x, y| [x, y]),
            du: Arc::new(|_, _| [[1.0, 0.0], [0.0, 1.0]]),
            solve: false,
        }),
        oracles: Oracles {
            d_sigma_const: Some(1.0),
            w1_const: Some(1.0),
            w2_const: Some(1.0),
            energy: Some(2.0),
            det_du: Some(Arc::new(|_, _| 1.0)),
            d_radial: None,
            zero_corrector: true,
            zero_drift: true,
        },
    })
}

fn smooth_detvarying_case(lambda: f64) -> Result<CaseBundle> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in [0, 1), got {lambda}"
        )));
    }
    let g = move |x: f64, y: f64| {
        (1.0 + lambda * (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).sin())
            .sqrt()
    };
    Ok(CaseBundle {
        name: "smooth_detvarying".into(),
        topology: Topology::Periodic,
        domain: Rect::unit_square(),
        alpha: (1.0 - lambda).sqrt(),
        beta: (1.0 + lambda).sqrt(),
        sigma_fn: Arc::new(move |x, y| {
            let v = g(x, y);
            [[v, 0.0], [0.0, v]]
        }),
        // sup |grad det sigma| = 2 pi lambda, b = 0
        lipschitz_e: Some(2.0 * std::f64::consts::PI * lambda),
        boundary: None,
        exact: None,
        oracles: Oracles::default(),
    })
}

fn kneser_rado_case(shear: f64) -> CaseBundle {
    // boundary data is an affine shear of the identity; its harmonic
    // extension is the same affine map, with image a convex parallelogram
    let map: MapFn = Arc::new(move |x, y| [x + shear * y, y]);
    let du: MatrixFn = Arc::new(move |_, _| [[1.0, shear], [0.0, 1.0]]);
    CaseBundle {
        name: "kneser_rado_convex".into(),
        topology: Topology::Dirichlet,
        domain: Rect::unit_square(),
        alpha: 1.0,
        beta: 1.0,
        sigma_fn: Arc::new(|_, _| [[1.0, 0.0], [0.0, 1.0]]),
        lipschitz_e: Some(0.0),
        boundary: Some([
            {
                let m = map.clone();
                Arc::new(move |x, y| m(x, y)[0])
            },
            {
                let m = map.clone();
                Arc::new(move |x, y| m(x, y)[1])
            },
        ]),
        exact: Some(ExactSolution { map, du, solve: true }),
        oracles: Oracles {
            d_sigma_const: Some(1.0 + 0.5 * shear * shear),
            w1_const: Some(1.0 / (1.0 + shear * shear)),
            w2_const: Some(1.0),
            energy: None,
            det_du: Some(Arc::new(|_, _| 1.0)),
            d_radial: None,
            zero_corrector: false,
            zero_drift: true,
        },
    }
}
