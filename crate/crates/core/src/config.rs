//! Flat `key = value` run configuration with section headers.
//!
//! ```text
//! case = laminate
//! grids = 32, 64, 128
//! out = results
//!
//! [params]
//! a1 = 2
//! a2 = 0.5
//!
//! [analysis]
//! p = 2
//! max_level = 3
//! subregion = 0.25, 0.75, 0.25, 0.75
//!
//! [checks]
//! d_sigma_const = 0.02
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::Rect;

#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    /// exponents to scan; a single configured p replaces the default scan
    pub p_scan: Vec<f64>,
    pub delta: Option<f64>,
    pub max_level: u32,
    pub subregion: Option<Rect>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { p_scan: vec![1.5, 2.0, 3.0], delta: None, max_level: 3, subregion: None }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub case: String,
    pub params: BTreeMap<String, f64>,
    /// strictly increasing cell counts per axis
    pub grids: Vec<usize>,
    pub analysis: AnalysisConfig,
    pub out_dir: Option<PathBuf>,
    /// check name -> tolerance
    pub checks: BTreeMap<String, f64>,
}

fn bad(line_no: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line_no}: {msg}"))
}

fn parse_f64(line_no: usize, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| bad(line_no, format!("`{key}` expects a number, got `{v}`")))
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut case = None;
        let mut grids: Vec<usize> = Vec::new();
        let mut out_dir = None;
        let mut params = BTreeMap::new();
        let mut analysis = AnalysisConfig::default();
        let mut checks = BTreeMap::new();
        let mut section = "";

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = match name.trim() {
                    "params" => "params",
                    "analysis" => "analysis",
                    "checks" => "checks",
                    other => return Err(bad(line_no, format!("unknown section `[{other}]`"))),
                };
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(bad(line_no, format!("expected `key = value`, got `{line}`")));
            };
            let key = key.trim();
            let value = value.trim();
            match section {
                "" => match key {
                    "case" => case = Some(value.to_string()),
                    "grids" | "grid" => {
                        for part in value.split(',') {
                            let n = part.trim().parse::<usize>().map_err(|_| {
                                bad(line_no, format!("grid size `{}` is not an integer", part.trim()))
                            })?;
                            grids.push(n);
                        }
                    }
                    "out" => out_dir = Some(PathBuf::from(value)),
                    other => return Err(bad(line_no, format!("unknown key `{other}`"))),
                },
                "params" => {
                    params.insert(key.to_string(), parse_f64(line_no, key, value)?);
                }
                "analysis" => match key {
                    "p" => analysis.p_scan = vec![parse_f64(line_no, key, value)?],
                    "delta" => analysis.delta = Some(parse_f64(line_no, key, value)?),
                    "max_level" => {
                        analysis.max_level = value.parse().map_err(|_| {
                            bad(line_no, format!("`max_level` expects an integer, got `{value}`"))
                        })?
                    }
                    "subregion" => {
                        let parts: Vec<f64> = value
                            .split(',')
                            .map(|p| parse_f64(line_no, key, p))
                            .collect::<Result<_>>()?;
                        if parts.len() != 4 {
                            return Err(bad(line_no, "`subregion` expects x0, x1, y0, y1"));
                        }
                        analysis.subregion = Some(Rect::new(parts[0], parts[1], parts[2], parts[3]));
                    }
                    other => return Err(bad(line_no, format!("unknown analysis key `{other}`"))),
                },
                "checks" => {
                    let tol = parse_f64(line_no, key, value)?;
                    if tol < 0.0 {
                        return Err(bad(line_no, format!("tolerance for `{key}` must be >= 0")));
                    }
                    checks.insert(key.to_string(), tol);
                }
                _ => unreachable!(),
            }
        }

        let case = case.ok_or_else(|| Error::Config("missing `case`".into()))?;
        if grids.is_empty() {
            return Err(Error::Config("missing `grids`".into()));
        }
        for w in grids.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config(format!(
                    "grid sizes must be strictly increasing, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        for &p in &analysis.p_scan {
            if p <= 1.0 {
                return Err(Error::Config(format!("exponent p must exceed 1, got {p}")));
            }
        }
        if let Some(d) = analysis.delta {
            if d <= 0.0 {
                return Err(Error::Config(format!("delta must be positive, got {d}")));
            }
        }
        Ok(RunConfig { case, params, grids, analysis, out_dir, checks })
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# laminate refinement study
case = laminate
grids = 32, 64, 128
out = results

[params]
a1 = 2
a2 = 0.5

[analysis]
p = 2
max_level = 3
subregion = 0.25, 0.75, 0.25, 0.75

[checks]
d_sigma_const = 0.02
harnack = 1.05
";

    #[test]
    fn parses_sample() {
        let c = RunConfig::parse_str(SAMPLE).unwrap();
        assert_eq!(c.case, "laminate");
        assert_eq!(c.grids, vec![32, 64, 128]);
        assert_eq!(c.params["a1"], 2.0);
        assert_eq!(c.analysis.p_scan, vec![2.0]);
        let s = c.analysis.subregion.unwrap();
        assert_eq!((s.x0, s.x1), (0.25, 0.75));
        assert_eq!(c.checks["harnack"], 1.05);
        assert_eq!(c.out_dir.unwrap(), PathBuf::from("results"));
    }

    #[test]
    fn rejects_unordered_grids() {
        let e = RunConfig::parse_str("case = identity\ngrids = 64, 32\n");
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn rejects_missing_case() {
        assert!(RunConfig::parse_str("grids = 32\n").is_err());
    }

    #[test]
    fn rejects_negative_tolerance() {
        let text = "case = identity\ngrids = 32\n[checks]\nharnack = -1\n";
        assert!(RunConfig::parse_str(text).is_err());
    }

    #[test]
    fn zero_tolerance_allowed() {
        let text = "case = identity\ngrids = 32\n[checks]\narea_identity = 0\n";
        let c = RunConfig::parse_str(text).unwrap();
        assert_eq!(c.checks["area_identity"], 0.0);
    }

    #[test]
    fn rejects_unknown_key_with_line_number() {
        let err = RunConfig::parse_str("case = identity\nbogus = 1\ngrids = 32\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let c = RunConfig::parse_str("case = identity # trailing\n\ngrids = 8\n").unwrap();
        assert_eq!(c.case, "identity");
    }
}
