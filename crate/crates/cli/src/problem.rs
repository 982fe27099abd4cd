//! JSON problem files.
//!
//! Every dimension is stated explicitly (`n`, `d`, `m`) and every array is
//! checked against it, so a malformed file fails with the offending field
//! rather than with a shape guess. Infinite bounds are written as `null`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chancekit::model::{CcProgram, CcRow, GeneratorSpec, LinearConstraint, LinearFrame, Relation, ScenarioSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintJson {
    pub coefs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `f(x, ξ) = (a⁰ + Aᵀξ)ᵀx + b⁰ + bᵀξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcRowJson {
    pub base_coefs: Vec<f64>,
    pub base_offset: f64,
    /// `d × n`; omitted means zero (right-hand-side uncertainty only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unc_coefs: Option<Vec<Vec<f64>>>,
    pub unc_offset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub epsilon: f64,
    pub objective: Vec<f64>,
    #[serde(default)]
    pub constraints: Vec<ConstraintJson>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub cc_rows: Vec<CcRowJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

fn expect_len(field: &str, dim: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        bail!("{field}: expected {dim} = {expected} entries, got {got}");
    }
    Ok(())
}

impl ProblemFile {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            anyhow::anyhow!("{origin}: field `{path}`: {inner}")
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Dimension checks, then conversion.
    pub fn to_program(&self) -> Result<CcProgram> {
        let (n, d, m) = (self.n, self.d, self.m);
        if n == 0 || d == 0 || m == 0 {
            bail!("n, d and m must all be at least 1 (got n = {n}, d = {d}, m = {m})");
        }
        expect_len("objective", "n", n, self.objective.len())?;
        expect_len("lower", "n", n, self.lower.len())?;
        expect_len("upper", "n", n, self.upper.len())?;
        expect_len("cc_rows", "m", m, self.cc_rows.len())?;
        for (i, c) in self.constraints.iter().enumerate() {
            expect_len(&format!("constraints[{i}].coefs"), "n", n, c.coefs.len())?;
        }
        let mut rows = Vec::with_capacity(m);
        for (i, r) in self.cc_rows.iter().enumerate() {
            expect_len(&format!("cc_rows[{i}].base_coefs"), "n", n, r.base_coefs.len())?;
            expect_len(&format!("cc_rows[{i}].unc_offset"), "d", d, r.unc_offset.len())?;
            let unc_coefs = match &r.unc_coefs {
                Some(a) => {
                    expect_len(&format!("cc_rows[{i}].unc_coefs"), "d", d, a.len())?;
                    for (k, row) in a.iter().enumerate() {
                        expect_len(&format!("cc_rows[{i}].unc_coefs[{k}]"), "n", n, row.len())?;
                    }
                    a.clone()
                }
                None => vec![vec![0.0; n]; d],
            };
            rows.push(CcRow {
                base_coefs: r.base_coefs.clone(),
                base_offset: r.base_offset,
                unc_coefs,
                unc_offset: r.unc_offset.clone(),
            });
        }
        if let Some(g) = &self.generator {
            expect_len("generator", "d", d, g.dim())?;
            g.validate().context("generator")?;
        }
        let frame = LinearFrame {
            objective: self.objective.clone(),
            constraints: self
                .constraints
                .iter()
                .map(|c| LinearConstraint {
                    coefs: c.coefs.clone(),
                    relation: c.relation,
                    rhs: c.rhs,
                })
                .collect(),
            lower: self.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect(),
            upper: self.upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
        };
        Ok(CcProgram::new(frame, d, rows, self.epsilon)?)
    }
}

pub fn load_generator(path: &Path) -> Result<GeneratorSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let g: GeneratorSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path_s = e.path().to_string();
        anyhow::anyhow!("{}: field `{path_s}`: {}", path.display(), e.into_inner())
    })?;
    g.validate().with_context(|| path.display().to_string())?;
    Ok(g)
}

pub fn load_scenarios(path: &Path, d: usize) -> Result<ScenarioSet> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let scen = ScenarioSet::read_csv(file).with_context(|| path.display().to_string())?;
    if scen.dim() != d {
        bail!("{}: {} columns, but the problem has d = {d}", path.display(), scen.dim());
    }
    Ok(scen)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_D: &str = r#"{
        "n": 1, "d": 1, "m": 1, "epsilon": 0.05,
        "objective": [1.0],
        "lower": [-10.0], "upper": [null],
        "cc_rows": [{"base_coefs": [-1.0], "base_offset": 0.0, "unc_offset": [1.0]}],
        "generator": {"kind": "uniform_box", "lo": [0.0], "hi": [1.0]}
    }"#;

    #[test]
    fn parses_and_converts() {
        let p = ProblemFile::from_json(ONE_D, "t").unwrap();
        let prog = p.to_program().unwrap();
        assert_eq!((prog.n(), prog.d(), prog.m()), (1, 1, 1));
        assert_eq!(prog.frame().upper[0], f64::INFINITY);
        assert!(prog.is_separable());
    }

    #[test]
    fn dimension_errors_name_the_field() {
        let bad = ONE_D.replace("\"unc_offset\": [1.0]", "\"unc_offset\": [1.0, 2.0]");
        let e = ProblemFile::from_json(&bad, "t").unwrap().to_program().unwrap_err();
        assert_eq!(e.to_string(), "cc_rows[0].unc_offset: expected d = 1 entries, got 2");
    }

    #[test]
    fn type_errors_carry_path_and_line() {
        let bad = ONE_D.replace("\"base_offset\": 0.0", "\"base_offset\": \"zero\"");
        let e = ProblemFile::from_json(&bad, "p.json").unwrap_err().to_string();
        assert!(e.contains("cc_rows[0].base_offset"), "{e}");
        assert!(e.contains("line 5"), "{e}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = ONE_D.replace("\"m\": 1,", "\"m\": 1, \"rows\": 3,");
        assert!(ProblemFile::from_json(&bad, "t").is_err());
    }
}
