//! Solver-ready deterministic programs: linear objective, linear rows,
//! second-order-cone rows and variable bounds, plus a record of which
//! reformulation produced them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Relation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("variable index {index} out of range ({count} variables)")]
    VariableIndex { index: usize, count: usize },
    #[error("variable {name}: invalid bounds [{lower}, {upper}]")]
    Bounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("binary variables are only produced by SAA reformulations (provenance {0:?})")]
    UnexpectedBinary(Method),
    #[error("cone rows are not produced by provenance {0:?}")]
    UnexpectedCone(Method),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// `Σ coef·v[index] + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(index: usize) -> Self {
        Self::term(index, 1.0)
    }

    pub fn term(index: usize, coef: f64) -> Self {
        Self {
            terms: vec![(index, coef)],
            constant: 0.0,
        }
    }

    /// `Σ_j coefs[j]·v[offset + j] + constant`.
    pub fn dense(offset: usize, coefs: &[f64], constant: f64) -> Self {
        Self {
            terms: coefs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, &c)| (offset + j, c))
                .collect(),
            constant,
        }
    }

    pub fn add_term(&mut self, index: usize, coef: f64) -> &mut Self {
        self.terms.push((index, coef));
        self
    }

    pub fn plus(mut self, other: &AffineExpr) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= factor;
        }
        self.constant *= factor;
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * v[i]).sum::<f64>() + self.constant
    }

    /// Merges repeated indices, drops exact zeros and sorts by index.
    pub fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (i, c) in self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        self.terms = merged;
        self
    }

    fn check(&self, count: usize, what: &str) -> Result<(), ProgramError> {
        for &(i, c) in &self.terms {
            if i >= count {
                return Err(ProgramError::VariableIndex { index: i, count });
            }
            if !c.is_finite() {
                return Err(ProgramError::NonFinite(what.to_string()));
            }
        }
        if !self.constant.is_finite() {
            return Err(ProgramError::NonFinite(what.to_string()));
        }
        Ok(())
    }
}

/// `Σ terms (relation) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinRow {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinRow {
    pub fn activity(&self, v: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * v[i]).sum()
    }

    /// Amount by which `v` violates the row (0 when satisfied).
    pub fn violation(&self, v: &[f64]) -> f64 {
        let a = self.activity(v);
        match self.relation {
            Relation::Le => (a - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - a).max(0.0),
            Relation::Eq => (a - self.rhs).abs(),
        }
    }
}

/// `‖(lhs_k(v))_k‖₂ ≤ rhs(v)`, i.e. `‖F v + g‖ ≤ hᵀv + s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocRow {
    pub name: String,
    pub lhs: Vec<AffineExpr>,
    pub rhs: AffineExpr,
}

impl SocRow {
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.lhs.iter().map(|e| e.eval(v).powi(2)).sum::<f64>().sqrt()
    }

    /// `‖F v + g‖ − (hᵀv + s)`; positive when violated.
    pub fn excess(&self, v: &[f64]) -> f64 {
        self.norm(v) - self.rhs.eval(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Scenario,
    SaaBigM,
    SaaStrong,
    CvarSample,
    CvarEvaluation,
    Gaussian,
    Robust,
    PiBound,
    Custom,
}

impl Method {
    fn allows_binary(self) -> bool {
        matches!(self, Method::SaaBigM | Method::SaaStrong | Method::Custom)
    }

    fn allows_cone(self) -> bool {
        matches!(
            self,
            Method::Gaussian | Method::Robust | Method::PiBound | Method::Custom
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: Method,
    /// Free-form detail, e.g. the uncertainty set or the level ε'.
    pub detail: String,
    pub scenarios: Option<usize>,
}

impl Provenance {
    pub fn new(method: Method, detail: impl Into<String>, scenarios: Option<usize>) -> Self {
        Self {
            method,
            detail: detail.into(),
            scenarios,
        }
    }
}

/// `min objective(v)` over linear rows, cone rows and bounds.
///
/// The first `n_decision` variables are the original decision vector `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicProgram {
    pub variables: Vec<Variable>,
    pub n_decision: usize,
    pub objective: AffineExpr,
    pub rows: Vec<LinRow>,
    pub soc_rows: Vec<SocRow>,
    pub provenance: Provenance,
}

impl DeterministicProgram {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            variables: Vec::new(),
            n_decision: 0,
            objective: AffineExpr::zero(),
            rows: Vec::new(),
            soc_rows: Vec::new(),
            provenance,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> usize {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        self.variables.push(Variable {
            name: name.into(),
            kind,
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Adds `expr (relation) 0`, moving the constant to the right-hand side.
    pub fn add_row(&mut self, name: impl Into<String>, expr: AffineExpr, relation: Relation) {
        let expr = expr.normalized();
        self.rows.push(LinRow {
            name: name.into(),
            terms: expr.terms,
            relation,
            rhs: -expr.constant,
        });
    }

    /// Adds `lhs ≤ rhs`.
    pub fn add_le(&mut self, name: impl Into<String>, lhs: AffineExpr, rhs: &AffineExpr) {
        self.add_row(name, lhs.plus(&rhs.clone().scaled(-1.0)), Relation::Le);
    }

    pub fn add_soc(&mut self, name: impl Into<String>, lhs: Vec<AffineExpr>, rhs: AffineExpr) {
        self.soc_rows.push(SocRow {
            name: name.into(),
            lhs: lhs.into_iter().map(AffineExpr::normalized).collect(),
            rhs: rhs.normalized(),
        });
    }

    pub fn has_binaries(&self) -> bool {
        self.variables.iter().any(|v| v.kind == VarKind::Binary)
    }

    pub fn has_cones(&self) -> bool {
        !self.soc_rows.is_empty()
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective.eval(v)
    }

    /// Largest violation of any row, cone or bound at `v`.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(v));
        let cones = self.soc_rows.iter().map(|c| c.excess(v).max(0.0));
        let bounds = self
            .variables
            .iter()
            .zip(v)
            .map(|(var, &x)| (var.lower - x).max(x - var.upper).max(0.0));
        rows.chain(cones).chain(bounds).fold(0.0, f64::max)
    }

    /// The same program with every binary relaxed to `[0, 1]`.
    pub fn relaxed(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.variables {
            v.kind = VarKind::Continuous;
        }
        out
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        let count = self.variables.len();
        if self.n_decision > count {
            return Err(ProgramError::VariableIndex {
                index: self.n_decision,
                count,
            });
        }
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ProgramError::Bounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        self.objective.check(count, "objective")?;
        for r in &self.rows {
            AffineExpr {
                terms: r.terms.clone(),
                constant: r.rhs,
            }
            .check(count, &r.name)?;
        }
        for c in &self.soc_rows {
            for e in &c.lhs {
                e.check(count, &c.name)?;
            }
            c.rhs.check(count, &c.name)?;
        }
        if self.has_binaries() && !self.provenance.method.allows_binary() {
            return Err(ProgramError::UnexpectedBinary(self.provenance.method));
        }
        if self.has_cones() && !self.provenance.method.allows_cone() {
            return Err(ProgramError::UnexpectedCone(self.provenance.method));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_merges_terms() {
        let e = AffineExpr::term(2, 1.0)
            .plus(&AffineExpr::term(0, 3.0))
            .plus(&AffineExpr::term(2, -1.0))
            .with_constant(4.0)
            .normalized();
        assert_eq!(e.terms, vec![(0, 3.0)]);
        assert_eq!(e.constant, 4.0);
        assert_eq!(e.eval(&[2.0, 0.0, 9.0]), 10.0);
    }

    #[test]
    fn rows_move_constants() {
        let mut dp = DeterministicProgram::new(Provenance::new(Method::Custom, "", None));
        let x = dp.add_continuous("x", 0.0, 1.0);
        dp.add_le("r", AffineExpr::var(x).with_constant(1.0), &AffineExpr::constant(3.0));
        assert_eq!(dp.rows[0].rhs, 2.0);
        assert_eq!(dp.rows[0].violation(&[2.5]), 0.5);
        assert_eq!(dp.max_violation(&[2.5]), 1.5);
    }

    #[test]
    fn provenance_restricts_structure() {
        let mut dp = DeterministicProgram::new(Provenance::new(Method::Scenario, "", Some(1)));
        dp.add_var("z", VarKind::Binary, 0.0, 1.0);
        assert!(matches!(dp.validate(), Err(ProgramError::UnexpectedBinary(_))));
        let mut dp = DeterministicProgram::new(Provenance::new(Method::CvarSample, "", Some(1)));
        let x = dp.add_free("x");
        dp.add_soc("c", vec![AffineExpr::var(x)], AffineExpr::constant(1.0));
        assert!(matches!(dp.validate(), Err(ProgramError::UnexpectedCone(_))));
    }

    #[test]
    fn cone_excess() {
        let c = SocRow {
            name: "c".into(),
            lhs: vec![AffineExpr::var(0), AffineExpr::var(1)],
            rhs: AffineExpr::constant(5.0),
        };
        assert_eq!(c.excess(&[3.0, 4.0]), 0.0);
        assert!(c.excess(&[3.0, 4.1]) > 0.0);
    }
}
