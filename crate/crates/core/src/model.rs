//! Chance-constrained program representation, scenario data and generators.
//!
//! Inner constraint rows are bi-affine:
//!
//! ```text
//! f_i(x, ξ) = (a0_i + A_iᵀ ξ)ᵀ x + b0_i + b_iᵀ ξ
//! ```
//!
//! with `A_i` stored as a `d × n` matrix (one row per uncertainty component).

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream_rng, StreamRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("invalid bounds for variable {index}: lower {lower} > upper {upper}")]
    Bounds { index: usize, lower: f64, upper: f64 },
    #[error("{0} must be at least 1")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid generator: {0}")]
    Generator(String),
    #[error("invalid Gaussian chance constraint: {0}")]
    Gaussian(String),
    #[error("scenario csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// Deterministic linear row `coefsᵀ x (relation) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coefs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Objective, deterministic rows and variable box shared by every problem type.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFrame {
    pub objective: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearFrame {
    /// Frame with `n` variables, no rows, and the given box on every variable.
    pub fn with_box(objective: Vec<f64>, lower: f64, upper: f64) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            lower: vec![lower; n],
            upper: vec![upper; n],
        }
    }

    pub fn n(&self) -> usize {
        self.objective.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n();
        if n == 0 {
            return Err(ModelError::Empty("decision dimension n"));
        }
        check_len("lower bounds", n, self.lower.len())?;
        check_len("upper bounds", n, self.upper.len())?;
        check_finite("objective", &self.objective)?;
        for (index, (&lower, &upper)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lower.is_nan() || upper.is_nan() || lower > upper {
                return Err(ModelError::Bounds {
                    index,
                    lower,
                    upper,
                });
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            check_len(&format!("constraint {i}"), n, row.coefs.len())?;
            check_finite(&format!("constraint {i}"), &row.coefs)?;
            if !row.rhs.is_finite() {
                return Err(ModelError::NonFinite(format!("constraint {i} rhs")));
            }
        }
        Ok(())
    }
}

/// One inner row of the joint chance constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct CcRow {
    pub base_coefs: Vec<f64>,
    pub base_offset: f64,
    /// `d × n`; entry `[k][j]` multiplies `ξ_k x_j`.
    pub unc_coefs: Vec<Vec<f64>>,
    pub unc_offset: Vec<f64>,
}

impl CcRow {
    /// Row with right-hand-side uncertainty only.
    pub fn separable(base_coefs: Vec<f64>, base_offset: f64, unc_offset: Vec<f64>) -> Self {
        let n = base_coefs.len();
        let d = unc_offset.len();
        Self {
            base_coefs,
            base_offset,
            unc_coefs: vec![vec![0.0; n]; d],
            unc_offset,
        }
    }

    pub fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        let (coefs, constant) = self.coefs_at(xi);
        dot(&coefs, x) + constant
    }

    /// Coefficients on `x` and the constant term once `ξ` is fixed.
    pub fn coefs_at(&self, xi: &[f64]) -> (Vec<f64>, f64) {
        let mut coefs = self.base_coefs.clone();
        for (k, &xk) in xi.iter().enumerate() {
            if xk != 0.0 {
                for (c, a) in coefs.iter_mut().zip(&self.unc_coefs[k]) {
                    *c += xk * a;
                }
            }
        }
        (coefs, self.base_offset + dot(&self.unc_offset, xi))
    }

    pub fn has_decision_dependent_uncertainty(&self) -> bool {
        self.unc_coefs.iter().flatten().any(|&a| a != 0.0)
    }

    fn validate(&self, i: usize, n: usize, d: usize) -> Result<(), ModelError> {
        check_len(&format!("cc row {i} base coefficients"), n, self.base_coefs.len())?;
        check_len(&format!("cc row {i} uncertainty offset"), d, self.unc_offset.len())?;
        check_len(&format!("cc row {i} uncertainty map rows"), d, self.unc_coefs.len())?;
        for (k, r) in self.unc_coefs.iter().enumerate() {
            check_len(&format!("cc row {i} uncertainty map row {k}"), n, r.len())?;
            check_finite(&format!("cc row {i} uncertainty map"), r)?;
        }
        check_finite(&format!("cc row {i}"), &self.base_coefs)?;
        check_finite(&format!("cc row {i}"), &self.unc_offset)?;
        if !self.base_offset.is_finite() {
            return Err(ModelError::NonFinite(format!("cc row {i} base offset")));
        }
        Ok(())
    }
}

/// `min cᵀx  s.t.  x ∈ 𝒳,  P(f_i(x, ξ) ≤ 0 ∀i) ≥ 1 − ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcProgram {
    frame: LinearFrame,
    d: usize,
    rows: Vec<CcRow>,
    epsilon: f64,
}

impl CcProgram {
    pub fn new(
        frame: LinearFrame,
        d: usize,
        rows: Vec<CcRow>,
        epsilon: f64,
    ) -> Result<Self, ModelError> {
        frame.validate()?;
        if d == 0 {
            return Err(ModelError::Empty("uncertainty dimension d"));
        }
        if rows.is_empty() {
            return Err(ModelError::Empty("number of chance-constrained rows m"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ModelError::Epsilon(epsilon));
        }
        let n = frame.n();
        for (i, row) in rows.iter().enumerate() {
            row.validate(i, n, d)?;
        }
        Ok(Self {
            frame,
            d,
            rows,
            epsilon,
        })
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn frame(&self) -> &LinearFrame {
        &self.frame
    }

    pub fn rows(&self) -> &[CcRow] {
        &self.rows
    }

    /// True iff no row has decision-dependent uncertainty.
    pub fn is_separable(&self) -> bool {
        self.rows
            .iter()
            .all(|r| !r.has_decision_dependent_uncertainty())
    }

    /// Same program with a different violation level.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, ModelError> {
        Self::new(self.frame.clone(), self.d, self.rows.clone(), epsilon)
    }

    /// Same frame, keeping only the listed rows.
    pub fn with_rows(&self, rows: Vec<CcRow>, epsilon: f64) -> Result<Self, ModelError> {
        Self::new(self.frame.clone(), self.d, rows, epsilon)
    }

    fn check_point(&self, x: &[f64], xi: &[f64]) -> Result<(), ModelError> {
        check_len("decision vector", self.n(), x.len())?;
        check_len("uncertainty vector", self.d, xi.len())
    }
}

/// Per-row values `f_i(x, ξ)` and their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerValues {
    pub rows: Vec<f64>,
    pub max: f64,
}

pub fn evaluate_inner(prog: &CcProgram, x: &[f64], xi: &[f64]) -> Result<InnerValues, ModelError> {
    prog.check_point(x, xi)?;
    let rows: Vec<f64> = prog.rows.iter().map(|r| r.value(x, xi)).collect();
    let max = rows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(InnerValues { rows, max })
}

/// `f̄(x, ξ) > 0`; a tie at exactly zero counts as satisfied.
pub fn violation_indicator(prog: &CcProgram, x: &[f64], xi: &[f64]) -> Result<bool, ModelError> {
    Ok(evaluate_inner(prog, x, xi)?.max > 0.0)
}

/// Individual Gaussian chance constraint
/// `P(aᵀx + bᵀξ + ξᵀDx ≤ e) ≥ 1 − ε` with `ξ ~ N(μ, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCc {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `d × n`
    pub d_matrix: Vec<Vec<f64>>,
    pub e: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub epsilon: f64,
}

impl GaussianCc {
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.a.len();
        let d = self.b.len();
        if n == 0 || d == 0 {
            return Err(ModelError::Gaussian("empty dimensions".into()));
        }
        check_len("Gaussian D rows", d, self.d_matrix.len())?;
        for r in &self.d_matrix {
            check_len("Gaussian D columns", n, r.len())?;
        }
        check_len("Gaussian mean", d, self.mu.len())?;
        check_covariance(&self.sigma, d).map_err(ModelError::Gaussian)?;
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(ModelError::Gaussian(format!(
                "epsilon must lie in (0, 1/2], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Reads the single row of `prog` as a Gaussian constraint under `gen`.
    pub fn from_program(prog: &CcProgram, gen: &GeneratorSpec) -> Result<Self, ModelError> {
        if prog.m() != 1 {
            return Err(ModelError::Gaussian(format!(
                "needs exactly one chance-constrained row, got {}",
                prog.m()
            )));
        }
        let GeneratorSpec::Gaussian { mu, sigma } = gen else {
            return Err(ModelError::Gaussian("distribution is not Gaussian".into()));
        };
        let row = &prog.rows[0];
        let gcc = GaussianCc {
            a: row.base_coefs.clone(),
            b: row.unc_offset.clone(),
            d_matrix: row.unc_coefs.clone(),
            e: -row.base_offset,
            mu: mu.clone(),
            sigma: sigma.clone(),
            epsilon: prog.epsilon(),
        };
        gcc.validate()?;
        Ok(gcc)
    }
}

/// Distribution of ξ used to draw scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Gaussian {
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
    },
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Independent coordinates taking `±scale_k` with probability 1/2 each.
    ScaledBernoulli {
        scale: Vec<f64>,
    },
    FiniteDiscrete {
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
    },
}

impl GeneratorSpec {
    pub fn dim(&self) -> usize {
        match self {
            GeneratorSpec::Gaussian { mu, .. } => mu.len(),
            GeneratorSpec::UniformBox { lo, .. } => lo.len(),
            GeneratorSpec::ScaledBernoulli { scale } => scale.len(),
            GeneratorSpec::FiniteDiscrete { points, .. } => points.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let gen_err = |s: String| ModelError::Generator(s);
        if self.dim() == 0 {
            return Err(gen_err("zero dimension".into()));
        }
        match self {
            GeneratorSpec::Gaussian { mu, sigma } => {
                check_finite("Gaussian mean", mu)?;
                check_covariance(sigma, mu.len()).map_err(gen_err)
            }
            GeneratorSpec::UniformBox { lo, hi } => {
                check_len("uniform box upper corner", lo.len(), hi.len())?;
                for (k, (l, h)) in lo.iter().zip(hi).enumerate() {
                    if !(l.is_finite() && h.is_finite() && h > l) {
                        return Err(gen_err(format!("need lo < hi in coordinate {k}")));
                    }
                }
                Ok(())
            }
            GeneratorSpec::ScaledBernoulli { scale } => {
                if scale.iter().all(|s| s.is_finite() && *s > 0.0) {
                    Ok(())
                } else {
                    Err(gen_err("scales must be finite and positive".into()))
                }
            }
            GeneratorSpec::FiniteDiscrete { points, probs } => {
                check_len("discrete probabilities", points.len(), probs.len())?;
                let d = self.dim();
                for p in points {
                    check_len("discrete support point", d, p.len())?;
                    check_finite("discrete support point", p)?;
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(gen_err("probabilities must be nonnegative".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(gen_err(format!("probabilities sum to {total}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// Mean vector of the distribution.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            GeneratorSpec::Gaussian { mu, .. } => mu.clone(),
            GeneratorSpec::UniformBox { lo, hi } => {
                lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect()
            }
            GeneratorSpec::ScaledBernoulli { scale } => vec![0.0; scale.len()],
            GeneratorSpec::FiniteDiscrete { points, probs } => {
                let mut m = vec![0.0; self.dim()];
                for (pt, p) in points.iter().zip(probs) {
                    for (mk, v) in m.iter_mut().zip(pt) {
                        *mk += p * v;
                    }
                }
                m
            }
        }
    }

    pub fn sampler(&self) -> Result<Sampler, ModelError> {
        self.validate()?;
        let kind = match self {
            GeneratorSpec::Gaussian { mu, sigma } => SamplerKind::Gaussian {
                mu: mu.clone(),
                root: symmetric_sqrt(sigma),
            },
            GeneratorSpec::UniformBox { lo, hi } => SamplerKind::Uniform {
                lo: lo.clone(),
                width: lo.iter().zip(hi).map(|(l, h)| h - l).collect(),
            },
            GeneratorSpec::ScaledBernoulli { scale } => SamplerKind::Bernoulli {
                scale: scale.clone(),
            },
            GeneratorSpec::FiniteDiscrete { points, probs } => {
                let mut acc = 0.0;
                let cumulative = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                SamplerKind::Discrete {
                    points: points.clone(),
                    cumulative,
                }
            }
        };
        Ok(Sampler {
            dim: self.dim(),
            kind,
        })
    }
}

/// Prepared sampler (matrix square roots and cumulative tables precomputed).
#[derive(Debug, Clone)]
pub struct Sampler {
    dim: usize,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Gaussian { mu: Vec<f64>, root: Vec<Vec<f64>> },
    Uniform { lo: Vec<f64>, width: Vec<f64> },
    Bernoulli { scale: Vec<f64> },
    Discrete { points: Vec<Vec<f64>>, cumulative: Vec<f64> },
}

impl Sampler {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            SamplerKind::Gaussian { mu, root } => {
                let z: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
                for (k, o) in out.iter_mut().enumerate() {
                    *o = mu[k] + dot(&root[k], &z);
                }
            }
            SamplerKind::Uniform { lo, width } => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = lo[k] + width[k] * rng.random::<f64>();
                }
            }
            SamplerKind::Bernoulli { scale } => {
                for (o, s) in out.iter_mut().zip(scale) {
                    *o = if rng.random::<bool>() { *s } else { -*s };
                }
            }
            SamplerKind::Discrete { points, cumulative } => {
                let u: f64 = rng.random();
                let idx = cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(points.len() - 1);
                out.copy_from_slice(&points[idx]);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        out
    }
}

/// Where a scenario set came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ScenarioOrigin {
    Generated {
        generator: GeneratorSpec,
        seed: u64,
        stream: u64,
    },
    ExternalFile,
    Derived,
}

/// `N` realizations of ξ, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    dim: usize,
    data: Vec<f64>,
    origin: ScenarioOrigin,
}

impl ScenarioSet {
    pub fn from_rows(rows: Vec<Vec<f64>>, origin: ScenarioOrigin) -> Result<Self, ModelError> {
        let Some(first) = rows.first() else {
            return Err(ModelError::Empty("scenario count N"));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(ModelError::Empty("scenario dimension"));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            check_len(&format!("scenario {i}"), dim, r.len())?;
            check_finite(&format!("scenario {i}"), r)?;
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data, origin })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> &ScenarioOrigin {
        &self.origin
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Scenarios at the listed indices, in the given order. `None` if empty.
    pub fn subset(&self, indices: &[usize]) -> Option<Self> {
        if indices.is_empty() {
            return None;
        }
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Some(Self {
            dim: self.dim,
            data,
            origin: ScenarioOrigin::Derived,
        })
    }

    /// CSV with header `xi_1,...,xi_d` and one row per scenario.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ModelError> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=self.dim).map(|k| format!("xi_{k}")).collect();
        w.write_record(&header).map_err(csv_err)?;
        for row in self.iter() {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| ModelError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ModelError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers().map_err(csv_err)?.clone();
        for (k, name) in header.iter().enumerate() {
            let expected = format!("xi_{}", k + 1);
            if name != expected {
                return Err(ModelError::Csv(format!(
                    "header column {} is '{name}', expected '{expected}'",
                    k + 1
                )));
            }
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|e| {
                        ModelError::Csv(format!("data row {}: '{f}': {e}", line + 1))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::from_rows(rows, ScenarioOrigin::ExternalFile)
    }
}

fn csv_err(e: csv::Error) -> ModelError {
    ModelError::Csv(e.to_string())
}

/// Draws `count` i.i.d. scenarios from stream 0 of `seed`.
pub fn draw_scenarios(
    gen: &GeneratorSpec,
    count: usize,
    seed: u64,
) -> Result<ScenarioSet, ModelError> {
    draw_scenarios_from_stream(gen, count, seed, 0)
}

/// Draws `count` scenarios from an explicit `(seed, stream)` pair.
pub fn draw_scenarios_from_stream(
    gen: &GeneratorSpec,
    count: usize,
    seed: u64,
    stream: u64,
) -> Result<ScenarioSet, ModelError> {
    if count == 0 {
        return Err(ModelError::Empty("scenario count N"));
    }
    let sampler = gen.sampler()?;
    let mut rng = stream_rng(seed, stream);
    let set = draw_with(&sampler, count, &mut rng);
    Ok(ScenarioSet {
        origin: ScenarioOrigin::Generated {
            generator: gen.clone(),
            seed,
            stream,
        },
        ..set
    })
}

pub(crate) fn draw_with(sampler: &Sampler, count: usize, rng: &mut StreamRng) -> ScenarioSet {
    let dim = sampler.dim();
    let mut data = vec![0.0; count * dim];
    for chunk in data.chunks_exact_mut(dim) {
        sampler.sample_into(rng, chunk);
    }
    ScenarioSet {
        dim,
        data,
        origin: ScenarioOrigin::Derived,
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_len(what: &str, expected: usize, got: usize) -> Result<(), ModelError> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::Dimension {
            what: what.to_string(),
            expected,
            got,
        })
    }
}

fn check_finite(what: &str, v: &[f64]) -> Result<(), ModelError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::NonFinite(what.to_string()))
    }
}

/// Symmetric with eigenvalues ≥ −1e-9.
pub(crate) fn check_covariance(sigma: &[Vec<f64>], d: usize) -> Result<(), String> {
    if sigma.len() != d || sigma.iter().any(|r| r.len() != d) {
        return Err(format!("covariance must be {d}×{d}"));
    }
    for i in 0..d {
        for j in 0..d {
            if !sigma[i][j].is_finite() {
                return Err("covariance has non-finite entries".into());
            }
            if (sigma[i][j] - sigma[j][i]).abs() > 1e-9 {
                return Err(format!("covariance not symmetric at ({i}, {j})"));
            }
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| sigma[i][j]);
    let eig = SymmetricEigen::new(m);
    if let Some(min) = eig.eigenvalues.iter().copied().reduce(f64::min) {
        if min < -1e-9 {
            return Err(format!("covariance has negative eigenvalue {min}"));
        }
    }
    Ok(())
}

/// Symmetric PSD square root via eigendecomposition (negative eigenvalues clipped).
pub fn symmetric_sqrt(sigma: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = sigma.len();
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (sigma[i][j] + sigma[j][i]));
    let eig = SymmetricEigen::new(m);
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    (0..d)
        .map(|i| (0..d).map(|j| root[(i, j)]).collect())
        .collect()
}
