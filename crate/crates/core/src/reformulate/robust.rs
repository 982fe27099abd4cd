//! Robust counterparts of an individual linear row `x₀ + ξᵀy ≤ 0` and the
//! CVaR-bound constraints `t + (1/ε)π(x₀ − t, y) ≤ 0`.
//!
//! Every counterpart comes from support-function duality,
//! `x₀ + max_{ξ∈𝒰} ξᵀy ≤ 0`:
//!
//! | set                              | support function                    |
//! |----------------------------------|-------------------------------------|
//! | box `‖ξ‖∞ ≤ 1`                   | `‖y‖₁`                              |
//! | ball `‖ξ‖₂ ≤ r`                  | `r‖y‖₂`                             |
//! | ball ∩ box                       | `min_u ‖u‖₁ + r‖y − u‖₂`            |
//! | budget `‖ξ‖₁ ≤ Γ`                | `Γ‖y‖∞`                             |
//! | `c·W`, `W = {Gξ ≤ h}`            | `min {hᵀλ : Gᵀλ = c·y, λ ≥ 0}`      |
//! | `‖Σ^{-1/2}ξ‖ ≤ κ`                | `κ‖Σ^{1/2}y‖`                       |
//! | `{s − t : ‖A s + B t‖ ≤ r, s,t ≥ 0}` | `r‖max(A⁻¹y, −B⁻¹y)‖` (`A, B` diagonal) |
//!
//! Random coordinates are standardized first, `ξ = c + s∘ζ`, so the
//! set radii refer to `ζ`.

use serde::{Deserialize, Serialize};

use crate::model::{check_covariance, symmetric_sqrt, CcProgram, CcRow, GeneratorSpec, Relation};
use crate::program::{AffineExpr, DeterministicProgram, Method, Provenance};

use super::deviations::{directional_deviations, DeviationSource, DirectionalDeviations};
use super::{bonferroni_split, frame_program, ReformError};

pub fn ball_radius(eps: f64) -> f64 {
    (2.0 * (1.0 / eps).ln()).sqrt()
}

pub fn budget_gamma(d: usize, eps: f64) -> f64 {
    (2.0 * d as f64 * (1.0 / eps).ln()).sqrt()
}

pub fn u3_radius(eps: f64) -> f64 {
    ((1.0 - eps) / eps).sqrt()
}

pub fn u4_radius(eps: f64) -> f64 {
    (-2.0 * eps.ln()).sqrt()
}

pub fn u5_radius(eps: f64) -> f64 {
    (1.0 - eps) / eps * (2.0 * (1.0 / (1.0 - eps)).ln()).sqrt()
}

/// `x₀ + ξᵀy` with `x₀`, `y_k` affine in the program variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCcRow {
    pub x0: AffineExpr,
    pub y: Vec<AffineExpr>,
}

impl LinearCcRow {
    /// Reads `f(x, ξ) = a⁰ᵀx + b⁰ + Σ_k ξ_k (A_k x + b_k)` over decision
    /// variables `0..n`.
    pub fn from_cc_row(row: &CcRow) -> Self {
        let x0 = AffineExpr::dense(0, &row.base_coefs, row.base_offset);
        let y = row
            .unc_coefs
            .iter()
            .zip(&row.unc_offset)
            .map(|(a, &b)| AffineExpr::dense(0, a, b))
            .collect();
        Self { x0, y }
    }

    pub fn d(&self) -> usize {
        self.y.len()
    }

    /// The same row in terms of `ζ` with `ξ = center + scale∘ζ`.
    pub fn standardized(&self, st: &UncertaintyStandardization) -> Self {
        let mut x0 = self.x0.clone();
        for (yk, &c) in self.y.iter().zip(&st.center) {
            if c != 0.0 {
                x0 = x0.plus(&yk.clone().scaled(c));
            }
        }
        let y = self
            .y
            .iter()
            .zip(&st.scale)
            .map(|(yk, &s)| yk.clone().scaled(s))
            .collect();
        Self { x0: x0.normalized(), y }
    }

    pub fn eval(&self, v: &[f64], xi: &[f64]) -> f64 {
        self.x0.eval(v) + self.y.iter().zip(xi).map(|(e, x)| x * e.eval(v)).sum::<f64>()
    }
}

/// `ξ = center + scale∘ζ` with `ζ` centred; bounded generators map onto
/// `[−1, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyStandardization {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl UncertaintyStandardization {
    pub fn identity(d: usize) -> Self {
        Self {
            center: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn from_generator(gen: &GeneratorSpec) -> Result<Self, ReformError> {
        gen.validate()?;
        let center = gen.mean();
        let scale = match gen {
            GeneratorSpec::Gaussian { mu, .. } => vec![1.0; mu.len()],
            GeneratorSpec::UniformBox { lo, hi } => {
                lo.iter().zip(hi).map(|(l, h)| 0.5 * (h - l)).collect()
            }
            GeneratorSpec::ScaledBernoulli { scale } => scale.iter().map(|s| s.abs()).collect(),
            GeneratorSpec::FiniteDiscrete { points, .. } => (0..gen.dim())
                .map(|k| {
                    let s = points
                        .iter()
                        .map(|p| (p[k] - center[k]).abs())
                        .fold(0.0f64, f64::max);
                    if s > 0.0 {
                        s
                    } else {
                        1.0
                    }
                })
                .collect(),
        };
        Ok(Self { center, scale })
    }

    /// Whether `ζ` is supported on `[−1, 1]^d`.
    pub fn bounded(gen: &GeneratorSpec) -> bool {
        !matches!(gen, GeneratorSpec::Gaussian { .. })
    }

    pub fn to_standard(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter()
            .zip(&self.center)
            .zip(&self.scale)
            .map(|((x, c), s)| (x - c) / s)
            .collect()
    }
}

/// `{ξ : Gξ ≤ h}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl Polytope {
    pub fn cube(d: usize) -> Self {
        let mut g = Vec::with_capacity(2 * d);
        for k in 0..d {
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; d];
                r[k] = sign;
                g.push(r);
            }
        }
        Self {
            g,
            h: vec![1.0; 2 * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.g.first().map_or(0, Vec::len)
    }

    fn validate(&self, d: usize) -> Result<(), ReformError> {
        if self.g.len() != self.h.len() || self.g.is_empty() {
            return Err(set_err("polytope needs as many right-hand sides as rows, at least one"));
        }
        if self.g.iter().any(|r| r.len() != d) {
            return Err(set_err(format!("polytope rows must have length {d}")));
        }
        if self.g.iter().flatten().chain(&self.h).any(|v| !v.is_finite()) {
            return Err(set_err("polytope data must be finite"));
        }
        Ok(())
    }
}

fn set_err(s: impl Into<String>) -> ReformError {
    ReformError::UncertaintySet(s.into())
}

fn pi_err(which: u8, s: impl Into<String>) -> ReformError {
    ReformError::PiBound {
        which,
        reason: s.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UncertaintySetSpec {
    Box,
    Ball {
        r: f64,
    },
    BallBox {
        r: f64,
    },
    Budget {
        gamma: f64,
    },
    U1 {
        w: Polytope,
    },
    U2 {
        w: Polytope,
        epsilon: f64,
    },
    U3 {
        sigma: Vec<Vec<f64>>,
        epsilon: f64,
    },
    U4 {
        #[serde(with = "crate::serde_inf")]
        p: Vec<f64>,
        #[serde(with = "crate::serde_inf")]
        q: Vec<f64>,
        epsilon: f64,
    },
    U5 {
        #[serde(with = "crate::serde_inf")]
        p: Vec<f64>,
        #[serde(with = "crate::serde_inf")]
        q: Vec<f64>,
        epsilon: f64,
    },
}

impl UncertaintySetSpec {
    pub fn validate(&self, d: usize) -> Result<(), ReformError> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(set_err(format!("{what} must be finite and positive, got {v}")))
            }
        };
        let level = |e: f64| {
            if e > 0.0 && e < 1.0 {
                Ok(())
            } else {
                Err(set_err(format!("epsilon must lie in (0, 1), got {e}")))
            }
        };
        match self {
            Self::Box => Ok(()),
            Self::Ball { r } | Self::BallBox { r } => positive(*r, "radius"),
            Self::Budget { gamma } => positive(*gamma, "budget"),
            Self::U1 { w } => w.validate(d),
            Self::U2 { w, epsilon } => {
                level(*epsilon)?;
                w.validate(d)
            }
            Self::U3 { sigma, epsilon } => {
                level(*epsilon)?;
                check_covariance(sigma, d).map_err(set_err)
            }
            Self::U4 { p, q, epsilon } | Self::U5 { p, q, epsilon } => {
                level(*epsilon)?;
                if p.len() != d || q.len() != d {
                    return Err(set_err(format!("deviation vectors must have length {d}")));
                }
                if p.iter().chain(q).any(|&v| v.is_nan() || v <= 0.0) {
                    return Err(set_err("deviations must be positive or +inf"));
                }
                Ok(())
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Box => "box",
            Self::Ball { .. } => "ball",
            Self::BallBox { .. } => "ball_box",
            Self::Budget { .. } => "budget",
            Self::U1 { .. } => "u1",
            Self::U2 { .. } => "u2",
            Self::U3 { .. } => "u3",
            Self::U4 { .. } => "u4",
            Self::U5 { .. } => "u5",
        }
    }
}

/// Distributional information the π bounds need: the support hull `W`,
/// the covariance `Σ` and the directional deviations `P`, `Q`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PiContext {
    pub w: Option<Polytope>,
    pub sigma: Option<Vec<Vec<f64>>>,
    pub deviations: Option<DirectionalDeviations>,
}

impl PiContext {
    /// Context in standardized coordinates for a generator.
    pub fn from_generator(gen: &GeneratorSpec) -> Result<Self, ReformError> {
        let st = UncertaintyStandardization::from_generator(gen)?;
        let d = gen.dim();
        let w = UncertaintyStandardization::bounded(gen).then(|| Polytope::cube(d));
        let cov = covariance(gen);
        let sigma = (0..d)
            .map(|i| (0..d).map(|j| cov[i][j] / (st.scale[i] * st.scale[j])).collect())
            .collect();
        let mut dev = directional_deviations(DeviationSource::Generator(gen))?;
        for k in 0..d {
            dev.delta_plus[k] /= st.scale[k];
            dev.delta_minus[k] /= st.scale[k];
        }
        Ok(Self {
            w,
            sigma: Some(sigma),
            deviations: Some(dev),
        })
    }
}

fn covariance(gen: &GeneratorSpec) -> Vec<Vec<f64>> {
    let d = gen.dim();
    let diag = |v: Vec<f64>| {
        (0..d)
            .map(|i| (0..d).map(|j| if i == j { v[i] } else { 0.0 }).collect())
            .collect()
    };
    match gen {
        GeneratorSpec::Gaussian { sigma, .. } => sigma.clone(),
        GeneratorSpec::UniformBox { lo, hi } => {
            diag(lo.iter().zip(hi).map(|(l, h)| (h - l).powi(2) / 12.0).collect())
        }
        GeneratorSpec::ScaledBernoulli { scale } => diag(scale.iter().map(|s| s * s).collect()),
        GeneratorSpec::FiniteDiscrete { points, probs } => {
            let m = gen.mean();
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            points
                                .iter()
                                .zip(probs)
                                .map(|(p, w)| w * (p[i] - m[i]) * (p[j] - m[j]))
                                .sum()
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// `|e|` as an expression: the constant itself, or a new `u ≥ ±e`.
fn abs_bound(dp: &mut DeterministicProgram, e: &AffineExpr, name: String) -> AffineExpr {
    if e.terms.is_empty() {
        return AffineExpr::constant(e.constant.abs());
    }
    let u = dp.add_continuous(name.clone(), 0.0, f64::INFINITY);
    let uv = AffineExpr::var(u);
    dp.add_row(format!("{name}_p"), uv.clone().plus(&e.clone().scaled(-1.0)), Relation::Ge);
    dp.add_row(format!("{name}_m"), uv.clone().plus(e), Relation::Ge);
    uv
}

/// `σ_{c·W}(y)` through dual multipliers: adds `λ ≥ 0`, `Gᵀλ = c·y` and
/// returns `hᵀλ`.
fn polytope_support(
    dp: &mut DeterministicProgram,
    w: &Polytope,
    y: &[AffineExpr],
    c: f64,
    tag: &str,
) -> AffineExpr {
    let lambda: Vec<usize> = (0..w.g.len())
        .map(|i| dp.add_continuous(format!("{tag}_lam_{}", i + 1), 0.0, f64::INFINITY))
        .collect();
    for (k, yk) in y.iter().enumerate() {
        let mut e = yk.clone().scaled(-c);
        for (i, &l) in lambda.iter().enumerate() {
            if w.g[i][k] != 0.0 {
                e.add_term(l, w.g[i][k]);
            }
        }
        dp.add_row(format!("{tag}_dual_{}", k + 1), e, Relation::Eq);
    }
    let mut s = AffineExpr::zero();
    for (&l, &h) in lambda.iter().zip(&w.h) {
        s.add_term(l, h);
    }
    s
}

/// `u_k ≥ a_k y_k`, `u_k ≥ −b_k y_k`, `u ≥ 0`; an infinite `a_k` (resp. `b_k`)
/// becomes the sign row `y_k ≤ 0` (resp. `y_k ≥ 0`).
fn deviation_envelope(
    dp: &mut DeterministicProgram,
    y: &[AffineExpr],
    a: &[f64],
    b: &[f64],
    which: u8,
    tag: &str,
) -> Result<Vec<AffineExpr>, ReformError> {
    let mut out = Vec::with_capacity(y.len());
    for (k, yk) in y.iter().enumerate() {
        if yk.terms.is_empty() {
            let v = yk.constant;
            if (a[k].is_infinite() && v > 0.0) || (b[k].is_infinite() && v < 0.0) {
                return Err(pi_err(
                    which,
                    format!("coefficient {} has the wrong sign for an infinite deviation", k + 1),
                ));
            }
            let m = if v > 0.0 { a[k] * v } else { -b[k] * v };
            out.push(AffineExpr::constant(if v == 0.0 { 0.0 } else { m }));
            continue;
        }
        let u = dp.add_continuous(format!("{tag}_u_{}", k + 1), 0.0, f64::INFINITY);
        let uv = AffineExpr::var(u);
        if a[k].is_finite() {
            dp.add_row(format!("{tag}_up_{}", k + 1), uv.clone().plus(&yk.clone().scaled(-a[k])), Relation::Ge);
        } else {
            dp.add_row(format!("{tag}_sign_up_{}", k + 1), yk.clone(), Relation::Le);
        }
        if b[k].is_finite() {
            dp.add_row(format!("{tag}_dn_{}", k + 1), uv.clone().plus(&yk.clone().scaled(b[k])), Relation::Ge);
        } else {
            dp.add_row(format!("{tag}_sign_dn_{}", k + 1), yk.clone(), Relation::Ge);
        }
        out.push(uv);
    }
    Ok(out)
}

/// Appends `x₀ + max_{ξ∈𝒰} ξᵀy ≤ 0` to `dp`.
pub fn robust_counterpart(
    dp: &mut DeterministicProgram,
    row: &LinearCcRow,
    uset: &UncertaintySetSpec,
    tag: &str,
) -> Result<(), ReformError> {
    uset.validate(row.d())?;
    let neg_x0 = row.x0.clone().scaled(-1.0);
    match uset {
        UncertaintySetSpec::Box => {
            let mut lhs = row.x0.clone();
            for (k, yk) in row.y.iter().enumerate() {
                let a = abs_bound(dp, yk, format!("{tag}_abs_{}", k + 1));
                lhs = lhs.plus(&a);
            }
            dp.add_row(tag, lhs, Relation::Le);
        }
        UncertaintySetSpec::Ball { r } => {
            let lhs = row.y.iter().map(|e| e.clone().scaled(*r)).collect();
            dp.add_soc(tag, lhs, neg_x0);
        }
        UncertaintySetSpec::BallBox { r } => {
            let mut rhs = neg_x0;
            let mut lhs = Vec::with_capacity(row.d());
            for (k, yk) in row.y.iter().enumerate() {
                let u = dp.add_free(format!("{tag}_split_{}", k + 1));
                let a = abs_bound(dp, &AffineExpr::var(u), format!("{tag}_abs_{}", k + 1));
                rhs = rhs.plus(&a.scaled(-1.0));
                lhs.push(yk.clone().plus(&AffineExpr::term(u, -1.0)).scaled(*r));
            }
            dp.add_soc(tag, lhs, rhs);
        }
        UncertaintySetSpec::Budget { gamma } => {
            let tau = dp.add_continuous(format!("{tag}_tau"), 0.0, f64::INFINITY);
            for (k, yk) in row.y.iter().enumerate() {
                let tv = AffineExpr::var(tau);
                dp.add_row(format!("{tag}_tp_{}", k + 1), tv.clone().plus(&yk.clone().scaled(-1.0)), Relation::Ge);
                dp.add_row(format!("{tag}_tm_{}", k + 1), tv.plus(yk), Relation::Ge);
            }
            dp.add_row(tag, row.x0.clone().plus(&AffineExpr::term(tau, *gamma)), Relation::Le);
        }
        UncertaintySetSpec::U1 { w } => {
            let s = polytope_support(dp, w, &row.y, 1.0, tag);
            dp.add_row(tag, row.x0.clone().plus(&s), Relation::Le);
        }
        UncertaintySetSpec::U2 { w, epsilon } => {
            let s = polytope_support(dp, w, &row.y, 1.0 - 1.0 / epsilon, tag);
            dp.add_row(tag, row.x0.clone().plus(&s), Relation::Le);
        }
        UncertaintySetSpec::U3 { sigma, epsilon } => {
            let kappa = u3_radius(*epsilon);
            let lhs = sqrt_sigma_times(sigma, &row.y, kappa);
            dp.add_soc(tag, lhs, neg_x0);
        }
        UncertaintySetSpec::U4 { p, q, epsilon } => {
            let u = deviation_envelope(dp, &row.y, p, q, 4, tag)?;
            let r = u4_radius(*epsilon);
            dp.add_soc(tag, u.into_iter().map(|e| e.scaled(r)).collect(), neg_x0);
        }
        UncertaintySetSpec::U5 { p, q, epsilon } => {
            let v = deviation_envelope(dp, &row.y, q, p, 5, tag)?;
            let r = u5_radius(*epsilon);
            dp.add_soc(tag, v.into_iter().map(|e| e.scaled(r)).collect(), neg_x0);
        }
    }
    Ok(())
}

fn sqrt_sigma_times(sigma: &[Vec<f64>], y: &[AffineExpr], factor: f64) -> Vec<AffineExpr> {
    symmetric_sqrt(sigma)
        .iter()
        .map(|rk| {
            let mut e = AffineExpr::zero();
            for (s, yl) in rk.iter().zip(y) {
                if *s != 0.0 {
                    e = e.plus(&yl.clone().scaled(factor * s));
                }
            }
            e.normalized()
        })
        .collect()
}

/// The uncertainty set whose counterpart equals `inf_t t + π(x₀ − t, y)/ε`.
pub fn uncertainty_set_from_pi(
    which: u8,
    eps: f64,
    ctx: &PiContext,
) -> Result<UncertaintySetSpec, ReformError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(pi_err(which, format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let need_w = || ctx.w.clone().ok_or_else(|| pi_err(which, "needs the support polytope W"));
    let need_dev = || {
        ctx.deviations
            .clone()
            .ok_or_else(|| pi_err(which, "needs directional deviations"))
    };
    Ok(match which {
        1 => UncertaintySetSpec::U1 { w: need_w()? },
        2 => UncertaintySetSpec::U2 {
            w: need_w()?,
            epsilon: eps,
        },
        3 => UncertaintySetSpec::U3 {
            sigma: ctx.sigma.clone().ok_or_else(|| pi_err(3, "needs the covariance"))?,
            epsilon: eps,
        },
        4 => {
            let dev = need_dev()?;
            UncertaintySetSpec::U4 {
                p: dev.delta_plus,
                q: dev.delta_minus,
                epsilon: eps,
            }
        }
        5 => {
            let dev = need_dev()?;
            UncertaintySetSpec::U5 {
                p: dev.delta_plus,
                q: dev.delta_minus,
                epsilon: eps,
            }
        }
        _ => return Err(pi_err(which, "bound index must be 1..=5")),
    })
}

/// Appends `t + (1/ε)πⁱ(x₀ − t, y) ≤ 0` with a new free `t`.
///
/// π¹ and π² use hinge variables and polytope duality; π³ uses
/// `‖(w, Σ^{1/2}y)‖ ≤ 2q − w`, `w = x₀ − t`, which is `q ≥ π³(w, y)`.
/// π⁴ and π⁵ go through their uncertainty sets, where `t` has already been
/// minimized out.
pub fn pi_bound_constraint(
    dp: &mut DeterministicProgram,
    which: u8,
    row: &LinearCcRow,
    eps: f64,
    ctx: &PiContext,
    tag: &str,
) -> Result<(), ReformError> {
    let uset = uncertainty_set_from_pi(which, eps, ctx)?;
    uset.validate(row.d())?;
    if which >= 4 {
        return robust_counterpart(dp, row, &uset, tag);
    }
    let t = dp.add_free(format!("{tag}_t"));
    let w = row.x0.clone().plus(&AffineExpr::term(t, -1.0));
    match &uset {
        UncertaintySetSpec::U1 { w: poly } | UncertaintySetSpec::U2 { w: poly, .. } => {
            let p = dp.add_continuous(format!("{tag}_p"), 0.0, f64::INFINITY);
            let (sign, c) = if which == 1 { (1.0, 1.0) } else { (-1.0, -1.0) };
            let s = polytope_support(dp, poly, &row.y, c, tag);
            // p ≥ sign·w + hᵀλ
            let hinge = AffineExpr::var(p)
                .plus(&w.clone().scaled(-sign))
                .plus(&s.scaled(-1.0));
            dp.add_row(format!("{tag}_hinge"), hinge, Relation::Ge);
            let mut cap = AffineExpr::var(t).plus(&AffineExpr::term(p, 1.0 / eps));
            if which == 2 {
                cap = cap.plus(&w.scaled(1.0 / eps));
            }
            dp.add_row(tag, cap.normalized(), Relation::Le);
        }
        UncertaintySetSpec::U3 { sigma, .. } => {
            let q = dp.add_free(format!("{tag}_q"));
            let mut lhs = vec![w.clone()];
            lhs.extend(sqrt_sigma_times(sigma, &row.y, 1.0));
            let rhs = AffineExpr::term(q, 2.0).plus(&w.scaled(-1.0));
            dp.add_soc(format!("{tag}_cone"), lhs, rhs.normalized());
            dp.add_row(tag, AffineExpr::var(t).plus(&AffineExpr::term(q, 1.0 / eps)), Relation::Le);
        }
        _ => unreachable!("π¹..π³ map to U1..U3"),
    }
    Ok(())
}

/// Which approximation [`robust_program`] applies to every row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustSetKind {
    Box,
    Ball,
    BallBox,
    Budget,
    /// CVaR bound `πⁱ`, `i ∈ 1..=5`.
    Pi(u8),
}

/// Safe approximation of a (possibly joint) program: Bonferroni split,
/// standardization by the generator, one counterpart per row.
pub fn robust_program(
    prog: &CcProgram,
    gen: &GeneratorSpec,
    kind: RobustSetKind,
    weights: Option<&[f64]>,
) -> Result<DeterministicProgram, ReformError> {
    if gen.dim() != prog.d() {
        return Err(ReformError::ScenarioDim {
            expected: prog.d(),
            got: gen.dim(),
        });
    }
    let st = UncertaintyStandardization::from_generator(gen)?;
    let d = prog.d();
    let (method, label) = match kind {
        RobustSetKind::Pi(i) => (Method::PiBound, format!("pi{i}")),
        other => (Method::Robust, format!("{other:?}").to_lowercase()),
    };
    let ctx = match kind {
        RobustSetKind::Pi(_) => Some(PiContext::from_generator(gen)?),
        _ => None,
    };
    let mut dp = frame_program(
        prog.frame(),
        Provenance::new(method, format!("{label} eps={}", prog.epsilon()), None),
    );
    for (i, single) in bonferroni_split(prog, weights)?.iter().enumerate() {
        let eps = single.epsilon();
        let row = LinearCcRow::from_cc_row(&single.rows()[0]).standardized(&st);
        let tag = format!("rc_{}", i + 1);
        match kind {
            RobustSetKind::Pi(which) => {
                pi_bound_constraint(&mut dp, which, &row, eps, ctx.as_ref().expect("set above"), &tag)?
            }
            RobustSetKind::Box => robust_counterpart(&mut dp, &row, &UncertaintySetSpec::Box, &tag)?,
            RobustSetKind::Ball => robust_counterpart(
                &mut dp,
                &row,
                &UncertaintySetSpec::Ball { r: ball_radius(eps) },
                &tag,
            )?,
            RobustSetKind::BallBox => robust_counterpart(
                &mut dp,
                &row,
                &UncertaintySetSpec::BallBox { r: ball_radius(eps) },
                &tag,
            )?,
            RobustSetKind::Budget => robust_counterpart(
                &mut dp,
                &row,
                &UncertaintySetSpec::Budget {
                    gamma: budget_gamma(d, eps),
                },
                &tag,
            )?,
        }
    }
    Ok(dp)
}

/// Direct evaluation of the π bounds at fixed `(x₀, y)` by one-dimensional
/// search. Slow; meant for checking the conic encodings.
pub mod direct {
    use super::*;
    use crate::solver::{solve_lp, LpOptions, Status};

    /// `max_{ξ∈W} ξᵀy` by LP; `None` when unbounded.
    pub fn support_value(w: &Polytope, y: &[f64]) -> Option<f64> {
        let d = y.len();
        let mut dp = DeterministicProgram::new(Provenance::new(Method::Custom, "support", None));
        for k in 0..d {
            dp.add_free(format!("xi_{}", k + 1));
        }
        dp.objective = AffineExpr::dense(0, y, 0.0).scaled(-1.0);
        for (i, (g, h)) in w.g.iter().zip(&w.h).enumerate() {
            dp.add_row(format!("w_{i}"), AffineExpr::dense(0, g, -h), Relation::Le);
        }
        let r = solve_lp(&dp, &LpOptions::default()).ok()?;
        (r.status == Status::Optimal).then_some(-r.objective)
    }

    /// Minimum of a unimodal function: symmetric doubling from `center`
    /// until both ends rise, then golden section.
    pub fn minimize_unimodal(f: impl Fn(f64) -> f64, center: f64, step: f64) -> f64 {
        let fc = f(center);
        let mut s = step.max(1e-12);
        for _ in 0..200 {
            if f(center - s) >= fc && f(center + s) >= fc {
                break;
            }
            s *= 2.0;
        }
        let (mut a, mut b) = (center - s, center + s);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut f_c, mut f_d) = (f(c), f(d));
        for _ in 0..400 {
            if f_c <= f_d {
                b = d;
                d = c;
                f_d = f_c;
                c = b - g * (b - a);
                f_c = f(c);
            } else {
                a = c;
                c = d;
                f_c = f_d;
                d = a + g * (b - a);
                f_d = f(d);
            }
            if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
        }
        f_c.min(f_d).min(fc)
    }

    /// `inf_{μ>0} (μ/e)·exp(a/μ + V/(2μ²))`, the core of π⁴ and π⁵.
    pub fn exp_envelope(a: f64, v: f64) -> f64 {
        if v <= 0.0 {
            return a.max(0.0);
        }
        // log of the objective at μ = e^s
        let h = |s: f64| s - 1.0 + a * (-s).exp() + 0.5 * v * (-2.0 * s).exp();
        let center = v.sqrt().max(a.abs()).max(1e-300).ln();
        minimize_unimodal(h, center, 1.0).exp()
    }

    fn envelope_norm2(y: &[f64], a: &[f64], b: &[f64]) -> f64 {
        y.iter()
            .enumerate()
            .map(|(k, &v)| {
                let m = if v > 0.0 {
                    a[k] * v
                } else if v < 0.0 {
                    -b[k] * v
                } else {
                    0.0
                };
                m * m
            })
            .sum()
    }

    /// `πⁱ(x₀, y)`; `+∞` outside the finiteness domain.
    pub fn pi(which: u8, x0: f64, y: &[f64], ctx: &PiContext) -> Result<f64, ReformError> {
        Ok(match which {
            1 | 2 => {
                let w = ctx.w.as_ref().ok_or_else(|| pi_err(which, "needs W"))?;
                if which == 1 {
                    let s = support_value(w, y).unwrap_or(f64::INFINITY);
                    (x0 + s).max(0.0)
                } else {
                    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
                    let s = support_value(w, &neg).unwrap_or(f64::INFINITY);
                    x0 + (s - x0).max(0.0)
                }
            }
            3 => {
                let sigma = ctx.sigma.as_ref().ok_or_else(|| pi_err(3, "needs Σ"))?;
                let quad: f64 = (0..y.len())
                    .map(|i| (0..y.len()).map(|j| y[i] * sigma[i][j] * y[j]).sum::<f64>())
                    .sum();
                0.5 * (x0 + (x0 * x0 + quad.max(0.0)).sqrt())
            }
            4 | 5 => {
                let dev = ctx.deviations.as_ref().ok_or_else(|| pi_err(which, "needs P, Q"))?;
                let (p, q) = (&dev.delta_plus, &dev.delta_minus);
                if which == 4 {
                    exp_envelope(x0, envelope_norm2(y, p, q))
                } else {
                    x0 + exp_envelope(-x0, envelope_norm2(y, q, p))
                }
            }
            _ => return Err(pi_err(which, "bound index must be 1..=5")),
        })
    }

    /// `inf_t t + πⁱ(x₀ − t, y)/ε` by golden section over `t`.
    pub fn cvar_bound(which: u8, x0: f64, y: &[f64], eps: f64, ctx: &PiContext) -> Result<f64, ReformError> {
        let f = |t: f64| -> f64 {
            t + pi(which, x0 - t, y, ctx).unwrap_or(f64::INFINITY) / eps
        };
        pi(which, x0, y, ctx)?;
        let scale = 1.0 + x0.abs() + y.iter().map(|v| v.abs()).sum::<f64>();
        Ok(minimize_unimodal(f, x0, scale))
    }
}
