//! Chance-constrained program → deterministic program.

mod cvar;
mod deviations;
mod gaussian;
mod robust;
mod saa;
mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CcProgram, CcRow, GeneratorSpec, LinearFrame, ModelError, ScenarioSet};
use crate::program::{AffineExpr, DeterministicProgram, Provenance};

pub use cvar::{cvar_evaluation, cvar_sample};
pub use deviations::{
    directional_deviation, directional_deviations, DeviationSource, DirectionalDeviations,
    DEVIATION_CAP,
};
pub use gaussian::{gaussian_program, gaussian_socp};
pub use robust::{
    ball_radius, budget_gamma, pi_bound_constraint, robust_counterpart, robust_program,
    uncertainty_set_from_pi, u3_radius, u4_radius, u5_radius, direct, LinearCcRow, PiContext,
    Polytope, RobustSetKind, UncertaintySetSpec, UncertaintyStandardization,
};
pub use saa::{auto_big_m, saa_big_m, saa_separable_strong};
pub use scenario::{scenario_problem, scenario_problem_from};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReformError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("scenario dimension {got} does not match uncertainty dimension {expected}")]
    ScenarioDim { expected: usize, got: usize },
    #[error("level {0} must lie in [0, 1)")]
    Level(f64),
    #[error("big-M cannot be derived: variable {0} has an infinite bound; pass an explicit M")]
    UnboundedBigM(usize),
    #[error("program is not separable: uncertainty multiplies decision variables")]
    NotSeparable,
    #[error("Bonferroni weights: {0}")]
    Weights(String),
    #[error("uncertainty set: {0}")]
    UncertaintySet(String),
    #[error("pi bound {which}: {reason}")]
    PiBound { which: u8, reason: String },
    #[error("Gaussian reformulation: {0}")]
    Gaussian(String),
    #[error("{0}")]
    Deviation(String),
    #[error("{0}")]
    Input(String),
}

/// A reformulation together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Scenario,
    Saa {
        eps_level: f64,
        #[serde(default)]
        big_m: Option<f64>,
        /// Use the big-M-free form (separable programs only).
        #[serde(default)]
        strong: bool,
    },
    Cvar,
    Robust {
        set: RobustSetKind,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    Gaussian,
}

impl MethodSpec {
    pub fn needs_scenarios(&self) -> bool {
        matches!(self, Self::Scenario | Self::Saa { .. } | Self::Cvar)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Scenario => "scenario".into(),
            Self::Saa { strong: true, .. } => "saa_strong".into(),
            Self::Saa { .. } => "saa".into(),
            Self::Cvar => "cvar".into(),
            Self::Robust { set, .. } => match set {
                RobustSetKind::Pi(i) => format!("robust_pi{i}"),
                other => format!("robust_{}", format!("{other:?}").to_lowercase()),
            },
            Self::Gaussian => "gaussian".into(),
        }
    }
}

/// Builds the deterministic program for `spec`. Sample-based methods need
/// `scen`; robust and Gaussian ones need `gen`.
pub fn reformulate(
    prog: &CcProgram,
    spec: &MethodSpec,
    scen: Option<&ScenarioSet>,
    gen: Option<&GeneratorSpec>,
) -> Result<DeterministicProgram, ReformError> {
    let need_scen = || scen.ok_or_else(|| ReformError::Input(format!("{} needs scenarios", spec.name())));
    let need_gen = || gen.ok_or_else(|| ReformError::Input(format!("{} needs a generator", spec.name())));
    match spec {
        MethodSpec::Scenario => scenario_problem(prog, need_scen()?),
        MethodSpec::Saa {
            eps_level,
            big_m,
            strong,
        } => {
            if *strong {
                saa_separable_strong(prog, need_scen()?, *eps_level)
            } else {
                saa_big_m(prog, need_scen()?, *eps_level, *big_m)
            }
        }
        MethodSpec::Cvar => cvar_sample(prog, need_scen()?, prog.epsilon()),
        MethodSpec::Robust { set, weights } => robust_program(prog, need_gen()?, *set, weights.as_deref()),
        MethodSpec::Gaussian => gaussian_program(prog, need_gen()?),
    }
}

/// Deterministic program holding `x`, the objective and the rows of `𝒳`.
pub(crate) fn frame_program(frame: &LinearFrame, provenance: Provenance) -> DeterministicProgram {
    let mut dp = DeterministicProgram::new(provenance);
    for j in 0..frame.n() {
        dp.add_continuous(format!("x_{}", j + 1), frame.lower[j], frame.upper[j]);
    }
    dp.n_decision = frame.n();
    dp.objective = AffineExpr::dense(0, &frame.objective, 0.0);
    for (i, c) in frame.constraints.iter().enumerate() {
        dp.add_row(
            format!("det_{}", i + 1),
            AffineExpr::dense(0, &c.coefs, -c.rhs),
            c.relation,
        );
    }
    dp
}

/// `f_i(x, ξ)` as an affine expression in `x` (variables `0..n`).
pub(crate) fn row_at(row: &CcRow, xi: &[f64]) -> AffineExpr {
    let (coefs, constant) = row.coefs_at(xi);
    AffineExpr::dense(0, &coefs, constant)
}

pub(crate) fn check_level(level: f64) -> Result<(), ReformError> {
    if (0.0..1.0).contains(&level) {
        Ok(())
    } else {
        Err(ReformError::Level(level))
    }
}

/// Splits a joint constraint into individual ones with levels `ε_i`,
/// `Σ ε_i ≤ ε` (default `ε/m` each). A safe approximation, not an equivalence.
pub fn bonferroni_split(
    prog: &CcProgram,
    weights: Option<&[f64]>,
) -> Result<Vec<CcProgram>, ReformError> {
    let m = prog.m();
    let eps = prog.epsilon();
    let levels: Vec<f64> = match weights {
        None => vec![eps / m as f64; m],
        Some(w) => {
            if w.len() != m {
                return Err(ReformError::Weights(format!(
                    "expected {m} weights, got {}",
                    w.len()
                )));
            }
            if w.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
                return Err(ReformError::Weights("each weight must lie in (0, 1)".into()));
            }
            let total: f64 = w.iter().sum();
            if total > eps * (1.0 + 1e-12) {
                return Err(ReformError::Weights(format!(
                    "weights sum to {total}, above epsilon {eps}"
                )));
            }
            w.to_vec()
        }
    };
    prog.rows()
        .iter()
        .zip(levels)
        .map(|(row, level)| Ok(prog.with_rows(vec![row.clone()], level)?))
        .collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::model::{CcProgram, CcRow, LinearFrame, ScenarioOrigin, ScenarioSet};

    /// `min Σx  s.t.  P(x_j ≥ ξ_j ∀j) ≥ 1 − ε`, `x ∈ [lo, hi]ⁿ`.
    pub fn coordinatewise(n: usize, eps: f64, lo: f64, hi: f64) -> CcProgram {
        let frame = LinearFrame::with_box(vec![1.0; n], lo, hi);
        let rows = (0..n)
            .map(|j| {
                let mut a = vec![0.0; n];
                a[j] = -1.0;
                let mut b = vec![0.0; n];
                b[j] = 1.0;
                CcRow::separable(a, 0.0, b)
            })
            .collect();
        CcProgram::new(frame, n, rows, eps).unwrap()
    }

    pub fn scenarios(rows: Vec<Vec<f64>>) -> ScenarioSet {
        ScenarioSet::from_rows(rows, ScenarioOrigin::Derived).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::coordinatewise;
    use super::*;

    #[test]
    fn bonferroni_examples() {
        let p1 = coordinatewise(1, 0.1, 0.0, 1.0);
        let s = bonferroni_split(&p1, None).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0], p1);

        let p2 = coordinatewise(2, 0.1, 0.0, 1.0);
        let s = bonferroni_split(&p2, None).unwrap();
        assert_eq!(s.iter().map(|p| p.epsilon()).collect::<Vec<_>>(), vec![0.05, 0.05]);
        assert_eq!(s[1].rows()[0], p2.rows()[1]);

        assert!(matches!(
            bonferroni_split(&p2, Some(&[0.08, 0.04])),
            Err(ReformError::Weights(_))
        ));
        assert!(bonferroni_split(&p2, Some(&[0.07, 0.03])).is_ok());
    }
}
