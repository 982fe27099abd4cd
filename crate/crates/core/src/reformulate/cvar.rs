//! Sample CVaR: `CVaR_ε(f̄) ≤ 0` over the empirical distribution, written
//! with hinge variables `s_j ≥ [f̄(x, ξʲ) + t]₊` and `(1/N)Σ s_j ≤ εt`.
//! `t` is free; `−t` plays the role of the VaR level.

use crate::model::{CcProgram, Relation, ScenarioSet};
use crate::program::{AffineExpr, DeterministicProgram, Method, Provenance};

use super::{frame_program, row_at, ReformError};

fn check(prog: &CcProgram, scen: &ScenarioSet, eps: f64) -> Result<(), ReformError> {
    if scen.dim() != prog.d() {
        return Err(ReformError::ScenarioDim {
            expected: prog.d(),
            got: scen.dim(),
        });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ReformError::Level(eps));
    }
    Ok(())
}

pub fn cvar_sample(
    prog: &CcProgram,
    scen: &ScenarioSet,
    eps: f64,
) -> Result<DeterministicProgram, ReformError> {
    check(prog, scen, eps)?;
    let mut dp = frame_program(
        prog.frame(),
        Provenance::new(Method::CvarSample, format!("eps={eps}"), Some(scen.len())),
    );
    let t = dp.add_free("t");
    let s: Vec<usize> = (0..scen.len())
        .map(|j| dp.add_continuous(format!("s_{}", j + 1), 0.0, f64::INFINITY))
        .collect();
    for (j, xi) in scen.iter().enumerate() {
        for (i, row) in prog.rows().iter().enumerate() {
            let mut e = row_at(row, xi);
            e.add_term(t, 1.0).add_term(s[j], -1.0);
            dp.add_row(format!("hinge_{}_{}", j + 1, i + 1), e, Relation::Le);
        }
    }
    let n = scen.len() as f64;
    let mut e = AffineExpr::term(t, -eps);
    for &k in &s {
        e.add_term(k, 1.0 / n);
    }
    dp.add_row("cvar", e, Relation::Le);
    Ok(dp)
}

/// LP whose optimum is the empirical `CVaR_ε` of `f̄(x, ·)` at a fixed `x`:
/// `min γ + (1/(εN)) Σ s_j`, `s_j ≥ f_i(x, ξʲ) − γ`, `s ≥ 0`.
pub fn cvar_evaluation(
    prog: &CcProgram,
    x: &[f64],
    scen: &ScenarioSet,
    eps: f64,
) -> Result<DeterministicProgram, ReformError> {
    check(prog, scen, eps)?;
    if x.len() != prog.n() {
        return Err(ReformError::Model(crate::model::ModelError::Dimension {
            what: "decision vector".into(),
            expected: prog.n(),
            got: x.len(),
        }));
    }
    let mut dp = DeterministicProgram::new(Provenance::new(
        Method::CvarEvaluation,
        format!("eps={eps}"),
        Some(scen.len()),
    ));
    let gamma = dp.add_free("gamma");
    let n = scen.len() as f64;
    let s: Vec<usize> = (0..scen.len())
        .map(|j| dp.add_continuous(format!("s_{}", j + 1), 0.0, f64::INFINITY))
        .collect();
    let mut obj = AffineExpr::var(gamma);
    for &k in &s {
        obj.add_term(k, 1.0 / (eps * n));
    }
    dp.objective = obj;
    for (j, xi) in scen.iter().enumerate() {
        for (i, row) in prog.rows().iter().enumerate() {
            let f = row.value(x, xi);
            let e = AffineExpr::var(s[j])
                .plus(&AffineExpr::var(gamma))
                .with_constant(-f);
            dp.add_row(format!("tail_{}_{}", j + 1, i + 1), e, Relation::Ge);
        }
    }
    Ok(dp)
}
