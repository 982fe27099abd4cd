//! Sample average approximation as a cardinality-constrained MILP.
//!
//! The budget row is `Σ z_j ≤ ⌊ε'N⌋`, the integer tightening of
//! `(1/N)Σ z_j ≤ ε'`.

use crate::model::{CcProgram, CcRow, Relation, ScenarioSet};
use crate::program::{AffineExpr, DeterministicProgram, Method, Provenance, VarKind};
use crate::special::floor_tol;

use super::{check_level, frame_program, row_at, ReformError};

fn check_dim(prog: &CcProgram, scen: &ScenarioSet) -> Result<(), ReformError> {
    if scen.dim() != prog.d() {
        return Err(ReformError::ScenarioDim {
            expected: prog.d(),
            got: scen.dim(),
        });
    }
    Ok(())
}

fn add_budget(dp: &mut DeterministicProgram, z: &[usize], level: f64) {
    let budget = floor_tol(level * z.len() as f64);
    let mut e = AffineExpr::constant(-budget);
    for &k in z {
        e.add_term(k, 1.0);
    }
    dp.add_row("budget", e, Relation::Le);
}

/// Maximum of `f_i(·, ξ)` over the variable box, clamped at zero;
/// `None` when a needed bound is infinite.
pub fn auto_big_m(prog: &CcProgram, row: &CcRow, xi: &[f64]) -> Result<f64, ReformError> {
    let frame = prog.frame();
    let (coefs, constant) = row.coefs_at(xi);
    let mut m = constant;
    for (j, &c) in coefs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let bound = if c > 0.0 { frame.upper[j] } else { frame.lower[j] };
        if !bound.is_finite() {
            return Err(ReformError::UnboundedBigM(j));
        }
        m += c * bound;
    }
    Ok(m.max(0.0))
}

/// `f_i(x, ξʲ) ≤ M_ij z_j`, `Σ z ≤ ⌊ε'N⌋`, `z` binary.
pub fn saa_big_m(
    prog: &CcProgram,
    scen: &ScenarioSet,
    level: f64,
    big_m: Option<f64>,
) -> Result<DeterministicProgram, ReformError> {
    check_level(level)?;
    check_dim(prog, scen)?;
    let mut dp = frame_program(
        prog.frame(),
        Provenance::new(Method::SaaBigM, format!("level={level}"), Some(scen.len())),
    );
    let z: Vec<usize> = (0..scen.len())
        .map(|j| dp.add_var(format!("z_{}", j + 1), VarKind::Binary, 0.0, 1.0))
        .collect();
    for (j, xi) in scen.iter().enumerate() {
        for (i, row) in prog.rows().iter().enumerate() {
            let m = match big_m {
                Some(m) => m,
                None => auto_big_m(prog, row, xi)?,
            };
            let mut e = row_at(row, xi);
            e.add_term(z[j], -m);
            dp.add_row(format!("sc_{}_{}", j + 1, i + 1), e, Relation::Le);
        }
    }
    add_budget(&mut dp, &z, level);
    Ok(dp)
}

/// Strong formulation for right-hand-side uncertainty.
///
/// Row `i` reads `v_i ≥ ζ_i` with `v_i = −(a⁰_iᵀx + b⁰_i)` and
/// `ζ_i = b_iᵀξ`. Each row is shifted by `c_i = min(0, min_j ζ_iʲ)` so the
/// scenario values are nonnegative; then `ṽ_i + ζ̃_iʲ z_j ≥ ζ̃_iʲ`. Because
/// the budget keeps at least one scenario, `ṽ_i ≥ 0` is implied and the
/// shift does not change the feasible set.
pub fn saa_separable_strong(
    prog: &CcProgram,
    scen: &ScenarioSet,
    level: f64,
) -> Result<DeterministicProgram, ReformError> {
    check_level(level)?;
    check_dim(prog, scen)?;
    if !prog.is_separable() {
        return Err(ReformError::NotSeparable);
    }
    let mut dp = frame_program(
        prog.frame(),
        Provenance::new(Method::SaaStrong, format!("level={level}"), Some(scen.len())),
    );
    let n = prog.n();
    let mut v = Vec::with_capacity(prog.m());
    let mut zeta = Vec::with_capacity(prog.m());
    for (i, row) in prog.rows().iter().enumerate() {
        let values: Vec<f64> = scen
            .iter()
            .map(|xi| row.unc_offset.iter().zip(xi).map(|(b, x)| b * x).sum())
            .collect();
        let shift = values.iter().copied().fold(0.0f64, f64::min);
        let vi = dp.add_free(format!("v_{}", i + 1));
        // ṽ_i = v_i − c_i, i.e. ṽ_i + a⁰ᵀx + b⁰ + c_i = 0
        let mut e = AffineExpr::dense(0, &row.base_coefs, row.base_offset + shift);
        e.add_term(vi, 1.0);
        dp.add_row(format!("vdef_{}", i + 1), e, Relation::Eq);
        v.push(vi);
        zeta.push(values.into_iter().map(|z| z - shift).collect::<Vec<f64>>());
    }
    debug_assert!(v.iter().all(|&k| k >= n));
    let z: Vec<usize> = (0..scen.len())
        .map(|j| dp.add_var(format!("z_{}", j + 1), VarKind::Binary, 0.0, 1.0))
        .collect();
    for j in 0..scen.len() {
        for i in 0..prog.m() {
            let zt = zeta[i][j];
            let mut e = AffineExpr::var(v[i]).with_constant(-zt);
            e.add_term(z[j], zt);
            dp.add_row(format!("sc_{}_{}", j + 1, i + 1), e, Relation::Ge);
        }
    }
    add_budget(&mut dp, &z, level);
    Ok(dp)
}
