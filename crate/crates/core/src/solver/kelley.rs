//! Kelley cutting planes for `‖Fv + g‖ ≤ hᵀv + s` rows.
//!
//! At a point where the inner vector `w = Fv̂ + g` is nonzero, the
//! supporting hyperplane of the norm gives the valid cut
//! `(wᵀ/‖w‖)(Fv + g) ≤ hᵀv + s`; at `w = 0` the cut is `0 ≤ hᵀv + s`.
//! Rows whose inner vector does not depend on `v` are linear from the start.

use crate::model::Relation;
use crate::program::{AffineExpr, DeterministicProgram, SocRow};

use super::simplex::{solve_lp_with_bounds, LpOptions};
use super::{SolveResult, SolverError, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelleyOptions {
    pub max_rounds: u64,
    pub tol: f64,
    pub lp: LpOptions,
}

impl Default for KelleyOptions {
    fn default() -> Self {
        Self {
            max_rounds: 500,
            tol: 1e-7,
            lp: LpOptions::default(),
        }
    }
}

fn cut_at(row: &SocRow, v: &[f64]) -> AffineExpr {
    let w: Vec<f64> = row.lhs.iter().map(|e| e.eval(v)).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut cut = row.rhs.clone().scaled(-1.0);
    if norm > 0.0 {
        for (e, wk) in row.lhs.iter().zip(&w) {
            cut = cut.plus(&e.clone().scaled(wk / norm));
        }
    }
    cut
}

pub fn solve_soc(dp: &DeterministicProgram, opts: &KelleyOptions) -> Result<SolveResult, SolverError> {
    kelley_trace(dp, opts).map(|(r, _)| r)
}

/// Kelley loop that also returns the LP objective of every round.
pub fn kelley_trace(
    dp: &DeterministicProgram,
    opts: &KelleyOptions,
) -> Result<(SolveResult, Vec<f64>), SolverError> {
    if dp.has_binaries() {
        return Err(SolverError::Unsupported("solve_soc: program has binary variables"));
    }
    dp.validate()?;
    let lower: Vec<f64> = dp.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = dp.variables.iter().map(|v| v.upper).collect();

    let mut work = dp.clone();
    work.soc_rows.clear();
    let mut cones = Vec::new();
    for row in &dp.soc_rows {
        if row.lhs.iter().all(|e| e.terms.is_empty()) {
            let norm = row.norm(&[]);
            work.add_row(
                format!("{}_lin", row.name),
                row.rhs.clone().scaled(-1.0).with_constant(norm),
                Relation::Le,
            );
        } else {
            cones.push(row);
        }
    }

    let mut pivots = 0;
    let mut trace = Vec::new();
    let mut rounds = 0u64;
    loop {
        rounds += 1;
        let r = solve_lp_with_bounds(&work, &lower, &upper, &opts.lp);
        pivots += r.pivots;
        match r.status {
            Status::Optimal => {}
            Status::Unbounded => return Err(SolverError::UnboundedRelaxation),
            status => {
                let mut out = SolveResult::without_solution(status, pivots);
                out.cut_rounds = rounds;
                return Ok((out, trace));
            }
        }
        trace.push(r.objective);
        let worst = cones
            .iter()
            .map(|c| c.excess(&r.x))
            .fold(0.0f64, f64::max);
        let done = worst <= opts.tol;
        if done || rounds >= opts.max_rounds {
            let out = SolveResult {
                status: if done {
                    Status::Optimal
                } else {
                    Status::IterationLimit
                },
                objective: r.objective,
                x: r.x,
                support_set: None,
                degenerate: None,
                duals: None,
                pivots,
                nodes: 0,
                cut_rounds: rounds,
            };
            return Ok((out, trace));
        }
        for (k, c) in cones.iter().enumerate() {
            if c.excess(&r.x) > opts.tol {
                work.add_row(format!("cut_{k}_{rounds}"), cut_at(c, &r.x), Relation::Le);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{Method, Provenance};

    fn base() -> DeterministicProgram {
        DeterministicProgram::new(Provenance::new(Method::Custom, "", None))
    }

    #[test]
    fn disc_minimization() {
        // min x + y  s.t. ‖(x, y)‖ ≤ 1  → −√2
        let mut dp = base();
        let x = dp.add_continuous("x", -2.0, 2.0);
        let y = dp.add_continuous("y", -2.0, 2.0);
        dp.objective = AffineExpr::var(x).plus(&AffineExpr::var(y));
        dp.add_soc("disc", vec![AffineExpr::var(x), AffineExpr::var(y)], AffineExpr::constant(1.0));
        let (r, trace) = kelley_trace(&dp, &KelleyOptions::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective + 2f64.sqrt()).abs() < 1e-6);
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn constant_norm_is_linear() {
        let mut dp = base();
        let x = dp.add_free("x");
        dp.objective = AffineExpr::var(x);
        dp.add_soc(
            "c",
            vec![AffineExpr::constant(0.0), AffineExpr::constant(0.0)],
            AffineExpr::var(x),
        );
        let r = solve_soc(&dp, &KelleyOptions::default()).unwrap();
        assert_eq!(r.cut_rounds, 1);
        assert_eq!(r.x[0], 0.0);
    }

    #[test]
    fn unbounded_relaxation_is_reported() {
        let mut dp = base();
        let x = dp.add_free("x");
        let t = dp.add_free("t");
        dp.objective = AffineExpr::var(t);
        dp.add_soc("c", vec![AffineExpr::var(x)], AffineExpr::var(t));
        assert_eq!(
            solve_soc(&dp, &KelleyOptions::default()),
            Err(SolverError::UnboundedRelaxation)
        );
    }
}
