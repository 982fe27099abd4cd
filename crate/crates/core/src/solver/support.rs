//! Support scenarios of a scenario program: scenario `j` supports the
//! solution when removing it changes the (tie-broken) optimizer.
//!
//! Ties between optimal solutions are broken lexicographically: fix the
//! objective at its optimum, then minimize `x₁`, `x₂`, … in turn. Without a
//! rule like this the optimizer of an LP with a flat optimal face depends on
//! pivoting history and removal comparisons are meaningless.

use serde::{Deserialize, Serialize};

use crate::model::{CcProgram, Relation, ScenarioSet};
use crate::par::{map_indexed, ExecMode};
use crate::program::{AffineExpr, DeterministicProgram};
use crate::reformulate::scenario_problem_from;

use super::simplex::{solve_lp, LpOptions};
use super::{SolveResult, SolverError, Status, SUPPORT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    /// Zero-based scenario indices `𝒮`.
    pub support: Vec<usize>,
    /// `s*_N = |𝒮|`.
    pub count: usize,
    /// `|o*(𝒮) − o*(𝒩)| > 1e-7`, or `o*(𝒮)` unbounded.
    pub degenerate: bool,
    pub objective_full: f64,
    pub objective_support: f64,
    /// Tie-broken optimizer of the full program.
    pub x: Vec<f64>,
}

fn fix_tol(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

/// Lexicographically smallest optimal decision vector of an LP.
pub fn lexicographic_optimum(dp: &DeterministicProgram, opts: &LpOptions) -> Result<SolveResult, SolverError> {
    let first = solve_lp(dp, opts)?;
    if !first.is_optimal() {
        return Ok(first);
    }
    let mut work = dp.clone();
    let o = first.objective;
    work.add_row("lex_obj", dp.objective.clone().with_constant(dp.objective.constant - o - fix_tol(o)), Relation::Le);
    let mut last = first.clone();
    let mut pivots = first.pivots;
    for k in 0..dp.n_decision {
        work.objective = AffineExpr::var(k);
        let r = solve_lp(&work, opts)?;
        pivots += r.pivots;
        if !r.is_optimal() {
            // unbounded below along a free coordinate: keep the previous point
            break;
        }
        let v = r.x[k];
        work.add_row(format!("lex_{k}"), AffineExpr::var(k).with_constant(-v - fix_tol(v)), Relation::Le);
        last = r;
    }
    last.objective = dp.objective_value(&last.x);
    last.pivots = pivots;
    last.duals = None;
    Ok(last)
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Removal test for every scenario, then `o*(𝒮)` for degeneracy.
/// `base` must be an optimal solve of the full scenario program.
pub fn find_support_scenarios(
    prog: &CcProgram,
    scen: &ScenarioSet,
    base: &SolveResult,
    mode: ExecMode,
) -> Result<SupportReport, SolverError> {
    if !base.is_optimal() {
        return Err(SolverError::NotOptimal(base.status));
    }
    if scen.dim() != prog.d() {
        return Err(SolverError::Scenario(format!(
            "scenario dimension {} does not match {}",
            scen.dim(),
            prog.d()
        )));
    }
    let opts = LpOptions::default();
    let n = prog.n();
    let full = scenario_problem_from(prog, scen.iter().enumerate());
    let reference = lexicographic_optimum(&full, &opts)?;
    if !reference.is_optimal() {
        return Err(SolverError::NotOptimal(reference.status));
    }
    let x_ref = reference.x[..n].to_vec();

    let changed: Vec<Result<bool, SolverError>> = map_indexed(scen.len(), mode, |j| {
        let dp = scenario_problem_from(
            prog,
            scen.iter().enumerate().filter(|(i, _)| *i != j),
        );
        let r = lexicographic_optimum(&dp, &opts)?;
        Ok(match r.status {
            Status::Optimal => inf_dist(&r.x[..n], &x_ref) > SUPPORT_TOL,
            _ => true,
        })
    });
    let mut support = Vec::new();
    for (j, c) in changed.into_iter().enumerate() {
        if c? {
            support.push(j);
        }
    }

    let reduced = scenario_problem_from(prog, support.iter().map(|&j| (j, scen.row(j))));
    let r = solve_lp(&reduced, &opts)?;
    let objective_full = reference.objective;
    let (objective_support, degenerate) = match r.status {
        Status::Optimal => (r.objective, (r.objective - objective_full).abs() > SUPPORT_TOL),
        Status::Unbounded => (f64::NEG_INFINITY, true),
        other => return Err(SolverError::NotOptimal(other)),
    };
    Ok(SupportReport {
        count: support.len(),
        support,
        degenerate,
        objective_full,
        objective_support,
        x: x_ref,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{draw_scenarios, CcRow, GeneratorSpec, LinearFrame, ScenarioOrigin};
    use crate::program::{Method, Provenance};

    fn coordinatewise(n: usize) -> CcProgram {
        let frame = LinearFrame::with_box(vec![1.0; n], -10.0, 10.0);
        let rows = (0..n)
            .map(|j| {
                let mut a = vec![0.0; n];
                a[j] = -1.0;
                let mut b = vec![0.0; n];
                b[j] = 1.0;
                CcRow::separable(a, 0.0, b)
            })
            .collect();
        CcProgram::new(frame, n, rows, 0.1).unwrap()
    }

    fn report(prog: &CcProgram, rows: Vec<Vec<f64>>) -> SupportReport {
        let scen = ScenarioSet::from_rows(rows, ScenarioOrigin::Derived).unwrap();
        let base = solve_lp(&scenario_problem_from(prog, scen.iter().enumerate()), &LpOptions::default()).unwrap();
        find_support_scenarios(prog, &scen, &base, ExecMode::Sequential).unwrap()
    }

    #[test]
    fn max_scenario_supports() {
        let r = report(&coordinatewise(1), vec![vec![0.3], vec![0.9]]);
        assert_eq!(r.support, vec![1]);
        assert_eq!(r.count, 1);
        assert!(!r.degenerate);
    }

    #[test]
    fn duplicated_max_is_degenerate() {
        let r = report(&coordinatewise(1), vec![vec![0.9], vec![0.9], vec![0.2]]);
        assert_eq!(r.count, 0);
        assert!(r.degenerate);
        assert_eq!(r.objective_support, -10.0);
    }

    #[test]
    fn coordinatewise_argmax_oracle() {
        let prog = coordinatewise(2);
        let gen = GeneratorSpec::UniformBox {
            lo: vec![0.0; 2],
            hi: vec![1.0; 2],
        };
        for seed in 0..10 {
            let scen = draw_scenarios(&gen, 5, seed).unwrap();
            let mut oracle: Vec<usize> = (0..2)
                .map(|k| {
                    (0..5)
                        .max_by(|&a, &b| scen.row(a)[k].total_cmp(&scen.row(b)[k]))
                        .unwrap()
                })
                .collect();
            oracle.sort_unstable();
            oracle.dedup();
            let r = report(&prog, scen.to_rows());
            assert_eq!(r.support, oracle, "seed {seed}");
            assert!(r.count <= 2);
            assert!(!r.degenerate);
        }
    }

    #[test]
    fn lexicographic_tie_break_on_flat_face() {
        // min x₁ + x₂ over x₁ + x₂ ≥ 1, x ∈ [0, 1]²: the whole segment is optimal
        let mut dp = DeterministicProgram::new(Provenance::new(Method::Custom, "", None));
        let a = dp.add_continuous("a", 0.0, 1.0);
        let b = dp.add_continuous("b", 0.0, 1.0);
        dp.n_decision = 2;
        dp.objective = AffineExpr::var(a).plus(&AffineExpr::var(b));
        dp.add_row("r", AffineExpr::var(a).plus(&AffineExpr::var(b)).with_constant(-1.0), Relation::Ge);
        let r = lexicographic_optimum(&dp, &LpOptions::default()).unwrap();
        assert!(r.x[0].abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
        assert!((r.objective - 1.0).abs() < 1e-8);
    }

    #[test]
    fn modes_agree() {
        let prog = coordinatewise(3);
        let gen = GeneratorSpec::Gaussian {
            mu: vec![0.0; 3],
            sigma: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        };
        let scen = draw_scenarios(&gen, 25, 4).unwrap();
        let base = solve_lp(&scenario_problem_from(&prog, scen.iter().enumerate()), &LpOptions::default()).unwrap();
        let s = find_support_scenarios(&prog, &scen, &base, ExecMode::Sequential).unwrap();
        let p = find_support_scenarios(&prog, &scen, &base, ExecMode::Parallel).unwrap();
        assert_eq!(s, p);
    }

    #[test]
    fn non_optimal_base_rejected() {
        let prog = coordinatewise(1);
        let scen = ScenarioSet::from_rows(vec![vec![0.1]], ScenarioOrigin::Derived).unwrap();
        let bad = SolveResult::without_solution(Status::Infeasible, 0);
        assert_eq!(
            find_support_scenarios(&prog, &scen, &bad, ExecMode::Sequential),
            Err(SolverError::NotOptimal(Status::Infeasible))
        );
    }
}
