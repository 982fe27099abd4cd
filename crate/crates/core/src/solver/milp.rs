//! Best-first branch and bound over the simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::program::{DeterministicProgram, VarKind};

use super::simplex::{solve_lp_with_bounds, LpOptions};
use super::{SolveResult, SolverError, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    pub max_nodes: u64,
    pub integrality_tol: f64,
    pub lp: LpOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            max_nodes: 1_000_000,
            integrality_tol: 1e-6,
            lp: LpOptions::default(),
        }
    }
}

struct Node {
    bound: f64,
    id: u64,
    fixings: Vec<(usize, f64)>,
    x: Vec<f64>,
}

// min-heap on (bound, id)
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

fn prune_tol(incumbent: f64) -> f64 {
    1e-9 * (1.0 + incumbent.abs())
}

pub fn solve_milp(dp: &DeterministicProgram, opts: &MilpOptions) -> Result<SolveResult, SolverError> {
    if dp.has_cones() {
        return Err(SolverError::Unsupported("solve_milp: program has cone rows"));
    }
    dp.validate()?;
    let binaries: Vec<usize> = dp
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(i, _)| i)
        .collect();
    let base_lower: Vec<f64> = dp.variables.iter().map(|v| v.lower).collect();
    let base_upper: Vec<f64> = dp.variables.iter().map(|v| v.upper).collect();

    let mut pivots = 0u64;
    let mut nodes = 0u64;
    let mut next_id = 0u64;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();

    let fractional = |x: &[f64]| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &b in &binaries {
            let frac = x[b] - x[b].floor();
            let dist = frac.min(1.0 - frac);
            if dist > opts.integrality_tol && best.is_none_or(|(_, d)| dist > d) {
                best = Some((b, dist));
            }
        }
        best.map(|b| b.0)
    };

    // evaluates a node's relaxation; integral solutions update the incumbent
    let mut evaluate = |fixings: Vec<(usize, f64)>,
                        heap: &mut BinaryHeap<Node>,
                        incumbent: &mut Option<(f64, Vec<f64>)>,
                        pivots: &mut u64,
                        nodes: &mut u64|
     -> Status {
        let mut lower = base_lower.clone();
        let mut upper = base_upper.clone();
        for &(i, v) in &fixings {
            lower[i] = v;
            upper[i] = v;
        }
        let r = solve_lp_with_bounds(dp, &lower, &upper, &opts.lp);
        *nodes += 1;
        *pivots += r.pivots;
        if r.status != Status::Optimal {
            return r.status;
        }
        if let Some((inc, _)) = incumbent {
            if r.objective >= *inc - prune_tol(*inc) {
                return Status::Optimal;
            }
        }
        if fractional(&r.x).is_none() {
            let mut x = r.x;
            for &b in &binaries {
                x[b] = x[b].round();
            }
            *incumbent = Some((dp.objective.eval(&x), x));
        } else {
            heap.push(Node {
                bound: r.objective,
                id: next_id,
                fixings,
                x: r.x,
            });
            next_id += 1;
        }
        Status::Optimal
    };

    match evaluate(Vec::new(), &mut heap, &mut incumbent, &mut pivots, &mut nodes) {
        Status::Optimal => {}
        status => {
            let mut r = SolveResult::without_solution(status, pivots);
            r.nodes = nodes;
            return Ok(r);
        }
    }

    let mut limit_hit = false;
    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= *inc - prune_tol(*inc) {
                break;
            }
        }
        if nodes >= opts.max_nodes {
            limit_hit = true;
            break;
        }
        let b = fractional(&node.x).expect("queued nodes are fractional");
        for value in [0.0, 1.0] {
            let mut f = node.fixings.clone();
            f.push((b, value));
            let status = evaluate(f, &mut heap, &mut incumbent, &mut pivots, &mut nodes);
            if status == Status::Unbounded {
                let mut r = SolveResult::without_solution(status, pivots);
                r.nodes = nodes;
                return Ok(r);
            }
        }
    }

    let mut result = match incumbent {
        Some((objective, x)) => SolveResult {
            status: if limit_hit {
                Status::IterationLimit
            } else {
                Status::Optimal
            },
            x,
            objective,
            support_set: None,
            degenerate: None,
            duals: None,
            pivots,
            nodes,
            cut_rounds: 0,
        },
        None => SolveResult::without_solution(
            if limit_hit {
                Status::IterationLimit
            } else {
                Status::Infeasible
            },
            pivots,
        ),
    };
    result.nodes = nodes;
    Ok(result)
}
