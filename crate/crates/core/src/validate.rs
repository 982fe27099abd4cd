//! Monte Carlo certification and brute-force oracles.
//!
//! Every trial draws from its own `(seed, trial)` stream and results are
//! reduced in trial order, so experiments are reproducible for any thread
//! count and either [`ExecMode`].

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::{CertError, LowerBoundPlan, TailDirection};
use crate::model::{
    draw_scenarios_from_stream, CcProgram, GeneratorSpec, ModelError, ScenarioSet,
};
use crate::par::{map_indexed, ExecMode};
use crate::program::DeterministicProgram;
use crate::reformulate::{
    reformulate, saa_big_m, scenario_problem, scenario_problem_from, MethodSpec, ReformError,
};
use crate::rng::{stream_rng, trial_stream};
use crate::solver::{
    find_support_scenarios, solve, solve_lp, LpOptions, SolveResult, SolverError, Status,
};
use crate::special::{floor_tol, normal_cdf};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Reform(#[from] ReformError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error("no closed-form violation probability for this program and generator; use estimate_violation")]
    NoClosedForm,
    #[error("trial {trial}: solve ended with status {status:?}")]
    NotOptimal { trial: usize, status: Status },
    #[error("{0}")]
    Invalid(String),
}

/// Knobs shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Repetitions of a meta-experiment that checks a coverage claim.
    pub meta_repetitions: usize,
    /// Width of the binomial confidence band in standard deviations.
    pub ci_sigmas: f64,
    /// Whether trials record the number of support scenarios (one extra
    /// LP per scenario per trial).
    pub count_support: bool,
    #[serde(skip)]
    pub mode: ExecMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            meta_repetitions: 200,
            ci_sigmas: 3.0,
            count_support: false,
            mode: ExecMode::Parallel,
        }
    }
}

impl ExperimentConfig {
    /// `k·√(p(1−p)/trials)`.
    pub fn ci_halfwidth(&self, p: f64, trials: usize) -> f64 {
        self.ci_sigmas * (p * (1.0 - p) / trials as f64).sqrt()
    }
}

/// One row of the trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub objective: f64,
    pub violation: f64,
    pub support_count: Option<usize>,
    pub method: String,
    pub wall_time_ms: f64,
}

/// Header: `trial,N,objective,violation,support_count,method,wall_time_ms`.
pub fn write_trial_csv<W: Write>(writer: W, records: &[TrialRecord]) -> Result<(), ValidateError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| ValidateError::Invalid(e.to_string()))?;
    }
    w.flush().map_err(|e| ValidateError::Invalid(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationEstimate {
    pub n_hat: u64,
    pub violations: u64,
    pub epsilon_hat: f64,
}

const CHUNK: usize = 1 << 14;

/// `ε̂ = V̂/N̂` from `N̂` fresh draws. Draws are split into fixed chunks, each
/// with its own stream, so the count does not depend on the thread count.
pub fn estimate_violation(
    prog: &CcProgram,
    x: &[f64],
    gen: &GeneratorSpec,
    n_hat: u64,
    seed: u64,
) -> Result<ViolationEstimate, ValidateError> {
    estimate_violation_with(prog, x, gen, n_hat, seed, ExecMode::Parallel)
}

pub fn estimate_violation_with(
    prog: &CcProgram,
    x: &[f64],
    gen: &GeneratorSpec,
    n_hat: u64,
    seed: u64,
    mode: ExecMode,
) -> Result<ViolationEstimate, ValidateError> {
    if n_hat == 0 {
        return Err(ValidateError::Invalid("N̂ must be at least 1".into()));
    }
    if x.len() != prog.n() || gen.dim() != prog.d() {
        return Err(ValidateError::Invalid("dimension mismatch between x, program and generator".into()));
    }
    let sampler = gen.sampler()?;
    let total = n_hat as usize;
    let chunks = total.div_ceil(CHUNK);
    let counts = map_indexed(chunks, mode, |c| {
        let mut rng = stream_rng(seed, 1 << 40 | c as u64);
        let count = CHUNK.min(total - c * CHUNK);
        let mut xi = vec![0.0; sampler.dim()];
        let mut v = 0u64;
        for _ in 0..count {
            sampler.sample_into(&mut rng, &mut xi);
            if prog.rows().iter().any(|r| r.value(x, &xi) > 0.0) {
                v += 1;
            }
        }
        v
    });
    let violations: u64 = counts.iter().sum();
    Ok(ViolationEstimate {
        n_hat,
        violations,
        epsilon_hat: violations as f64 / n_hat as f64,
    })
}

/// Marginal cdf of coordinate `k`, when the coordinates are independent
/// with a known law.
fn marginal_cdf(gen: &GeneratorSpec, k: usize, t: f64) -> Option<f64> {
    match gen {
        GeneratorSpec::UniformBox { lo, hi } => Some(((t - lo[k]) / (hi[k] - lo[k])).clamp(0.0, 1.0)),
        GeneratorSpec::Gaussian { mu, sigma } => {
            let d = mu.len();
            let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || sigma[i][j] == 0.0));
            if !diagonal {
                return None;
            }
            let s = sigma[k][k].sqrt();
            Some(if s == 0.0 {
                f64::from(u8::from(t >= mu[k]))
            } else {
                normal_cdf((t - mu[k]) / s)
            })
        }
        GeneratorSpec::ScaledBernoulli { scale } => {
            let s = scale[k];
            Some(if t < -s {
                0.0
            } else if t < s {
                0.5
            } else {
                1.0
            })
        }
        GeneratorSpec::FiniteDiscrete { .. } => None,
    }
}

/// Exact `𝕍(x)` for programs whose rows each read `a·x_j + b + c·ξ_k ≤ 0`
/// (`c > 0`, distinct `k` per row) under independent coordinates:
/// `𝕍(x) = 1 − Π_i F_{k_i}((−a x_j − b)/c)`.
pub fn exact_violation(prog: &CcProgram, gen: &GeneratorSpec, x: &[f64]) -> Option<f64> {
    let mut used = vec![false; prog.d()];
    let mut ok = 1.0;
    for row in prog.rows() {
        if row.has_decision_dependent_uncertainty() {
            return None;
        }
        let unc: Vec<usize> = (0..prog.d()).filter(|&k| row.unc_offset[k] != 0.0).collect();
        let [k] = unc[..] else { return None };
        let c = row.unc_offset[k];
        if c <= 0.0 || used[k] {
            return None;
        }
        used[k] = true;
        let base: f64 = row.base_coefs.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + row.base_offset;
        ok *= marginal_cdf(gen, k, -base / c)?;
    }
    Some(1.0 - ok)
}

/// `𝕍(x*_N)` over independent trials of the scenario program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationDistribution {
    pub n: usize,
    pub violations: Vec<f64>,
    pub records: Vec<TrialRecord>,
}

impl ViolationDistribution {
    /// Empirical `P(𝕍 > ε)`.
    pub fn tail(&self, eps: f64) -> f64 {
        self.violations.iter().filter(|&&v| v > eps).count() as f64 / self.violations.len() as f64
    }

    /// Empirical `P(𝕍 ≤ ε)`.
    pub fn coverage(&self, eps: f64) -> f64 {
        1.0 - self.tail(eps)
    }
}

fn solve_optimal(dp: &DeterministicProgram, trial: usize) -> Result<SolveResult, ValidateError> {
    let r = solve(dp)?;
    if r.status != Status::Optimal {
        return Err(ValidateError::NotOptimal {
            trial,
            status: r.status,
        });
    }
    Ok(r)
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn collect<T>(results: Vec<Result<T, ValidateError>>) -> Result<Vec<T>, ValidateError> {
    results.into_iter().collect()
}

/// Draws `N` scenarios per trial, solves `(SP)_N` and records the exact
/// violation probability of the optimizer.
pub fn violation_distribution_experiment(
    prog: &CcProgram,
    gen: &GeneratorSpec,
    n: usize,
    trials: usize,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<ViolationDistribution, ValidateError> {
    gen.validate()?;
    if exact_violation(prog, gen, &vec![0.0; prog.n()]).is_none() {
        return Err(ValidateError::NoClosedForm);
    }
    if trials == 0 {
        return Err(ValidateError::Invalid("trials must be at least 1".into()));
    }
    let records = collect(map_indexed(trials, cfg.mode, |t| {
        let start = Instant::now();
        let scen = draw_scenarios_from_stream(gen, n, seed, trial_stream(t as u64, 0))?;
        let dp = scenario_problem(prog, &scen)?;
        let r = solve_optimal(&dp, t)?;
        let x = r.decision(&dp).to_vec();
        let support_count = if cfg.count_support {
            Some(find_support_scenarios(prog, &scen, &r, ExecMode::Sequential)?.count)
        } else {
            None
        };
        Ok(TrialRecord {
            trial: t,
            n,
            objective: r.objective,
            violation: exact_violation(prog, gen, &x).expect("checked above"),
            support_count,
            method: "scenario".into(),
            wall_time_ms: millis(start),
        })
    }))?;
    Ok(ViolationDistribution {
        n,
        violations: records.iter().map(|r| r.violation).collect(),
        records,
    })
}

/// Solves `(SP)_N`, then greedily discards `k` scenarios: each step drops the
/// scenario, among those active at the current optimizer, whose removal
/// lowers the objective most. Removed scenarios are violated by the final
/// solution, as the discarding guarantee requires.
pub fn discard_and_solve(
    prog: &CcProgram,
    scen: &ScenarioSet,
    k: usize,
) -> Result<(SolveResult, Vec<usize>), ValidateError> {
    if k >= scen.len() {
        return Err(ValidateError::Invalid("must keep at least one scenario".into()));
    }
    let opts = LpOptions::default();
    let mut kept: Vec<usize> = (0..scen.len()).collect();
    let build = |kept: &[usize]| scenario_problem_from(prog, kept.iter().map(|&j| (j, scen.row(j))));
    let mut current = solve_lp(&build(&kept), &opts)?;
    let mut removed = Vec::with_capacity(k);
    for _ in 0..k {
        if current.status != Status::Optimal {
            return Err(ValidateError::NotOptimal {
                trial: 0,
                status: current.status,
            });
        }
        let x = current.x[..prog.n()].to_vec();
        let active: Vec<usize> = kept
            .iter()
            .copied()
            .filter(|&j| prog.rows().iter().any(|r| r.value(&x, scen.row(j)) >= -1e-9))
            .collect();
        let mut best: Option<(f64, usize, SolveResult)> = None;
        for &j in &active {
            let rest: Vec<usize> = kept.iter().copied().filter(|&i| i != j).collect();
            let r = solve_lp(&build(&rest), &opts)?;
            let o = match r.status {
                Status::Optimal => r.objective,
                Status::Unbounded => f64::NEG_INFINITY,
                _ => continue,
            };
            if best.as_ref().is_none_or(|(bo, _, _)| o < *bo) {
                best = Some((o, j, r));
            }
        }
        let Some((_, j, r)) = best else { break };
        kept.retain(|&i| i != j);
        removed.push(j);
        current = r;
    }
    Ok((current, removed))
}

/// Coverage of sampling-and-discarding: per trial, draw `N`, discard `k`
/// greedily, record the exact violation.
pub fn discard_experiment(
    prog: &CcProgram,
    gen: &GeneratorSpec,
    n: usize,
    k: usize,
    trials: usize,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<ViolationDistribution, ValidateError> {
    if exact_violation(prog, gen, &vec![0.0; prog.n()]).is_none() {
        return Err(ValidateError::NoClosedForm);
    }
    let records = collect(map_indexed(trials, cfg.mode, |t| {
        let start = Instant::now();
        let scen = draw_scenarios_from_stream(gen, n, seed, trial_stream(t as u64, 0))?;
        let (r, _) = discard_and_solve(prog, &scen, k)?;
        if r.status != Status::Optimal {
            return Err(ValidateError::NotOptimal { trial: t, status: r.status });
        }
        Ok(TrialRecord {
            trial: t,
            n,
            objective: r.objective,
            violation: exact_violation(prog, gen, &r.x[..prog.n()]).expect("checked above"),
            support_count: None,
            method: format!("scenario_discard_{k}"),
            wall_time_ms: millis(start),
        })
    }))?;
    Ok(ViolationDistribution {
        n,
        violations: records.iter().map(|r| r.violation).collect(),
        records,
    })
}

/// Trials of any reformulation: solve on `N` fresh scenarios (sample-based
/// methods) or once (robust/Gaussian), then estimate the violation with
/// `n_hat` independent draws, or exactly when a closed form exists.
pub fn method_trials(
    prog: &CcProgram,
    gen: &GeneratorSpec,
    spec: &MethodSpec,
    n: usize,
    trials: usize,
    n_hat: u64,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<Vec<TrialRecord>, ValidateError> {
    let name = spec.name();
    collect(map_indexed(trials, cfg.mode, |t| {
        let start = Instant::now();
        let scen = if spec.needs_scenarios() {
            Some(draw_scenarios_from_stream(gen, n, seed, trial_stream(t as u64, 0))?)
        } else {
            None
        };
        let dp = reformulate(prog, spec, scen.as_ref(), Some(gen))?;
        let r = solve_optimal(&dp, t)?;
        let x = r.decision(&dp).to_vec();
        let violation = match exact_violation(prog, gen, &x) {
            Some(v) => v,
            None => {
                estimate_violation_with(prog, &x, gen, n_hat, seed ^ (t as u64 + 1) << 20, ExecMode::Sequential)?
                    .epsilon_hat
            }
        };
        let support_count = match (&scen, spec, cfg.count_support) {
            (Some(s), MethodSpec::Scenario, true) => {
                Some(find_support_scenarios(prog, s, &r, ExecMode::Sequential)?.count)
            }
            _ => None,
        };
        Ok(TrialRecord {
            trial: t,
            n: scen.as_ref().map_or(0, ScenarioSet::len),
            objective: r.objective,
            violation,
            support_count,
            method: name.clone(),
            wall_time_ms: millis(start),
        })
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundOutcome {
    /// `o*_(L)`.
    pub value: f64,
    /// All `M` (or `K`) optima, ascending.
    pub sorted: Vec<f64>,
    pub plan: LowerBoundPlan,
}

fn order_statistic(
    count: usize,
    l: usize,
    plan: LowerBoundPlan,
    objective: impl Fn(usize) -> Result<f64, ValidateError> + Sync + Send,
    mode: ExecMode,
) -> Result<LowerBoundOutcome, ValidateError> {
    if !plan.holds() {
        return Err(ValidateError::Invalid(format!(
            "L = {l} does not satisfy the order-statistic condition for {plan:?}"
        )));
    }
    let mut sorted = collect(map_indexed(count, mode, objective))?;
    sorted.sort_by(f64::total_cmp);
    Ok(LowerBoundOutcome {
        value: sorted[l - 1],
        sorted,
        plan,
    })
}

/// `L`-th smallest optimum of `M` independent scenario programs of size `N`.
#[allow(clippy::too_many_arguments)]
pub fn lower_bound_experiment(
    prog: &CcProgram,
    gen: &GeneratorSpec,
    m: usize,
    n: usize,
    l: usize,
    delta: f64,
    seed: u64,
    mode: ExecMode,
) -> Result<LowerBoundOutcome, ValidateError> {
    let plan = LowerBoundPlan::Scenario {
        m: m as u64,
        n: n as u64,
        l: l as u64,
        epsilon: prog.epsilon(),
        delta,
    };
    order_statistic(
        m,
        l,
        plan,
        |i| {
            let scen = draw_scenarios_from_stream(gen, n, seed, trial_stream(i as u64, 1))?;
            Ok(solve_optimal(&scenario_problem(prog, &scen)?, i)?.objective)
        },
        mode,
    )
}

/// Same with `K` SAA programs at level `ε'`; the condition is checked in
/// the direction that makes `o*_(L)` a lower bound.
#[allow(clippy::too_many_arguments)]
pub fn saa_lower_bound_experiment(
    prog: &CcProgram,
    gen: &GeneratorSpec,
    k: usize,
    n: usize,
    eps_level: f64,
    l: usize,
    delta: f64,
    seed: u64,
    mode: ExecMode,
) -> Result<LowerBoundOutcome, ValidateError> {
    let plan = LowerBoundPlan::Saa {
        k: k as u64,
        n: n as u64,
        l: l as u64,
        epsilon: prog.epsilon(),
        eps_level,
        delta,
        direction: TailDirection::Corrected,
    };
    order_statistic(
        k,
        l,
        plan,
        |i| {
            let scen = draw_scenarios_from_stream(gen, n, seed, trial_stream(i as u64, 2))?;
            Ok(solve_optimal(&saa_big_m(prog, &scen, eps_level, None)?, i)?.objective)
        },
        mode,
    )
}

/// SAA optimum by enumerating every set of `⌊ε'N⌋` discarded scenarios
/// and solving the remaining scenario LP.
pub fn saa_subset_oracle(prog: &CcProgram, scen: &ScenarioSet, eps_level: f64) -> Result<f64, ValidateError> {
    let n = scen.len();
    let k = (floor_tol(eps_level * n as f64) as usize).min(n);
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let keep = (0..n).filter(|j| !idx.contains(j));
        let dp = scenario_problem_from(prog, keep.map(|j| (j, scen.row(j))));
        let r = solve_lp(&dp, &LpOptions::default())?;
        match r.status {
            Status::Optimal => best = best.min(r.objective),
            Status::Unbounded => return Ok(f64::NEG_INFINITY),
            _ => {}
        }
        // next k-combination of 0..n
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// `P(ζ ≤ v)` on a finite distribution.
pub fn discrete_cdf(points: &[Vec<f64>], probs: &[f64], v: &[f64]) -> f64 {
    points
        .iter()
        .zip(probs)
        .filter(|(p, _)| p.iter().zip(v).all(|(a, b)| a <= b))
        .map(|(_, w)| w)
        .sum()
}

const CDF_TOL: f64 = 1e-12;

/// Minimal grid points `v` (coordinates drawn from the support) with
/// `P(ζ ≤ v) ≥ p`.
pub fn p_efficient_points(points: &[Vec<f64>], probs: &[f64], p: f64) -> Result<Vec<Vec<f64>>, ValidateError> {
    if points.is_empty() || points.len() != probs.len() {
        return Err(ValidateError::Invalid("need one probability per support point".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(ValidateError::Invalid(format!("p must lie in (0, 1], got {p}")));
    }
    let m = points[0].len();
    let axes: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let mut a: Vec<f64> = points.iter().map(|pt| pt[k]).collect();
            a.sort_by(f64::total_cmp);
            a.dedup();
            a
        })
        .collect();
    let mut qualifying = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        let v: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect();
        if discrete_cdf(points, probs, &v) >= p - CDF_TOL {
            qualifying.push(v);
        }
        let mut k = 0;
        loop {
            if k == m {
                let minimal: Vec<Vec<f64>> = qualifying
                    .iter()
                    .filter(|v| !qualifying.iter().any(|z| dominated_by(v, z)))
                    .cloned()
                    .collect();
                return Ok(minimal);
            }
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `z ≤ v` componentwise and `z ≠ v`.
fn dominated_by(v: &[f64], z: &[f64]) -> bool {
    z.iter().zip(v).all(|(a, b)| a <= b) && z != v
}

/// Whether `f_det(x)` lies in `∪_i (vⁱ + ℝ₊^m)`.
pub fn cone_union_feasibility_oracle(efficient: &[Vec<f64>], f_det: &[f64]) -> bool {
    efficient
        .iter()
        .any(|v| v.iter().zip(f_det).all(|(a, b)| a <= b))
}
