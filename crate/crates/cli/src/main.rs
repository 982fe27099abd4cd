//! `chancekit`: solve, certify, validate and emit chance-constrained programs.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 infeasible,
//! 3 requested certificate unavailable.

mod certify;
mod problem;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use chancekit::certificates::{
    discard_budget, discard_condition_value, feasibility_bound, order_stat_index, posterior_certificate,
    prior_certificate, saa_order_stat_index, PriorRule, TailDirection,
};
use chancekit::lp_format;
use chancekit::model::{draw_scenarios, CcProgram, GeneratorSpec, ScenarioSet};
use chancekit::par::{configure_threads, threads_from_env, ExecMode};
use chancekit::reformulate::{reformulate, MethodSpec, RobustSetKind};
use chancekit::solver::{find_support_scenarios, solve, Status};
use chancekit::special::floor_tol;
use chancekit::validate::{
    discard_experiment, estimate_violation, lower_bound_experiment, method_trials, saa_lower_bound_experiment,
    write_trial_csv, ExperimentConfig, TrialRecord,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::problem::{load_generator, load_scenarios, ProblemFile};

#[derive(Parser)]
#[command(name = "chancekit", version, about = "Chance-constrained linear programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reformulate and solve a problem.
    Solve(SolveArgs),
    /// Evaluate a certificate formula.
    Certify(certify::CertifyArgs),
    /// Run Monte Carlo trials and write the trial CSV.
    Validate(ValidateArgs),
    /// Write the deterministic program as an LP file.
    Emit(EmitArgs),
    /// Solve an LP file (plus cone sidecar) written by `emit`.
    Load(LoadArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodName {
    Scenario,
    Saa,
    Cvar,
    Robust,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SetName {
    Box,
    Ball,
    BallBox,
    Budget,
    Pi1,
    Pi2,
    Pi3,
    Pi4,
    Pi5,
}

#[derive(Debug, Args)]
struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodName::Scenario)]
    method: MethodName,
    /// SAA level ε' (defaults to the problem's ε).
    #[arg(long)]
    eps_level: Option<f64>,
    /// SAA big-M (automatic from variable bounds when omitted).
    #[arg(long)]
    big_m: Option<f64>,
    /// SAA strengthened form for separable programs.
    #[arg(long)]
    strong: bool,
    /// Uncertainty set or CVaR bound for `--method robust`.
    #[arg(long = "set", value_enum, default_value_t = SetName::Box)]
    set: SetName,
    /// Bonferroni weights over the rows (must sum to 1).
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
}

impl MethodArgs {
    fn spec(&self, prog: &CcProgram) -> MethodSpec {
        match self.method {
            MethodName::Scenario => MethodSpec::Scenario,
            MethodName::Saa => MethodSpec::Saa {
                eps_level: self.eps_level.unwrap_or(prog.epsilon()),
                big_m: self.big_m,
                strong: self.strong,
            },
            MethodName::Cvar => MethodSpec::Cvar,
            MethodName::Gaussian => MethodSpec::Gaussian,
            MethodName::Robust => MethodSpec::Robust {
                set: match self.set {
                    SetName::Box => RobustSetKind::Box,
                    SetName::Ball => RobustSetKind::Ball,
                    SetName::BallBox => RobustSetKind::BallBox,
                    SetName::Budget => RobustSetKind::Budget,
                    SetName::Pi1 => RobustSetKind::Pi(1),
                    SetName::Pi2 => RobustSetKind::Pi(2),
                    SetName::Pi3 => RobustSetKind::Pi(3),
                    SetName::Pi4 => RobustSetKind::Pi(4),
                    SetName::Pi5 => RobustSetKind::Pi(5),
                },
                weights: self.weights.clone(),
            },
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Scenario CSV with header `xi_1,…,xi_d`.
    #[arg(long, conflicts_with = "generate")]
    scenarios: Option<PathBuf>,
    /// Draw scenarios from a generator JSON file, or from the problem's
    /// own `generator` when no file is given.
    #[arg(long, num_args = 0..=1)]
    generate: Option<Option<PathBuf>>,
    #[arg(long)]
    n_scenarios: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Loaded {
    prog: CcProgram,
    gen: Option<GeneratorSpec>,
}

impl DataArgs {
    fn load(&self) -> Result<Loaded> {
        let file = ProblemFile::load(&self.problem)?;
        let prog = file.to_program()?;
        let gen = match &self.generate {
            Some(Some(p)) => {
                let g = load_generator(p)?;
                if g.dim() != prog.d() {
                    bail!("{}: generator dimension {} but the problem has d = {}", p.display(), g.dim(), prog.d());
                }
                Some(g)
            }
            _ => file.generator.clone(),
        };
        Ok(Loaded { prog, gen })
    }

    /// Scenarios from the CSV, or `--n-scenarios` draws (`count` when that
    /// flag is absent).
    fn scenarios(&self, l: &Loaded, count: Option<usize>) -> Result<ScenarioSet> {
        if let Some(p) = &self.scenarios {
            return load_scenarios(p, l.prog.d());
        }
        if self.generate.is_none() {
            bail!("this method needs --scenarios FILE or --generate [GEN]");
        }
        let gen = l.gen.as_ref().context("--generate needs a generator file or a `generator` in the problem")?;
        let n = self
            .n_scenarios
            .or(count)
            .context("--generate needs --n-scenarios (or --certify prior to choose it)")?;
        Ok(draw_scenarios(gen, n, self.seed)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CertifyKind {
    None,
    /// Sample size fixed in advance (exact binomial rule); scenario and SAA.
    Prior,
    /// Same with the closed-form rule.
    PriorSimple,
    /// Wait-and-judge from the support count; scenario only.
    Posterior,
    /// Fresh-sample violation bound; any method with a generator.
    Feasibility,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long, value_enum, default_value_t = CertifyKind::None)]
    certify: CertifyKind,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Helly-type dimension for prior certificates (defaults to n).
    #[arg(long)]
    h: Option<u64>,
    /// Validation draws for `--certify feasibility`.
    #[arg(long, default_value_t = 100_000)]
    fresh_samples: u64,
    /// Report the support scenarios (scenario method).
    #[arg(long)]
    support: bool,
    /// Solution JSON path (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    /// Independent solve-and-validate trials of the chosen method.
    Trials,
    /// Scenario program with k greedily discarded scenarios per trial.
    Discard,
    /// Order-statistic lower bound from M scenario programs.
    LowerBound,
    /// Order-statistic lower bound from K SAA programs.
    SaaLowerBound,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Generator JSON (defaults to the problem's `generator`).
    #[arg(long)]
    generator: Option<PathBuf>,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long, value_enum, default_value_t = Experiment::Trials)]
    experiment: Experiment,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Scenarios per trial (defaults to the prior sample size at β).
    #[arg(long)]
    n_scenarios: Option<usize>,
    /// Draws per violation estimate when no closed form exists.
    #[arg(long, default_value_t = 100_000)]
    fresh_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Confidence parameter β (or δ for lower bounds).
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Discard count (defaults to the largest certified budget).
    #[arg(long)]
    discard: Option<usize>,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long, default_value_t = 3.0)]
    ci_sigmas: f64,
    /// Record support counts (scenario trials).
    #[arg(long)]
    support: bool,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
    /// Trial CSV path (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Summary JSON path (stderr when omitted).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Lp,
}

#[derive(Debug, Args)]
struct EmitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long, value_enum, default_value_t = Format::Lp)]
    format: Format,
    /// LP path; cone rows go to `<stem>.soc.json` beside it.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LoadArgs {
    lp: PathBuf,
    /// Cone sidecar (defaults to `<stem>.soc.json` when it exists).
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

enum Outcome {
    Done,
    Infeasible,
    NoCertificate,
}

fn write_json(path: Option<&Path>, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    match path {
        Some(p) => fs::write(p, s).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().write_all(s.as_bytes())?),
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn cmd_solve(a: &SolveArgs) -> Result<Outcome> {
    let loaded = a.data.load()?;
    let prog = &loaded.prog;
    let spec = a.method.spec(prog);
    let h = a.h.unwrap_or(prog.n() as u64);
    let prior_rule = match a.certify {
        CertifyKind::Prior => Some(PriorRule::Exact2008),
        CertifyKind::PriorSimple => Some(PriorRule::ClosedForm2009),
        _ => None,
    };
    let prior = match (prior_rule, &spec) {
        (Some(rule), MethodSpec::Scenario) => Some(prior_certificate(prog.epsilon(), a.beta, h, rule)?),
        _ => None,
    };

    let t0 = Instant::now();
    let scen = if spec.needs_scenarios() {
        let auto = prior.as_ref().map(|p| p.n_required as usize);
        Some(a.data.scenarios(&loaded, auto)?)
    } else {
        None
    };
    let dp = reformulate(prog, &spec, scen.as_ref(), loaded.gen.as_ref())?;
    let t_reform = ms(t0);
    let t1 = Instant::now();
    let r = solve(&dp)?;
    let t_solve = ms(t1);

    let mut out = json!({
        "method": spec.name(),
        "status": r.status,
        "n_scenarios": scen.as_ref().map(ScenarioSet::len),
    });
    match r.status {
        Status::Optimal => {}
        Status::Infeasible => {
            out["timings"] = json!({ "reformulate_ms": t_reform, "solve_ms": t_solve });
            write_json(a.output.as_deref(), &out)?;
            return Ok(Outcome::Infeasible);
        }
        other => bail!("solver stopped with status {other:?}; the program is unbounded or too large"),
    }
    let x = r.decision(&dp).to_vec();
    out["x"] = json!(x);
    out["objective"] = json!(r.objective);

    let want_support = a.support || a.certify == CertifyKind::Posterior;
    let mut support_report = None;
    let t2 = Instant::now();
    if want_support {
        match (&spec, &scen) {
            (MethodSpec::Scenario, Some(s)) => {
                let rep = find_support_scenarios(prog, s, &r, ExecMode::Parallel)?;
                out["support_set"] = json!(rep.support);
                out["degenerate"] = json!(rep.degenerate);
                support_report = Some(rep);
            }
            _ if a.support => bail!("--support applies to the scenario method only"),
            _ => {}
        }
    }
    let t_support = ms(t2);

    let certificate: Result<Value, String> = match a.certify {
        CertifyKind::None => Ok(Value::Null),
        CertifyKind::Prior | CertifyKind::PriorSimple => match (&spec, &scen) {
            (MethodSpec::Scenario, Some(s)) => {
                let p = prior.expect("built above");
                if (s.len() as u64) < p.n_required {
                    Err(format!("N = {} is below the required {}", s.len(), p.n_required))
                } else {
                    Ok(json!({ "kind": "prior", "detail": p }))
                }
            }
            (MethodSpec::Saa { eps_level, .. }, Some(s)) => {
                // optimal discarding of ⌊ε'N⌋ scenarios is a valid removal rule
                let ns = s.len() as u64;
                let k = floor_tol(eps_level * ns as f64) as u64;
                let value = discard_condition_value(ns, h, k, prog.epsilon());
                if value <= a.beta {
                    Ok(json!({ "kind": "discard", "N": ns, "k": k, "h": h, "condition": value, "beta": a.beta }))
                } else {
                    Err(format!("discarding k = {k} of N = {ns} gives condition {value:.4} > beta = {}", a.beta))
                }
            }
            _ => Err(format!("no prior certificate for method {}", spec.name())),
        },
        CertifyKind::Posterior => match (&support_report, &scen) {
            (Some(rep), Some(s)) if !rep.degenerate => {
                let c = posterior_certificate(s.len() as u64, rep.count as u64, a.beta)?;
                Ok(json!({ "kind": "posterior", "detail": c }))
            }
            (Some(_), _) => Err("the scenario program is degenerate; wait-and-judge does not apply".into()),
            _ => Err(format!("no posterior certificate for method {}", spec.name())),
        },
        CertifyKind::Feasibility => match &loaded.gen {
            Some(gen) => {
                let est = estimate_violation(prog, &x, gen, a.fresh_samples, a.data.seed.wrapping_add(1))?;
                let b = feasibility_bound(est.n_hat, est.violations, a.beta)?;
                Ok(json!({ "kind": "feasibility", "detail": b }))
            }
            None => Err("feasibility certificate needs a generator".into()),
        },
    };
    out["timings"] = json!({ "reformulate_ms": t_reform, "solve_ms": t_solve, "support_ms": t_support });
    let outcome = match certificate {
        Ok(c) => {
            out["certificate"] = c;
            Outcome::Done
        }
        Err(reason) => {
            out["certificate"] = Value::Null;
            out["certificate_unavailable"] = json!(reason);
            Outcome::NoCertificate
        }
    };
    write_json(a.output.as_deref(), &out)?;
    Ok(outcome)
}

fn summarize(records: &[TrialRecord], eps: f64, beta: f64, cfg: &ExperimentConfig) -> Value {
    let t = records.len();
    let covered = records.iter().filter(|r| r.violation <= eps).count() as f64 / t as f64;
    let required = 1.0 - beta;
    let hw = cfg.ci_halfwidth(required, t);
    let mean = |f: fn(&TrialRecord) -> f64| records.iter().map(f).sum::<f64>() / t as f64;
    json!({
        "trials": t,
        "epsilon": eps,
        "beta": beta,
        "coverage": covered,
        "required": required,
        "ci_halfwidth": hw,
        "coverage_ok": covered >= required - hw,
        "mean_objective": mean(|r| r.objective),
        "mean_violation": mean(|r| r.violation),
    })
}

fn cmd_validate(a: &ValidateArgs) -> Result<Outcome> {
    let file = ProblemFile::load(&a.problem)?;
    let prog = file.to_program()?;
    let gen = match &a.generator {
        Some(p) => load_generator(p)?,
        None => file.generator.clone().context("validate needs --generator or a `generator` in the problem")?,
    };
    if gen.dim() != prog.d() {
        bail!("generator dimension {} but the problem has d = {}", gen.dim(), prog.d());
    }
    let cfg = ExperimentConfig {
        ci_sigmas: a.ci_sigmas,
        count_support: a.support,
        mode: if a.sequential { ExecMode::Sequential } else { ExecMode::Parallel },
        ..Default::default()
    };
    let spec = a.method.spec(&prog);
    let eps = prog.epsilon();
    let n_default = || -> Result<usize> {
        match a.n_scenarios {
            Some(n) => Ok(n),
            None => Ok(prior_certificate(eps, a.beta, prog.n() as u64, PriorRule::Exact2008)?.n_required as usize),
        }
    };

    let (records, mut summary) = match a.experiment {
        Experiment::Trials => {
            let n = if spec.needs_scenarios() { n_default()? } else { 0 };
            let recs = method_trials(&prog, &gen, &spec, n, a.trials, a.fresh_samples, a.seed, &cfg)?;
            let s = summarize(&recs, eps, a.beta, &cfg);
            (recs, s)
        }
        Experiment::Discard => {
            let n = n_default()?;
            let k = match a.discard {
                Some(k) => k,
                None => discard_budget(n as u64, prog.n() as u64, eps, a.beta)? as usize,
            };
            let dist = discard_experiment(&prog, &gen, n, k, a.trials, a.seed, &cfg)?;
            let mut s = summarize(&dist.records, eps, a.beta, &cfg);
            s["discard"] = json!(k);
            (dist.records, s)
        }
        Experiment::LowerBound | Experiment::SaaLowerBound => {
            let n = n_default()?;
            let m = a.m.context("lower-bound experiments need --M")?;
            let saa = a.experiment == Experiment::SaaLowerBound;
            let level = a.method.eps_level.unwrap_or(eps);
            let l = match a.l {
                Some(l) => l,
                None if saa => {
                    saa_order_stat_index(m as u64, n as u64, eps, level, a.beta, TailDirection::Corrected)? as usize
                }
                None => order_stat_index(m as u64, n as u64, eps, a.beta)? as usize,
            };
            let out = if saa {
                saa_lower_bound_experiment(&prog, &gen, m, n, level, l, a.beta, a.seed, cfg.mode)?
            } else {
                lower_bound_experiment(&prog, &gen, m, n, l, a.beta, a.seed, cfg.mode)?
            };
            let method = if saa { "saa" } else { "scenario" };
            let recs: Vec<TrialRecord> = out
                .sorted
                .iter()
                .enumerate()
                .map(|(i, &o)| TrialRecord {
                    trial: i,
                    n,
                    objective: o,
                    violation: f64::NAN,
                    support_count: None,
                    method: method.into(),
                    wall_time_ms: 0.0,
                })
                .collect();
            let s = json!({ "M": m, "N": n, "L": l, "delta": a.beta, "lower_bound": out.value });
            (recs, s)
        }
    };
    summary["method"] = json!(spec.name());
    summary["seed"] = json!(a.seed);

    match &a.output {
        Some(p) => write_trial_csv(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?, &records)?,
        None => write_trial_csv(io::stdout().lock(), &records)?,
    }
    let mut s = serde_json::to_string_pretty(&summary)?;
    s.push('\n');
    match &a.summary {
        Some(p) => fs::write(p, s)?,
        None => io::stderr().write_all(s.as_bytes())?,
    }
    Ok(Outcome::Done)
}

fn sidecar_path(lp: &Path) -> PathBuf {
    lp.with_extension("soc.json")
}

fn cmd_emit(a: &EmitArgs) -> Result<Outcome> {
    let Format::Lp = a.format;
    let loaded = a.data.load()?;
    let spec = a.method.spec(&loaded.prog);
    let scen = if spec.needs_scenarios() {
        Some(a.data.scenarios(&loaded, None)?)
    } else {
        None
    };
    let dp = reformulate(&loaded.prog, &spec, scen.as_ref(), loaded.gen.as_ref())?;
    let e = lp_format::emit(&dp);
    match &a.output {
        Some(p) => {
            fs::write(p, &e.lp).with_context(|| format!("writing {}", p.display()))?;
            let side = sidecar_path(p);
            match &e.soc_sidecar {
                Some(s) => fs::write(&side, s).with_context(|| format!("writing {}", side.display()))?,
                // a stale sidecar would attach cones to a program without them
                None if side.exists() => fs::remove_file(&side)?,
                None => {}
            }
        }
        None => {
            if e.soc_sidecar.is_some() {
                bail!("the program has cone rows; pass --output so the sidecar can be written beside the LP file");
            }
            io::stdout().write_all(e.lp.as_bytes())?;
        }
    }
    Ok(Outcome::Done)
}

fn cmd_load(a: &LoadArgs) -> Result<Outcome> {
    let text = fs::read_to_string(&a.lp).with_context(|| format!("reading {}", a.lp.display()))?;
    let side_path = a.sidecar.clone().or_else(|| Some(sidecar_path(&a.lp)).filter(|p| p.exists()));
    let side = side_path
        .as_ref()
        .map(|p| fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let dp = lp_format::parse(&text, side.as_deref()).with_context(|| a.lp.display().to_string())?;
    let r = solve(&dp)?;
    let mut out = json!({ "status": r.status });
    if r.status == Status::Optimal {
        out["objective"] = json!(r.objective);
        out["x"] = json!(r.decision(&dp));
    }
    write_json(None, &out)?;
    Ok(match r.status {
        Status::Optimal => Outcome::Done,
        Status::Infeasible => Outcome::Infeasible,
        other => bail!("solver stopped with status {other:?}"),
    })
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => {
            write_json(None, &certify::run(a)?)?;
            Ok(Outcome::Done)
        }
        Command::Validate(a) => cmd_validate(a),
        Command::Emit(a) => cmd_emit(a),
        Command::Load(a) => cmd_load(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(t) = threads_from_env() {
        configure_threads(t);
    }
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(2),
        Ok(Outcome::NoCertificate) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
