//! `chancekit certify`: certificate arithmetic with the inputs echoed back.

use anyhow::{bail, Result};
use chancekit::certificates::{
    discard_budget, discard_condition_value, feasibility_bound, order_stat_index, order_stat_sum,
    posterior_certificate, prior_sample_size_exact, prior_sample_size_simple, saa_feasibility_sample_size,
    saa_lowerbound_sample_size, saa_order_stat_index, saa_order_stat_sum, LipschitzSaa, TailDirection,
};
use clap::{Args, ValueEnum};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Smallest N from the exact binomial tail.
    Prior,
    /// Closed-form N.
    PriorSimple,
    /// Wait-and-judge level from the observed support count.
    Posterior,
    /// Upper bound on the violation from a fresh validation sample.
    Feasibility,
    /// Largest discard count k for (N, n).
    Discard,
    /// Largest valid L for M scenario programs.
    OrderStat,
    /// Largest valid L for K SAA programs.
    SaaOrderStat,
    /// SAA sample size for lower bounds at level ε' > ε.
    SaaLowerbound,
    /// Lipschitz SAA sample size for feasibility.
    SaaFeasibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// `Σ ≥ δ`, as usually printed.
    AsPrinted,
    /// `Σ ≤ δ`, which makes `o*_(L)` a lower bound.
    Corrected,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Helly-type dimension h̄ (defaults to 1).
    #[arg(long)]
    pub h: Option<u64>,
    #[arg(long = "N")]
    pub n_samples: Option<u64>,
    /// Support count.
    #[arg(long)]
    pub k: Option<u64>,
    /// Violations among the N validation draws.
    #[arg(long = "V")]
    pub violations: Option<u64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Decision dimension.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long = "M")]
    pub m: Option<u64>,
    #[arg(long = "K")]
    pub k_sets: Option<u64>,
    #[arg(long = "L")]
    pub l: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eps_level: Option<f64>,
    #[arg(long, value_enum, default_value_t = Direction::AsPrinted)]
    pub direction: Direction,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lipschitz: Option<f64>,
    #[arg(long)]
    pub diameter: Option<f64>,
}

struct Echo(Map<String, Value>);

impl Echo {
    fn take<T: Copy + Into<Value>>(&mut self, name: &str, v: Option<T>) -> Result<T> {
        match v {
            Some(v) => {
                self.0.insert(name.to_owned(), v.into());
                Ok(v)
            }
            None => bail!("--mode needs --{name}"),
        }
    }
}

/// Certificate JSON: `{"mode": …, "input": {…}, <results>}`.
pub fn run(a: &CertifyArgs) -> Result<Value> {
    let mut e = Echo(Map::new());
    let mode = a.mode.to_possible_value().expect("no skipped variants").get_name().to_owned();
    let out = match a.mode {
        Mode::Prior | Mode::PriorSimple => {
            let eps = e.take("eps", a.eps)?;
            let beta = e.take("beta", a.beta)?;
            let h = e.take("h", a.h.or(Some(1)))?;
            let n = if a.mode == Mode::Prior {
                prior_sample_size_exact(eps, beta, h)?
            } else {
                prior_sample_size_simple(eps, beta, h)?
            };
            json!({ "N": n })
        }
        Mode::Posterior => {
            let n = e.take("N", a.n_samples)?;
            let k = e.take("k", a.k)?;
            let beta = e.take("beta", a.beta)?;
            let c = posterior_certificate(n, k, beta)?;
            json!({ "t_k": c.root_t, "eps_k": c.epsilon_of_k })
        }
        Mode::Feasibility => {
            let n = e.take("N", a.n_samples)?;
            let v = e.take("V", a.violations)?;
            let rho = e.take("rho", a.rho)?;
            json!({ "eps_bar": feasibility_bound(n, v, rho)?.eps_bar })
        }
        Mode::Discard => {
            let ns = e.take("N", a.n_samples)?;
            let n = e.take("n", a.n)?;
            let eps = e.take("eps", a.eps)?;
            let beta = e.take("beta", a.beta)?;
            let k = discard_budget(ns, n, eps, beta)?;
            json!({ "k": k, "condition": discard_condition_value(ns, n, k, eps) })
        }
        Mode::OrderStat => {
            let m = e.take("M", a.m)?;
            let n = e.take("N", a.n_samples)?;
            let eps = e.take("eps", a.eps)?;
            let delta = e.take("delta", a.delta)?;
            let l = order_stat_index(m, n, eps, delta)?;
            json!({ "L": l, "sum": order_stat_sum(m, n, eps, l) })
        }
        Mode::SaaOrderStat => {
            let k = e.take("K", a.k_sets)?;
            let n = e.take("N", a.n_samples)?;
            let eps = e.take("eps", a.eps)?;
            let level = e.take("eps_level", a.eps_level)?;
            let delta = e.take("delta", a.delta)?;
            let dir = match a.direction {
                Direction::Corrected => TailDirection::Corrected,
                Direction::AsPrinted => TailDirection::AsPrinted,
            };
            e.0.insert("direction".into(), serde_json::to_value(dir)?);
            let l = saa_order_stat_index(k, n, eps, level, delta, dir)?;
            json!({ "L": l, "sum": saa_order_stat_sum(k, n, eps, level, l) })
        }
        Mode::SaaLowerbound => {
            let eps = e.take("eps", a.eps)?;
            let level = e.take("eps_level", a.eps_level)?;
            let delta = e.take("delta", a.delta)?;
            json!({ "N": saa_lowerbound_sample_size(eps, level, delta)? })
        }
        Mode::SaaFeasibility => {
            let p = LipschitzSaa {
                epsilon: e.take("eps", a.eps)?,
                inner_level: e.take("eps_level", a.eps_level)?,
                gamma: e.take("gamma", a.gamma)?,
                lipschitz: e.take("lipschitz", a.lipschitz)?,
                diameter: e.take("diameter", a.diameter)?,
                n: e.take("n", a.n)?,
                beta: e.take("beta", a.beta)?,
            };
            json!({ "N": saa_feasibility_sample_size(&p)? })
        }
    };
    let mut obj = Map::new();
    obj.insert("mode".into(), Value::String(mode));
    obj.insert("input".into(), Value::Object(e.0));
    if let Value::Object(r) = out {
        obj.extend(r);
    }
    Ok(Value::Object(obj))
}
