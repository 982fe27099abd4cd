//! Probabilistic guarantees: binomial tails, a-priori and a-posteriori
//! scenario bounds, discarding budgets, SAA sample sizes and order-statistic
//! indices for lower bounds.
//!
//! All sums are formed from log-space binomial terms with compensated
//! summation, so counts up to 10^6 neither overflow nor underflow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{ceil_tol, floor_tol, ln_binomial_pmf, ln_choose, log_sum_exp, NeumaierSum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("{name} must lie in {range}, got {value}")]
    Range {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
    #[error("count {k} exceeds sample size {n}")]
    CountExceeds { k: u64, n: u64 },
    #[error("no discard budget: N = {n} is below the a-priori requirement")]
    NoFeasibleBudget { n: u64 },
    #[error("no valid order-statistic index: even L = 1 fails")]
    NoValidL,
    #[error("inner level {inner} must be {relation} epsilon {eps}")]
    Levels {
        inner: f64,
        eps: f64,
        relation: &'static str,
    },
}

fn open_unit(name: &'static str, v: f64) -> Result<(), CertError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CertError::Range {
            name,
            range: "(0, 1)",
            value: v,
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<(), CertError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CertError::Range {
            name,
            range: "(0, ∞)",
            value: v,
        })
    }
}

/// `P(Binomial(N, ε) ≤ k) = Σ_{i=0}^{k} C(N,i) εⁱ (1−ε)^{N−i}`.
pub fn binomial_tail(n: u64, k: u64, eps: f64) -> Result<f64, CertError> {
    if k > n {
        return Err(CertError::CountExceeds { k, n });
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(CertError::Range {
            name: "epsilon",
            range: "[0, 1]",
            value: eps,
        });
    }
    Ok(tail_unchecked(n, k, eps))
}

fn tail_unchecked(n: u64, k: u64, eps: f64) -> f64 {
    if k >= n || eps == 0.0 {
        return 1.0;
    }
    if eps == 1.0 {
        return 0.0;
    }
    // terms past the mode decay geometrically; below the mode they grow, so
    // sum from the top down and stop once contributions are negligible
    let mode = ((n as f64 + 1.0) * eps).floor() as u64;
    let mut acc = NeumaierSum::new();
    if k <= mode {
        let mut i = k as i64;
        while i >= 0 {
            let t = ln_binomial_pmf(n, i as u64, eps).exp();
            acc.add(t);
            if t < 1e-20 * acc.total() || (t == 0.0 && acc.total() > 0.0) {
                break;
            }
            i -= 1;
        }
        acc.total().min(1.0)
    } else {
        // 1 − upper tail keeps absolute error small when the sum is near one
        let mut upper = NeumaierSum::new();
        let mut i = k + 1;
        while i <= n {
            let t = ln_binomial_pmf(n, i, eps).exp();
            upper.add(t);
            if i > mode && (t < 1e-20 * upper.total() || (t == 0.0 && upper.total() > 0.0)) {
                break;
            }
            i += 1;
        }
        (1.0 - upper.total()).clamp(0.0, 1.0)
    }
}

/// `ln` of the binomial tail, usable when the tail underflows `f64`.
pub fn ln_binomial_tail(n: u64, k: u64, eps: f64) -> Result<f64, CertError> {
    let direct = binomial_tail(n, k, eps)?;
    if direct > 1e-250 {
        return Ok(direct.ln());
    }
    let terms: Vec<f64> = (0..=k).map(|i| ln_binomial_pmf(n, i, eps)).collect();
    Ok(log_sum_exp(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorRule {
    /// Smallest N with the exact binomial tail below β.
    Exact2008,
    /// Closed form `⌈(2/ε)(ln(1/β) + h̄)⌉`.
    ClosedForm2009,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorCertificate {
    pub epsilon: f64,
    pub beta: f64,
    pub h_bar: u64,
    pub n_required: u64,
    pub rule: PriorRule,
}

/// Smallest `N` with `binomial_tail(N, h̄−1, ε) ≤ β`.
pub fn prior_sample_size_exact(eps: f64, beta: f64, h_bar: u64) -> Result<u64, CertError> {
    open_unit("epsilon", eps)?;
    open_unit("beta", beta)?;
    if h_bar == 0 {
        return Err(CertError::Range {
            name: "h_bar",
            range: "[1, ∞)",
            value: 0.0,
        });
    }
    let k = h_bar - 1;
    let ok = |n: u64| tail_unchecked(n, k, eps) <= beta;
    // tail is 1 for N ≤ k, nonincreasing in N afterwards
    let mut lo = h_bar - 1;
    let mut hi = h_bar.max(1);
    while !ok(hi) {
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `⌈(2/ε)(ln(1/β) + h̄)⌉`.
pub fn prior_sample_size_simple(eps: f64, beta: f64, h_bar: u64) -> Result<u64, CertError> {
    open_unit("epsilon", eps)?;
    open_unit("beta", beta)?;
    let v = 2.0 / eps * ((1.0 / beta).ln() + h_bar as f64);
    Ok(ceil_tol(v) as u64)
}

pub fn prior_certificate(
    eps: f64,
    beta: f64,
    h_bar: u64,
    rule: PriorRule,
) -> Result<PriorCertificate, CertError> {
    let n_required = match rule {
        PriorRule::Exact2008 => prior_sample_size_exact(eps, beta, h_bar)?,
        PriorRule::ClosedForm2009 => prior_sample_size_simple(eps, beta, h_bar)?,
    };
    Ok(PriorCertificate {
        epsilon: eps,
        beta,
        h_bar,
        n_required,
        rule,
    })
}

/// Sign-carrying log of the wait-and-judge polynomial at `t`:
/// returns `ln(β/(N+1) Σ_{i=k}^{N} C(i,k) t^{i−k})` and `ln(C(N,k) t^{N−k})`.
fn wait_and_judge_sides(n: u64, k: u64, beta: f64, t: f64) -> (f64, f64) {
    let lt = t.ln();
    let terms: Vec<f64> = (k..=n)
        .map(|i| ln_choose(i, k) + (i - k) as f64 * lt)
        .collect();
    let left = (beta / (n as f64 + 1.0)).ln() + log_sum_exp(&terms);
    let right = ln_choose(n, k) + (n - k) as f64 * lt;
    (left, right)
}

/// Sign of `(β/(N+1)) Σ_{i=k}^{N} C(i,k) t^{i−k} − C(N,k) t^{N−k}`.
pub fn wait_and_judge_polynomial_sign(n: u64, k: u64, beta: f64, t: f64) -> f64 {
    let (l, r) = wait_and_judge_sides(n, k, beta, t);
    (l - r).signum()
}

/// Unique root `t(k)` in `(0, 1)` of the wait-and-judge polynomial.
///
/// The polynomial is positive below the root and negative above it. For
/// `k = N` it has no root in the open interval and 0 is returned.
pub fn wait_and_judge_root(n: u64, k: u64, beta: f64) -> Result<f64, CertError> {
    open_unit("beta", beta)?;
    if k > n {
        return Err(CertError::CountExceeds { k, n });
    }
    if k == n {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (l, r) = wait_and_judge_sides(n, k, beta, mid);
        if l > r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Posterior violation level `ε(k) = 1 − t(k)` for `k` observed support scenarios.
///
/// `k = N` yields the trivial level 1.
pub fn wait_and_judge_epsilon(n: u64, k: u64, beta: f64) -> Result<f64, CertError> {
    Ok(1.0 - wait_and_judge_root(n, k, beta)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorCertificate {
    pub n: u64,
    pub k: u64,
    pub beta: f64,
    pub root_t: f64,
    pub epsilon_of_k: f64,
}

pub fn posterior_certificate(n: u64, k: u64, beta: f64) -> Result<PosteriorCertificate, CertError> {
    let root_t = wait_and_judge_root(n, k, beta)?;
    Ok(PosteriorCertificate {
        n,
        k,
        beta,
        root_t,
        epsilon_of_k: 1.0 - root_t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityBound {
    pub n_hat: u64,
    pub v_hat: u64,
    pub rho: f64,
    pub eps_bar: f64,
}

/// Largest `γ ∈ [0,1]` with `binomial_tail(N̂, V̂, γ) ≥ ρ`.
pub fn posterior_violation_bound(n_hat: u64, v_hat: u64, rho: f64) -> Result<f64, CertError> {
    open_unit("rho", rho)?;
    if v_hat > n_hat {
        return Err(CertError::CountExceeds { k: v_hat, n: n_hat });
    }
    if v_hat == n_hat {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail_unchecked(n_hat, v_hat, mid) >= rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn feasibility_bound(n_hat: u64, v_hat: u64, rho: f64) -> Result<FeasibilityBound, CertError> {
    Ok(FeasibilityBound {
        n_hat,
        v_hat,
        rho,
        eps_bar: posterior_violation_bound(n_hat, v_hat, rho)?,
    })
}

/// `C(k+n−1, k) · binomial_tail(N, k+n−1, ε)`.
pub fn discard_condition_value(n_samples: u64, n: u64, k: u64, eps: f64) -> f64 {
    let top = k + n - 1;
    if top >= n_samples {
        return f64::INFINITY;
    }
    let tail = tail_unchecked(n_samples, top, eps);
    (ln_choose(top, k) + tail.ln()).exp()
}

/// Largest `k` such that discarding `k` of `N` scenarios keeps the
/// `(ε, β)` guarantee; scans upward from 0 and stops at the first failure.
pub fn discard_budget(n_samples: u64, n: u64, eps: f64, beta: f64) -> Result<u64, CertError> {
    open_unit("epsilon", eps)?;
    open_unit("beta", beta)?;
    if n == 0 || n_samples < n {
        return Err(CertError::CountExceeds {
            k: n,
            n: n_samples,
        });
    }
    if discard_condition_value(n_samples, n, 0, eps) > beta {
        return Err(CertError::NoFeasibleBudget { n: n_samples });
    }
    let mut k = 0;
    while k + n < n_samples && discard_condition_value(n_samples, n, k + 1, eps) <= beta {
        k += 1;
    }
    Ok(k)
}

/// Inputs of the Lipschitz SAA sample-size bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSaa {
    pub epsilon: f64,
    pub inner_level: f64,
    pub gamma: f64,
    pub lipschitz: f64,
    pub diameter: f64,
    pub n: u64,
    pub beta: f64,
}

impl LipschitzSaa {
    fn validate(&self) -> Result<(), CertError> {
        open_unit("epsilon", self.epsilon)?;
        open_unit("beta", self.beta)?;
        if !(self.inner_level >= 0.0 && self.inner_level < self.epsilon) {
            return Err(CertError::Levels {
                inner: self.inner_level,
                eps: self.epsilon,
                relation: "in [0, epsilon)",
            });
        }
        positive("gamma", self.gamma)?;
        positive("lipschitz", self.lipschitz)?;
        positive("diameter", self.diameter)
    }

    /// `1 − ⌈1/θ⌉ ⌈2LD/γ⌉ⁿ exp(−2N(ε − ε' − θ)²)` for `θ ∈ (0, ε − ε')`.
    pub fn confidence(&self, n_samples: u64, theta: f64) -> Result<f64, CertError> {
        self.validate()?;
        let gap = self.epsilon - self.inner_level;
        if !(theta > 0.0 && theta < gap) {
            return Err(CertError::Range {
                name: "theta",
                range: "(0, epsilon - inner level)",
                value: theta,
            });
        }
        let ln_count = ceil_tol(1.0 / theta).ln()
            + self.n as f64 * ceil_tol(2.0 * self.lipschitz * self.diameter / self.gamma).ln();
        let exponent = -2.0 * n_samples as f64 * (gap - theta).powi(2);
        Ok(1.0 - (ln_count + exponent).exp())
    }
}

/// SAA sample size with `θ = (ε − ε')/2`:
/// `⌈(2/(ε−ε')²)(ln(1/β) + n ln⌈2LD/γ⌉ + ln⌈2/(ε−ε')⌉)⌉`.
pub fn saa_feasibility_sample_size(p: &LipschitzSaa) -> Result<u64, CertError> {
    p.validate()?;
    let gap = p.epsilon - p.inner_level;
    let bracket = (1.0 / p.beta).ln()
        + p.n as f64 * ceil_tol(2.0 * p.lipschitz * p.diameter / p.gamma).ln()
        + ceil_tol(2.0 / gap).ln();
    Ok(ceil_tol(2.0 / (gap * gap) * bracket) as u64)
}

/// `⌈ln(1/δ) / (2(ε' − ε)²)⌉` for SAA lower bounds at level `ε' > ε`.
pub fn saa_lowerbound_sample_size(eps: f64, eps_level: f64, delta: f64) -> Result<u64, CertError> {
    open_unit("epsilon", eps)?;
    open_unit("delta", delta)?;
    if !(eps_level > eps && eps_level < 1.0) {
        return Err(CertError::Levels {
            inner: eps_level,
            eps,
            relation: "greater than",
        });
    }
    Ok(ceil_tol((1.0 / delta).ln() / (2.0 * (eps_level - eps).powi(2))) as u64)
}

/// Left-hand side of the order-statistic condition:
/// `Σ_{i=0}^{L−1} C(M,i) q^i (1−q)^{M−i}` with `q = (1−ε)^N`.
pub fn order_stat_sum(m: u64, n: u64, eps: f64, l: u64) -> f64 {
    let q = (n as f64 * (-eps).ln_1p()).exp();
    if l == 0 {
        return 0.0;
    }
    tail_unchecked(m, l - 1, q)
}

/// Largest `L ∈ {1..M}` for which the `L`-th smallest of `M` scenario
/// optima is a `(1−δ)`-confidence lower bound.
pub fn order_stat_index(m: u64, n: u64, eps: f64, delta: f64) -> Result<u64, CertError> {
    open_unit("epsilon", eps)?;
    open_unit("delta", delta)?;
    if m == 0 || n == 0 {
        return Err(CertError::Range {
            name: "M and N",
            range: "[1, ∞)",
            value: 0.0,
        });
    }
    let mut best = None;
    for l in 1..=m {
        if order_stat_sum(m, n, eps, l) <= delta {
            best = Some(l);
        } else {
            break;
        }
    }
    best.ok_or(CertError::NoValidL)
}

/// Which inequality to use for the SAA order-statistic condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailDirection {
    /// `Σ ≥ δ`, as the condition is usually printed.
    AsPrinted,
    /// `Σ ≤ δ`, the direction under which `o*_(L)` is a lower bound.
    Corrected,
}

/// `b(ε', ε, N) = binomial_tail(N, ⌊ε'N⌋, ε)`.
pub fn saa_success_probability(n: u64, eps: f64, eps_level: f64) -> f64 {
    let k = floor_tol(eps_level * n as f64) as u64;
    tail_unchecked(n, k.min(n), eps)
}

/// `Σ_{i=0}^{L−1} C(K,i) bⁱ (1−b)^{K−i}`.
pub fn saa_order_stat_sum(k_sets: u64, n: u64, eps: f64, eps_level: f64, l: u64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let b = saa_success_probability(n, eps, eps_level);
    tail_unchecked(k_sets, l - 1, b)
}

/// Largest `L ∈ {1..K}` satisfying the SAA order-statistic condition in
/// the chosen direction.
pub fn saa_order_stat_index(
    k_sets: u64,
    n: u64,
    eps: f64,
    eps_level: f64,
    delta: f64,
    direction: TailDirection,
) -> Result<u64, CertError> {
    open_unit("epsilon", eps)?;
    open_unit("delta", delta)?;
    if !(0.0..1.0).contains(&eps_level) {
        return Err(CertError::Range {
            name: "eps_level",
            range: "[0, 1)",
            value: eps_level,
        });
    }
    if k_sets == 0 || n == 0 {
        return Err(CertError::Range {
            name: "K and N",
            range: "[1, ∞)",
            value: 0.0,
        });
    }
    let holds = |l: u64| {
        let s = saa_order_stat_sum(k_sets, n, eps, eps_level, l);
        match direction {
            TailDirection::AsPrinted => s >= delta,
            TailDirection::Corrected => s <= delta,
        }
    };
    let mut best = None;
    for l in 1..=k_sets {
        if holds(l) {
            best = Some(l);
        } else if direction == TailDirection::Corrected {
            break;
        }
    }
    best.ok_or(CertError::NoValidL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LowerBoundPlan {
    Scenario {
        m: u64,
        n: u64,
        l: u64,
        epsilon: f64,
        delta: f64,
    },
    Saa {
        k: u64,
        n: u64,
        l: u64,
        epsilon: f64,
        eps_level: f64,
        delta: f64,
        direction: TailDirection,
    },
}

impl LowerBoundPlan {
    /// Checks the defining inequality at the stored `L`.
    pub fn holds(&self) -> bool {
        match *self {
            LowerBoundPlan::Scenario {
                m,
                n,
                l,
                epsilon,
                delta,
            } => l >= 1 && l <= m && order_stat_sum(m, n, epsilon, l) <= delta,
            LowerBoundPlan::Saa {
                k,
                n,
                l,
                epsilon,
                eps_level,
                delta,
                direction,
            } => {
                if l == 0 || l > k {
                    return false;
                }
                let s = saa_order_stat_sum(k, n, epsilon, eps_level, l);
                match direction {
                    TailDirection::AsPrinted => s >= delta,
                    TailDirection::Corrected => s <= delta,
                }
            }
        }
    }
}

/// Any certificate attached to a returned solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate {
    Prior(PriorCertificate),
    Posterior(PosteriorCertificate),
    FeasibilityBound(FeasibilityBound),
    LowerBound(LowerBoundPlan),
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tail_examples() {
        assert_relative_eq!(
            binomial_tail(10, 0, 0.1).unwrap(),
            0.9f64.powi(10),
            epsilon = 1e-15
        );
        assert_eq!(binomial_tail(5, 5, 0.3).unwrap(), 1.0);
        assert_eq!(binomial_tail(7, 3, 0.0).unwrap(), 1.0);
        assert_eq!(binomial_tail(7, 3, 1.0).unwrap(), 0.0);
        assert!(binomial_tail(3, 4, 0.5).is_err());
        assert!(binomial_tail(3, 1, 1.5).is_err());
    }

    #[test]
    fn tail_large_n_stays_finite() {
        let n = 1_000_000;
        let t = binomial_tail(n, 10_000, 0.01).unwrap();
        // near the mean: the normal approximation puts this close to one half
        assert!(t > 0.5 && t < 0.51, "{t}");
        let tiny = binomial_tail(n, 0, 0.01).unwrap();
        assert_eq!(tiny, 0.0);
        let ln_tiny = ln_binomial_tail(n, 0, 0.01).unwrap();
        assert_relative_eq!(ln_tiny, n as f64 * 0.99f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn prior_examples() {
        assert_eq!(prior_sample_size_exact(0.05, 0.05, 1).unwrap(), 59);
        assert_eq!(prior_sample_size_exact(0.5, 0.5, 1).unwrap(), 1);
        assert_eq!(prior_sample_size_simple(0.05, 0.05, 1).unwrap(), 160);
        assert_eq!(prior_sample_size_simple(0.05, 0.05, 2).unwrap(), 200);
        assert!(prior_sample_size_exact(0.0, 0.05, 1).is_err());
        assert!(prior_sample_size_exact(0.05, 0.05, 0).is_err());
    }

    #[test]
    fn prior_exact_matches_scan() {
        // exhaustive oracle: first N with the tail condition
        for &(eps, beta, h) in &[(0.05, 0.05, 2u64), (0.1, 0.01, 5), (0.2, 0.3, 3)] {
            let scan = (h..10_000)
                .find(|&n| binomial_tail(n, h - 1, eps).unwrap() <= beta)
                .unwrap();
            assert_eq!(prior_sample_size_exact(eps, beta, h).unwrap(), scan);
        }
        assert_eq!(prior_sample_size_exact(0.05, 0.05, 2).unwrap(), 93);
    }

    #[test]
    fn simple_rule_linear_in_h() {
        for h in 1..20 {
            let a = prior_sample_size_simple(0.05, 0.05, h).unwrap();
            let b = prior_sample_size_simple(0.05, 0.05, h + 1).unwrap();
            assert!(b - a == 40 || b - a == 39 || b - a == 41);
        }
    }

    #[test]
    fn wait_and_judge_closed_form() {
        let beta: f64 = 0.1;
        let expected = (beta / 2.0) / (1.0 - beta / 2.0);
        let t = wait_and_judge_root(1, 0, beta).unwrap();
        assert_relative_eq!(t, expected, epsilon = 1e-13);
        assert_relative_eq!(wait_and_judge_epsilon(1, 0, beta).unwrap(), 1.0 - expected, epsilon = 1e-13);
        assert_eq!(wait_and_judge_epsilon(5, 5, beta).unwrap(), 1.0);
        assert!(wait_and_judge_root(3, 4, beta).is_err());
    }

    #[test]
    fn wait_and_judge_sign_change() {
        let t = wait_and_judge_root(100, 5, 0.01).unwrap();
        assert!(wait_and_judge_polynomial_sign(100, 5, 0.01, 1e-9) > 0.0);
        assert!(wait_and_judge_polynomial_sign(100, 5, 0.01, t - 1e-9) > 0.0);
        assert!(wait_and_judge_polynomial_sign(100, 5, 0.01, t + 1e-9) < 0.0);
    }

    #[test]
    fn wait_and_judge_monotone() {
        let eps: Vec<f64> = (0..=10)
            .map(|k| wait_and_judge_epsilon(500, k, 1e-6).unwrap())
            .collect();
        for w in eps.windows(2) {
            assert!(w[0] < w[1], "{eps:?}");
        }
    }

    #[test]
    fn feasibility_bound_examples() {
        let v = posterior_violation_bound(100, 0, 0.05).unwrap();
        assert_relative_eq!(v, 1.0 - 0.05f64.powf(0.01), epsilon = 1e-12);
        assert_eq!(posterior_violation_bound(40, 40, 0.5).unwrap(), 1.0);
        let v = posterior_violation_bound(1000, 50, 0.05).unwrap();
        assert!(v >= 0.05);
        assert!((binomial_tail(1000, 50, v).unwrap() - 0.05).abs() < 1e-8);
    }

    #[test]
    fn discard_examples() {
        assert_eq!(discard_budget(59, 1, 0.05, 0.05).unwrap(), 0);
        assert_eq!(
            discard_budget(58, 1, 0.05, 0.05),
            Err(CertError::NoFeasibleBudget { n: 58 })
        );
        let k = discard_budget(500, 1, 0.05, 0.05).unwrap();
        assert!(discard_condition_value(500, 1, k, 0.05) <= 0.05);
        assert!(discard_condition_value(500, 1, k + 1, 0.05) > 0.05);
    }

    #[test]
    fn discard_zero_agrees_with_prior() {
        for &(eps, beta, n) in &[(0.05, 0.05, 1u64), (0.1, 0.1, 2), (0.05, 0.01, 3)] {
            let need = prior_sample_size_exact(eps, beta, n).unwrap();
            assert!(discard_budget(need, n, eps, beta).is_ok());
            assert!(discard_budget(need - 1, n, eps, beta).is_err());
        }
    }

    #[test]
    fn saa_sample_sizes() {
        let p = LipschitzSaa {
            epsilon: 0.1,
            inner_level: 0.05,
            gamma: 0.01,
            lipschitz: 1.0,
            diameter: 1.0,
            n: 2,
            beta: 0.01,
        };
        assert_eq!(saa_feasibility_sample_size(&p).unwrap(), 15113);
        let bad = LipschitzSaa {
            inner_level: 0.1,
            ..p
        };
        assert!(saa_feasibility_sample_size(&bad).is_err());
        // the confidence bound at the returned N reaches 1 − β
        let c = p.confidence(15113, 0.025).unwrap();
        assert!(c >= 1.0 - 0.01 - 1e-12, "{c}");
        assert_eq!(saa_lowerbound_sample_size(0.05, 0.10, 0.05).unwrap(), 600);
        assert_eq!(saa_lowerbound_sample_size(0.05, 0.06, 0.05).unwrap(), 14979);
        assert!(saa_lowerbound_sample_size(0.05, 0.05, 0.05).is_err());
        assert!(saa_lowerbound_sample_size(0.05, 0.1, 1.0).is_err());
    }

    #[test]
    fn doubling_diameter_adds_log_two() {
        let base = LipschitzSaa {
            epsilon: 0.1,
            inner_level: 0.05,
            gamma: 0.01,
            lipschitz: 1.0,
            diameter: 1.0,
            n: 2,
            beta: 0.01,
        };
        let gap: f64 = 0.05;
        let raw = |p: &LipschitzSaa| {
            2.0 / (gap * gap)
                * ((1.0 / p.beta).ln()
                    + p.n as f64 * ceil_tol(2.0 * p.lipschitz * p.diameter / p.gamma).ln()
                    + ceil_tol(2.0 / gap).ln())
        };
        let doubled = LipschitzSaa {
            diameter: 2.0,
            ..base
        };
        assert_relative_eq!(
            raw(&doubled) - raw(&base),
            800.0 * 2.0 * 2f64.ln(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn order_stat_examples() {
        // L = 1 reduces to a single term
        let q = 0.95f64.powi(90);
        assert_relative_eq!(
            order_stat_sum(302, 90, 0.05, 1),
            (1.0 - q).powi(302),
            max_relative = 1e-12
        );
        assert!(order_stat_index(302, 90, 0.05, 0.05).unwrap() >= 1);
        assert_eq!(order_stat_index(10, 1000, 0.05, 0.05), Err(CertError::NoValidL));
    }

    #[test]
    fn saa_order_stat_examples() {
        assert_relative_eq!(
            saa_success_probability(10, 0.05, 0.1),
            0.95f64.powi(10) + 10.0 * 0.05 * 0.95f64.powi(9),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            saa_success_probability(30, 0.05, 0.0),
            0.95f64.powi(30),
            epsilon = 1e-15
        );
        // term-by-term oracle
        let (k, n, eps, lvl, delta) = (20u64, 100u64, 0.05, 0.05, 0.05);
        let b = saa_success_probability(n, eps, lvl);
        let direct = |l: u64| -> f64 {
            (0..l)
                .map(|i| {
                    let c: f64 = (0..i).map(|j| (k - j) as f64 / (j + 1) as f64).product();
                    c * b.powi(i as i32) * (1.0 - b).powi((k - i) as i32)
                })
                .sum()
        };
        let printed = saa_order_stat_index(k, n, eps, lvl, delta, TailDirection::AsPrinted).unwrap();
        let expected_printed = (1..=k).filter(|&l| direct(l) >= delta).max().unwrap();
        assert_eq!(printed, expected_printed);
        let corrected =
            saa_order_stat_index(k, n, eps, lvl, delta, TailDirection::Corrected).unwrap();
        assert!(direct(corrected) <= delta + 1e-15);
        assert!(direct(corrected + 1) > delta);
    }

    #[test]
    fn plans_check_their_inequality() {
        let l = order_stat_index(40, 20, 0.05, 0.05).unwrap();
        let plan = LowerBoundPlan::Scenario {
            m: 40,
            n: 20,
            l,
            epsilon: 0.05,
            delta: 0.05,
        };
        assert!(plan.holds());
        let bad = LowerBoundPlan::Scenario {
            m: 40,
            n: 20,
            l: l + 1,
            epsilon: 0.05,
            delta: 0.05,
        };
        assert!(!bad.holds());
    }
}
