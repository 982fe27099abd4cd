//! Dense bounded-variable two-phase primal simplex with Bland's rule.
//!
//! Variables are mapped onto `0 ≤ y ≤ u`: a finite lower bound is shifted
//! to zero, an upper-only bound is reflected, and a free variable is split.
//! Rows are brought to `a'y ± s = b'` with `b' ≥ 0`; rows without a `+1`
//! slack receive an artificial column for phase 1.

use crate::model::Relation;
use crate::program::DeterministicProgram;

use super::{SolveResult, SolverError, Status, FEAS_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub max_pivots: u64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_pivots: 100_000,
        }
    }
}

const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;

/// Solves a program without binaries or cone rows.
pub fn solve_lp(dp: &DeterministicProgram, opts: &LpOptions) -> Result<SolveResult, SolverError> {
    if dp.has_binaries() {
        return Err(SolverError::Unsupported("solve_lp: program has binary variables"));
    }
    if dp.has_cones() {
        return Err(SolverError::Unsupported("solve_lp: program has cone rows"));
    }
    dp.validate()?;
    let lower: Vec<f64> = dp.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = dp.variables.iter().map(|v| v.upper).collect();
    Ok(solve_lp_with_bounds(dp, &lower, &upper, opts))
}

/// LP relaxation of `dp` (binaries treated as continuous, cone rows
/// ignored) under the given variable bounds.
pub fn solve_lp_with_bounds(
    dp: &DeterministicProgram,
    lower: &[f64],
    upper: &[f64],
    opts: &LpOptions,
) -> SolveResult {
    for (l, u) in lower.iter().zip(upper) {
        if l > u {
            return SolveResult::without_solution(Status::Infeasible, 0);
        }
    }
    let mut lp = Standard::build(dp, lower, upper);
    lp.solve(dp, opts)
}

#[derive(Debug, Clone, Copy)]
enum ColMap {
    Shift { col: usize, base: f64 },
    Reflect { col: usize, base: f64 },
    Split { pos: usize, neg: usize },
    Fixed { value: f64 },
}

struct Standard {
    m: usize,
    ncols: usize,
    art_start: usize,
    /// Row-major `m × ncols`.
    t: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    init_col: Vec<usize>,
    row_sign: Vec<f64>,
    maps: Vec<ColMap>,
    pivots: u64,
}

impl Standard {
    fn build(dp: &DeterministicProgram, lower: &[f64], upper: &[f64]) -> Self {
        let mut maps = Vec::with_capacity(lower.len());
        let mut col_upper = Vec::new();
        for (&l, &u) in lower.iter().zip(upper) {
            let map = if l == u {
                ColMap::Fixed { value: l }
            } else if l.is_finite() {
                col_upper.push(u - l);
                ColMap::Shift {
                    col: col_upper.len() - 1,
                    base: l,
                }
            } else if u.is_finite() {
                col_upper.push(f64::INFINITY);
                ColMap::Reflect {
                    col: col_upper.len() - 1,
                    base: u,
                }
            } else {
                col_upper.push(f64::INFINITY);
                col_upper.push(f64::INFINITY);
                ColMap::Split {
                    pos: col_upper.len() - 2,
                    neg: col_upper.len() - 1,
                }
            };
            maps.push(map);
        }
        let n_struct = col_upper.len();
        let m = dp.rows.len();

        // structural part of each row and its shifted rhs
        let mut dense = vec![vec![0.0; n_struct]; m];
        let mut rhs = vec![0.0; m];
        for (r, row) in dp.rows.iter().enumerate() {
            let mut b = row.rhs;
            for &(j, a) in &row.terms {
                match maps[j] {
                    ColMap::Fixed { value } => b -= a * value,
                    ColMap::Shift { col, base } => {
                        dense[r][col] += a;
                        b -= a * base;
                    }
                    ColMap::Reflect { col, base } => {
                        dense[r][col] -= a;
                        b -= a * base;
                    }
                    ColMap::Split { pos, neg } => {
                        dense[r][pos] += a;
                        dense[r][neg] -= a;
                    }
                }
            }
            rhs[r] = b;
        }

        // slack sign per row after making the rhs nonnegative
        let mut slack_coef = vec![0.0; m];
        let mut row_sign = vec![1.0; m];
        for (r, row) in dp.rows.iter().enumerate() {
            let s = match row.relation {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => 0.0,
            };
            let flip = rhs[r] < 0.0 || (rhs[r] == 0.0 && s < 0.0);
            row_sign[r] = if flip { -1.0 } else { 1.0 };
            slack_coef[r] = s * row_sign[r];
        }
        let n_slack = slack_coef.iter().filter(|&&s| s != 0.0).count();
        let n_art = slack_coef.iter().filter(|&&s| s <= 0.0).count();
        let art_start = n_struct + n_slack;
        let ncols = art_start + n_art;

        let mut t = vec![0.0; m * ncols];
        let mut upper_all = col_upper;
        upper_all.resize(ncols, f64::INFINITY);
        let mut init_col = vec![0; m];
        let mut next_slack = n_struct;
        let mut next_art = art_start;
        let mut xb = vec![0.0; m];
        for r in 0..m {
            let sign = row_sign[r];
            let base = r * ncols;
            for (j, &a) in dense[r].iter().enumerate() {
                t[base + j] = sign * a;
            }
            xb[r] = sign * rhs[r];
            if slack_coef[r] != 0.0 {
                t[base + next_slack] = slack_coef[r];
                if slack_coef[r] > 0.0 {
                    init_col[r] = next_slack;
                }
                next_slack += 1;
            }
            if slack_coef[r] <= 0.0 {
                t[base + next_art] = 1.0;
                init_col[r] = next_art;
                next_art += 1;
            }
        }
        let mut is_basic = vec![false; ncols];
        for &c in &init_col {
            is_basic[c] = true;
        }
        Self {
            m,
            ncols,
            art_start,
            t,
            xb,
            basis: init_col.clone(),
            is_basic,
            at_upper: vec![false; ncols],
            upper: upper_all,
            cost: vec![0.0; ncols],
            init_col,
            row_sign,
            maps,
            pivots: 0,
        }
    }

    fn reduced_costs(&self) -> Vec<f64> {
        let mut d = self.cost.clone();
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [f64]) {
        let nc = self.ncols;
        let piv = self.t[r * nc + j];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for a in row.iter_mut() {
                *a /= piv;
            }
            row[j] = 1.0;
        }
        let pivot_row: Vec<f64> = self.t[r * nc..(r + 1) * nc].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + j];
            if f != 0.0 {
                let row = &mut self.t[i * nc..(i + 1) * nc];
                for (a, &p) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = d[j];
        if f != 0.0 {
            for (dk, &p) in d.iter_mut().zip(&pivot_row) {
                *dk -= f * p;
            }
            d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
        self.pivots += 1;
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    /// Runs primal simplex iterations for the current cost vector.
    fn iterate(&mut self, d: &mut [f64], allow_art: bool, max_pivots: u64) -> Status {
        let nc = self.ncols;
        let limit = if allow_art { nc } else { self.art_start };
        loop {
            if self.pivots >= max_pivots {
                return Status::IterationLimit;
            }
            // Bland: lowest-index improving column
            let mut entering = None;
            for j in 0..limit {
                if self.is_basic[j] || self.upper[j] <= 0.0 {
                    continue;
                }
                if !self.at_upper[j] && d[j] < -OPT_TOL {
                    entering = Some((j, 1.0));
                    break;
                }
                if self.at_upper[j] && d[j] > OPT_TOL {
                    entering = Some((j, -1.0));
                    break;
                }
            }
            let Some((j, s)) = entering else {
                return Status::Optimal;
            };

            let mut theta = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                let alpha = s * self.t[i * nc + j];
                let b = self.basis[i];
                let (cand, to_upper) = if alpha > PIVOT_TOL {
                    ((self.xb[i] / alpha).max(0.0), false)
                } else if alpha < -PIVOT_TOL && self.upper[b].is_finite() {
                    (((self.upper[b] - self.xb[i]) / -alpha).max(0.0), true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if cand < theta => true,
                    Some((li, _)) if cand == theta => b < self.basis[li],
                    _ => false,
                };
                if better {
                    theta = cand;
                    leave = Some((i, to_upper));
                }
            }
            if !theta.is_finite() {
                return Status::Unbounded;
            }
            let start = self.nonbasic_value(j);
            for i in 0..self.m {
                let a = self.t[i * nc + j];
                if a != 0.0 {
                    self.xb[i] -= s * theta * a;
                }
            }
            match leave {
                None => {
                    self.at_upper[j] = !self.at_upper[j];
                    self.pivots += 1;
                }
                Some((r, to_upper)) => {
                    let leaving = self.basis[r];
                    self.pivot(r, j, d);
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[j] = false;
                    self.xb[r] = start + s * theta;
                }
            }
        }
    }

    fn solve(&mut self, dp: &DeterministicProgram, opts: &LpOptions) -> SolveResult {
        let nc = self.ncols;
        // phase 1
        if self.art_start < nc {
            for j in self.art_start..nc {
                self.cost[j] = 1.0;
            }
            let mut d = self.reduced_costs();
            let status = self.iterate(&mut d, true, opts.max_pivots);
            if status == Status::IterationLimit {
                return SolveResult::without_solution(status, self.pivots);
            }
            let infeas: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.art_start)
                .map(|i| self.xb[i])
                .sum();
            let scale = 1.0 + self.xb_scale();
            if infeas > 10.0 * FEAS_TOL * scale {
                return SolveResult::without_solution(Status::Infeasible, self.pivots);
            }
            // pivot remaining artificials out where possible
            for r in 0..self.m {
                if self.basis[r] < self.art_start {
                    continue;
                }
                let row = &self.t[r * nc..(r + 1) * nc];
                let mut best: Option<(usize, f64)> = None;
                for (j, &a) in row.iter().enumerate().take(self.art_start) {
                    if !self.is_basic[j] && a.abs() > 1e-7 && best.is_none_or(|b| a.abs() > b.1) {
                        best = Some((j, a.abs()));
                    }
                }
                if let Some((j, _)) = best {
                    let value = self.nonbasic_value(j);
                    let leaving = self.basis[r];
                    self.pivot(r, j, &mut d);
                    self.at_upper[leaving] = false;
                    self.at_upper[j] = false;
                    self.xb[r] = value;
                }
            }
            for j in self.art_start..nc {
                self.cost[j] = 0.0;
                self.upper[j] = 0.0;
            }
        }

        // phase 2
        for c in self.cost.iter_mut() {
            *c = 0.0;
        }
        for &(i, c) in &dp.objective.terms {
            match self.maps[i] {
                ColMap::Fixed { .. } => {}
                ColMap::Shift { col, .. } => self.cost[col] += c,
                ColMap::Reflect { col, .. } => self.cost[col] -= c,
                ColMap::Split { pos, neg } => {
                    self.cost[pos] += c;
                    self.cost[neg] -= c;
                }
            }
        }
        let mut d = self.reduced_costs();
        let status = self.iterate(&mut d, false, opts.max_pivots);
        if status != Status::Optimal {
            return SolveResult::without_solution(status, self.pivots);
        }

        let mut y = vec![0.0; nc];
        for j in 0..nc {
            if !self.is_basic[j] {
                y[j] = self.nonbasic_value(j);
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            y[b] = self.xb[i].clamp(0.0, self.upper[b].max(0.0));
        }
        let x: Vec<f64> = self
            .maps
            .iter()
            .map(|m| match *m {
                ColMap::Fixed { value } => value,
                ColMap::Shift { col, base } => base + y[col],
                ColMap::Reflect { col, base } => base - y[col],
                ColMap::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect();
        let duals: Vec<f64> = (0..self.m)
            .map(|r| -d[self.init_col[r]] * self.row_sign[r])
            .collect();
        SolveResult {
            status: Status::Optimal,
            objective: dp.objective.eval(&x),
            x,
            support_set: None,
            degenerate: None,
            duals: Some(duals),
            pivots: self.pivots,
            nodes: 0,
            cut_rounds: 0,
        }
    }

    fn xb_scale(&self) -> f64 {
        self.xb.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{AffineExpr, Method, Provenance};
    use proptest::prelude::*;

    fn lp() -> DeterministicProgram {
        DeterministicProgram::new(Provenance::new(Method::Custom, "", None))
    }

    #[test]
    fn one_dimensional_examples() {
        let mut dp = lp();
        let x = dp.add_continuous("x", f64::NEG_INFINITY, 10.0);
        dp.n_decision = 1;
        dp.objective = AffineExpr::var(x);
        dp.add_row("r", AffineExpr::var(x).with_constant(-0.9), Relation::Ge);
        let r = solve_lp(&dp, &LpOptions::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 0.9).abs() < 1e-12);

        let mut dp = lp();
        let x = dp.add_continuous("x", f64::NEG_INFINITY, 0.0);
        dp.objective = AffineExpr::var(x);
        dp.add_row("r", AffineExpr::var(x).with_constant(-1.0), Relation::Ge);
        assert_eq!(solve_lp(&dp, &LpOptions::default()).unwrap().status, Status::Infeasible);

        let mut dp = lp();
        let x = dp.add_free("x");
        dp.objective = AffineExpr::var(x);
        assert_eq!(solve_lp(&dp, &LpOptions::default()).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + 2y  s.t. x + y = 3, x − y ≤ 1, y free, x ≥ −5
        let mut dp = lp();
        let x = dp.add_continuous("x", -5.0, f64::INFINITY);
        let y = dp.add_free("y");
        dp.objective = AffineExpr::var(x).plus(&AffineExpr::term(y, 2.0));
        dp.add_row(
            "e",
            AffineExpr::var(x).plus(&AffineExpr::var(y)).with_constant(-3.0),
            Relation::Eq,
        );
        dp.add_row(
            "l",
            AffineExpr::var(x).plus(&AffineExpr::term(y, -1.0)).with_constant(-1.0),
            Relation::Le,
        );
        let r = solve_lp(&dp, &LpOptions::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 2.0).abs() < 1e-9 && (r.x[1] - 1.0).abs() < 1e-9);
        assert!((r.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut dp = lp();
        let x = dp.add_continuous("x", 0.0, 4.0);
        let y = dp.add_continuous("y", 0.0, 4.0);
        dp.objective = AffineExpr::term(x, -1.0);
        for _ in 0..2 {
            dp.add_row(
                "e",
                AffineExpr::var(x).plus(&AffineExpr::var(y)).with_constant(-2.0),
                Relation::Eq,
            );
        }
        let r = solve_lp(&dp, &LpOptions::default()).unwrap();
        assert!((r.objective + 2.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_variables_and_reflection() {
        let mut dp = lp();
        let x = dp.add_continuous("x", 1.5, 1.5);
        let y = dp.add_continuous("y", f64::NEG_INFINITY, 2.0);
        dp.objective = AffineExpr::term(y, -1.0).plus(&AffineExpr::var(x));
        dp.add_row(
            "r",
            AffineExpr::var(x).plus(&AffineExpr::var(y)).with_constant(-3.0),
            Relation::Le,
        );
        let r = solve_lp(&dp, &LpOptions::default()).unwrap();
        assert_eq!(r.x, vec![1.5, 1.5]);
    }

    /// Exhaustive vertex enumeration for `min cᵀx, Ax ≤ b, lo ≤ x ≤ hi`.
    fn vertex_oracle(c: &[f64], a: &[Vec<f64>], b: &[f64], lo: f64, hi: f64) -> Option<f64> {
        let n = c.len();
        let mut planes: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            planes.push((e.clone(), hi));
            e[j] = -1.0;
            planes.push((e, -lo));
        }
        let p = planes.len();
        let mut best: Option<f64> = None;
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let mat = nalgebra::DMatrix::from_fn(n, n, |r, col| planes[idx[r]].0[col]);
            let rhs = nalgebra::DVector::from_fn(n, |r, _| planes[idx[r]].1);
            if let Some(sol) = mat.lu().solve(&rhs) {
                let ok = planes
                    .iter()
                    .all(|(row, bb)| row.iter().zip(sol.iter()).map(|(u, v)| u * v).sum::<f64>() <= bb + 1e-8);
                if ok && sol.iter().all(|v| v.is_finite()) {
                    let val: f64 = c.iter().zip(sol.iter()).map(|(u, v)| u * v).sum();
                    best = Some(best.map_or(val, |b: f64| b.min(val)));
                }
            }
            // next combination
            let mut k = n;
            loop {
                if k == 0 {
                    return best;
                }
                k -= 1;
                if idx[k] < p - n + k {
                    idx[k] += 1;
                    for l in k + 1..n {
                        idx[l] = idx[l - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn random_lp(
        c: Vec<f64>,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    ) -> DeterministicProgram {
        let mut dp = lp();
        for j in 0..c.len() {
            dp.add_continuous(format!("x{j}"), -3.0, 3.0);
        }
        dp.n_decision = c.len();
        dp.objective = AffineExpr::dense(0, &c, 0.0);
        for (row, bb) in a.iter().zip(&b) {
            dp.add_row("r", AffineExpr::dense(0, row, -bb), Relation::Le);
        }
        dp
    }

    fn check_duality(dp: &DeterministicProgram, r: &SolveResult) {
        let y = r.duals.as_ref().unwrap();
        let n = dp.num_vars();
        let mut rc: Vec<f64> = vec![0.0; n];
        for &(j, c) in &dp.objective.terms {
            rc[j] += c;
        }
        for (row, &yr) in dp.rows.iter().zip(y) {
            match row.relation {
                Relation::Le => assert!(yr <= 1e-9),
                Relation::Ge => assert!(yr >= -1e-9),
                Relation::Eq => {}
            }
            for &(j, a) in &row.terms {
                rc[j] -= yr * a;
            }
        }
        let mut dual_obj = dp.objective.constant;
        for (row, &yr) in dp.rows.iter().zip(y) {
            dual_obj += yr * row.rhs;
        }
        for (j, v) in dp.variables.iter().enumerate() {
            if rc[j] > 0.0 {
                dual_obj += rc[j] * v.lower;
            } else if rc[j] < 0.0 {
                dual_obj += rc[j] * v.upper;
            }
        }
        assert!((dual_obj - r.objective).abs() <= 1e-7 * (1.0 + r.objective.abs()), "gap {dual_obj} vs {}", r.objective);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn matches_vertex_enumeration(
            n in 1usize..=4,
            m in 1usize..=6,
            seed in proptest::collection::vec(-5.0f64..5.0, 64),
        ) {
            let mut it = seed.iter().copied().cycle();
            let c: Vec<f64> = (0..n).map(|_| it.next().unwrap()).collect();
            let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| it.next().unwrap()).collect()).collect();
            let b: Vec<f64> = (0..m).map(|_| it.next().unwrap()).collect();
            let dp = random_lp(c.clone(), a.clone(), b.clone());
            let r = solve_lp(&dp, &LpOptions::default()).unwrap();
            match vertex_oracle(&c, &a, &b, -3.0, 3.0) {
                None => prop_assert_eq!(r.status, Status::Infeasible),
                Some(v) => {
                    prop_assert_eq!(r.status, Status::Optimal);
                    prop_assert!((r.objective - v).abs() < 1e-7, "{} vs {}", r.objective, v);
                    prop_assert!(dp.max_violation(&r.x) < 1e-7);
                    check_duality(&dp, &r);
                }
            }
        }
    }

    #[test]
    fn larger_vertex_oracle_cases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..12 {
            let n = rng.random_range(5..=8);
            let m = rng.random_range(6..=12);
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..2.0)).collect();
            let dp = random_lp(c.clone(), a.clone(), b.clone());
            let r = solve_lp(&dp, &LpOptions::default()).unwrap();
            match vertex_oracle(&c, &a, &b, -3.0, 3.0) {
                None => assert_eq!(r.status, Status::Infeasible),
                Some(v) => {
                    assert!((r.objective - v).abs() < 1e-7);
                    check_duality(&dp, &r);
                }
            }
        }
    }
}
