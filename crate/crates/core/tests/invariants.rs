use chancekit::certificates::{
    binomial_tail, discard_budget, discard_condition_value, feasibility_bound, order_stat_index, order_stat_sum,
    prior_sample_size_exact, prior_sample_size_simple, wait_and_judge_epsilon, wait_and_judge_root,
};
use chancekit::lp_format;
use chancekit::model::{draw_scenarios, CcProgram, CcRow, GeneratorSpec, LinearFrame};
use chancekit::par::ExecMode;
use chancekit::reformulate::scenario_problem;
use chancekit::solver::solve;
use chancekit::validate::{violation_distribution_experiment, ExperimentConfig};
use proptest::prelude::*;

fn coordinatewise(n: usize) -> CcProgram {
    let rows = (0..n)
        .map(|j| {
            let mut a = vec![0.0; n];
            a[j] = -1.0;
            let mut b = vec![0.0; n];
            b[j] = 1.0;
            CcRow::separable(a, 0.0, b)
        })
        .collect();
    CcProgram::new(LinearFrame::with_box(vec![1.0; n], -10.0, 10.0), n, rows, 0.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tail_is_a_monotone_probability(n in 1u64..300, k in 0u64..300, eps in 0.001f64..0.999) {
        let k = k.min(n);
        let p = binomial_tail(n, k, eps).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        if k < n {
            prop_assert!(binomial_tail(n, k + 1, eps).unwrap() >= p - 1e-12);
        }
        prop_assert!(binomial_tail(n, k, (eps * 1.1).min(0.9999)).unwrap() <= p + 1e-12);
    }

    #[test]
    fn prior_size_certifies_and_is_minimal(eps in 0.01f64..0.3, beta in 1e-6f64..0.3, h in 1u64..15) {
        let n = prior_sample_size_exact(eps, beta, h).unwrap();
        prop_assert!(binomial_tail(n, h - 1, eps).unwrap() <= beta);
        if n > h {
            prop_assert!(binomial_tail(n - 1, h - 1, eps).unwrap() > beta);
        }
        prop_assert!(n <= prior_sample_size_simple(eps, beta, h).unwrap());
        prop_assert!(prior_sample_size_exact(eps, beta / 2.0, h).unwrap() >= n);
        prop_assert!(prior_sample_size_exact(eps, beta, h + 1).unwrap() >= n);
    }

    #[test]
    fn wait_and_judge_level_increases_with_support(n in 2u64..60, beta in 1e-6f64..0.5) {
        let mut prev = 0.0;
        for k in 0..n {
            let t = wait_and_judge_root(n, k, beta).unwrap();
            prop_assert!((0.0..1.0).contains(&t));
            let e = wait_and_judge_epsilon(n, k, beta).unwrap();
            prop_assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn feasibility_bound_is_the_tail_root(n in 10u64..2000, frac in 0.0f64..0.5, rho in 1e-6f64..0.5) {
        let v = (frac * n as f64) as u64;
        let e = feasibility_bound(n, v, rho).unwrap().eps_bar;
        prop_assert!(e > v as f64 / n as f64 - 1e-12);
        let at = binomial_tail(n, v, e).unwrap();
        prop_assert!((at - rho).abs() < 1e-6, "tail at eps_bar = {at}");
    }

    #[test]
    fn discard_budget_satisfies_its_condition(n_samples in 20u64..400, n in 1u64..5, eps in 0.02f64..0.3, beta in 1e-4f64..0.3) {
        if let Ok(k) = discard_budget(n_samples, n, eps, beta) {
            prop_assert!(discard_condition_value(n_samples, n, k, eps) <= beta);
            prop_assert!(discard_condition_value(n_samples, n, k + 1, eps) > beta);
        }
    }

    #[test]
    fn order_stat_index_is_largest_valid(m in 2u64..60, n in 1u64..40, eps in 0.02f64..0.3, delta in 0.01f64..0.5) {
        if let Ok(l) = order_stat_index(m, n, eps, delta) {
            prop_assert!(l >= 1 && l <= m);
            prop_assert!(order_stat_sum(m, n, eps, l) <= delta);
            if l < m {
                prop_assert!(order_stat_sum(m, n, eps, l + 1) > delta);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lp_round_trip_preserves_text_and_optimum(n in 1usize..4, big_n in 1usize..30, seed in any::<u64>()) {
        let prog = coordinatewise(n);
        let gen = GeneratorSpec::Gaussian { mu: vec![0.0; n], sigma: (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect() };
        let scen = draw_scenarios(&gen, big_n, seed).unwrap();
        let dp = scenario_problem(&prog, &scen).unwrap();
        let first = lp_format::emit(&dp);
        let back = lp_format::parse(&first.lp, first.soc_sidecar.as_deref()).unwrap();
        prop_assert_eq!(&lp_format::emit(&back).lp, &first.lp);
        let (a, b) = (solve(&dp).unwrap().objective, solve(&back).unwrap().objective);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn trials_do_not_depend_on_exec_mode(trials in 1usize..20, seed in any::<u64>()) {
        let prog = coordinatewise(2);
        let gen = GeneratorSpec::UniformBox { lo: vec![0.0; 2], hi: vec![1.0; 2] };
        let run = |mode| {
            let cfg = ExperimentConfig { mode, ..ExperimentConfig::default() };
            violation_distribution_experiment(&prog, &gen, 30, trials, seed, &cfg).unwrap().violations
        };
        prop_assert_eq!(run(ExecMode::Sequential), run(ExecMode::Parallel));
    }
}
