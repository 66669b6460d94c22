use nalgebra::{dvector, DVector};
use proptest::prelude::*;

use sampled_nmpc::complexity::{cost_eval_count, step_count};
use sampled_nmpc::models::{CartSpring, Wmr};
use sampled_nmpc::sampling::{draw_samples, SamplerConfig, SamplerScheme, SamplerState};
use sampled_nmpc::solver::{find_oracle, improve_plan, Problem, SampleSchedule, SolverConfig};
use sampled_nmpc::{check_feasible, evaluate_cost, rollout, Plan};

fn cart_warm(problem: &Problem, x: &DVector<f64>, seed: u64) -> Option<Plan> {
    let mut cfg = SolverConfig::new(problem.horizon(), 0);
    cfg.sampler = cfg.sampler.with_seed(seed);
    cfg.oracle_budget = 2_000;
    find_oracle(x, problem, &cfg).ok().map(|o| o.plan)
}

fn feasible(problem: &Problem, x: &DVector<f64>, plan: &Plan) -> bool {
    let traj = rollout(problem.model.as_ref(), x, plan).unwrap();
    check_feasible(&problem.constraints, &traj, plan, 0).unwrap().feasible
}

/// Exhaustive backward sweep over the exact samples the solver draws.
fn reference_sweep(problem: &Problem, x: &DVector<f64>, warm: &Plan, schedule: &[usize], sampler: SamplerConfig) -> f64 {
    let mut state = SamplerState::new(sampler);
    let score = |plan: &Plan| {
        let traj = rollout(problem.model.as_ref(), x, plan).unwrap();
        check_feasible(&problem.constraints, &traj, plan, 0)
            .unwrap()
            .feasible
            .then(|| evaluate_cost(&problem.cost, &traj, plan).unwrap())
    };
    let mut plan = warm.clone();
    let mut best = score(warm).unwrap();
    for j in (0..warm.horizon()).rev() {
        let reference = plan.clone();
        for u in draw_samples(&mut state, &problem.constraints.input_box, schedule[j]).unwrap() {
            let candidate = reference.with_input(j, u);
            if let Some(c) = score(&candidate) {
                if c < best {
                    best = c;
                    plan = candidate;
                }
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn improvement_is_feasible_monotone_and_exactly_costed(
        x1 in -1.5f64..1.5, x2 in -2.0f64..2.0, horizon in 1usize..8, n in 0usize..12, seed in 0u64..1000, prune in any::<bool>(),
    ) {
        let problem = Problem::from_benchmark(CartSpring::default(), horizon);
        let x = dvector![x1, x2];
        let Some(warm) = cart_warm(&problem, &x, seed) else { return Ok(()) };
        let mut cfg = SolverConfig::new(horizon, n);
        cfg.pruning = prune;
        cfg.sampler = SamplerConfig::new(SamplerScheme::Random).with_seed(seed);
        let r = improve_plan(&x, &warm, &problem, &cfg, &mut SamplerState::new(cfg.sampler.clone())).unwrap();
        prop_assert!(r.cost <= r.warm_cost);
        prop_assert!(feasible(&problem, &x, &r.plan));
        let traj = rollout(problem.model.as_ref(), &x, &r.plan).unwrap();
        prop_assert_eq!(&traj, &r.trajectory);
        prop_assert_eq!(r.cost, evaluate_cost(&problem.cost, &traj, &r.plan).unwrap());
        if n == 0 {
            prop_assert_eq!(&r.plan, &warm);
        }
    }

    #[test]
    fn matches_exhaustive_sweep_over_the_same_samples(
        x1 in -1.0f64..1.0, x2 in -1.5f64..1.5, horizon in 1usize..5,
        schedule in proptest::collection::vec(0usize..7, 5), seed in 0u64..1000,
        scheme in prop_oneof![Just(SamplerScheme::Random), Just(SamplerScheme::Halton)],
    ) {
        let problem = Problem::from_benchmark(CartSpring::default(), horizon);
        let x = dvector![x1, x2];
        let Some(warm) = cart_warm(&problem, &x, seed) else { return Ok(()) };
        let schedule = schedule[..horizon].to_vec();
        let mut cfg = SolverConfig::new(horizon, 0);
        cfg.samples = SampleSchedule::PerStep(schedule.clone());
        cfg.sampler = SamplerConfig::new(scheme).with_seed(seed);
        let r = improve_plan(&x, &warm, &problem, &cfg, &mut SamplerState::new(cfg.sampler.clone())).unwrap();
        prop_assert_eq!(r.cost, reference_sweep(&problem, &x, &warm, &schedule, cfg.sampler.clone()));
    }

    #[test]
    fn counters_follow_the_loop_structure(
        horizon in 1usize..7, schedule in proptest::collection::vec(0usize..6, 6), seed in 0u64..100,
    ) {
        let problem = Problem::from_benchmark(CartSpring::default(), horizon);
        let x = dvector![0.3, -0.2];
        let warm = Plan::constant(&dvector![0.0], horizon).unwrap();
        let schedule = schedule[..horizon].to_vec();
        let mut cfg = SolverConfig::new(horizon, 0);
        cfg.samples = SampleSchedule::PerStep(schedule.clone());
        cfg.sampler = SamplerConfig::new(SamplerScheme::Random).with_seed(seed);
        cfg.pruning = false;
        let full = improve_plan(&x, &warm, &problem, &cfg, &mut SamplerState::new(cfg.sampler.clone())).unwrap();
        prop_assert_eq!(full.f_evals, step_count(&schedule));
        prop_assert_eq!(full.cost_evals, cost_eval_count(&schedule));
        cfg.pruning = true;
        let pruned = improve_plan(&x, &warm, &problem, &cfg, &mut SamplerState::new(cfg.sampler.clone())).unwrap();
        prop_assert!(pruned.f_evals <= full.f_evals);
        prop_assert!(pruned.cost_evals <= full.cost_evals);
        prop_assert_eq!(pruned.cost, full.cost);
        prop_assert_eq!(pruned.plan, full.plan);
    }

    #[test]
    fn lane_count_does_not_change_the_result(
        horizon in 1usize..8, n in 1usize..20, seed in 0u64..1000, lanes in 2usize..9,
    ) {
        let wmr = Wmr::default();
        let problem = Problem::from_benchmark(wmr, horizon);
        let x = dvector![0.0, 6.0, 0.0];
        let warm = Plan::constant(&dvector![0.0, 0.0], horizon).unwrap();
        let mut cfg = SolverConfig::new(horizon, n);
        cfg.sampler = SamplerConfig::new(SamplerScheme::Random).with_seed(seed);
        let serial = improve_plan(&x, &warm, &problem, &cfg, &mut SamplerState::new(cfg.sampler.clone())).unwrap();
        cfg.lanes = lanes;
        let parallel = improve_plan(&x, &warm, &problem, &cfg, &mut SamplerState::new(cfg.sampler.clone())).unwrap();
        prop_assert_eq!(serial.plan, parallel.plan);
        prop_assert_eq!(serial.cost, parallel.cost);
        prop_assert_eq!(serial.f_evals, parallel.f_evals);
        prop_assert_eq!(serial.cost_evals, parallel.cost_evals);
        prop_assert_eq!(serial.sweep_costs, parallel.sweep_costs);
    }
}
