use lptsp_core::exact::{exact_lp_tsp, exact_multi_lp_tsp};
use lptsp_core::lp::simplex::{solve, Constraint, LinearProgram, PivotRule, Relation};
use lptsp_core::lp::{
    amplify_runs, build_lp, diagnose, g_p, lp_round, multi_constant, round_samples, solve_lp, solve_lp_with,
    solve_tree_lp, theta_bound, Geometric, TimeGrid, FEASIBILITY_TOL,
};
use lptsp_core::metric::{generate_instance, InstanceKind, MetricInstance};
use lptsp_core::routes::Norm;
use proptest::prelude::*;

fn small(seed: u64, n: usize) -> MetricInstance {
    generate_instance(seed, n, InstanceKind::Line).unwrap()
}

#[test]
fn simplex_small_programs() {
    // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
    let mut lp = LinearProgram::new(2);
    lp.objective = vec![-1.0, -1.0];
    lp.add_constraint(vec![(0, 1.0), (1, 2.0)], Relation::Le, 4.0);
    lp.add_constraint(vec![(0, 3.0), (1, 1.0)], Relation::Le, 6.0);
    for rule in [PivotRule::Bland, PivotRule::Dantzig] {
        let s = solve(&lp, rule).unwrap();
        assert!((s.objective + 2.8).abs() < 1e-9, "{}", s.objective);
        assert!(lp.max_violation(&s.x) < 1e-9);
    }
    let c = Constraint {
        coeffs: vec![(0, 1.0)],
        relation: Relation::Ge,
        rhs: 1.0,
    };
    assert_eq!(c.relation, Relation::Ge);
}

#[test]
fn lp_is_a_lower_bound_single_vehicle() {
    for seed in 0..4 {
        for kind in [InstanceKind::RandomMetric, InstanceKind::Line] {
            let inst = generate_instance(seed, 5, kind).unwrap();
            for p in [1.0, 2.0] {
                let sol = solve_tree_lp(&inst, p, 1).unwrap();
                let opt = exact_lp_tsp(&inst, Norm::P(p)).unwrap().delays.objective_units(Norm::P(p));
                assert!(sol.objective <= opt * (1.0 + 1e-7), "seed {seed} p {p}: {} > {opt}", sol.objective);
                assert!((sol.recompute_objective() - sol.objective).abs() <= 1e-6 * sol.objective.max(1.0));
                sol.check_feasibility(FEASIBILITY_TOL).unwrap();
            }
        }
    }
}

#[test]
fn lp_is_a_lower_bound_two_vehicles() {
    for seed in 0..3 {
        let inst = generate_instance(seed, 5, InstanceKind::RandomMetric)
            .unwrap()
            .with_starts(vec![0, 1])
            .unwrap();
        let sol = solve_tree_lp(&inst, 2.0, 2).unwrap();
        let opt = exact_multi_lp_tsp(&inst, Norm::P(2.0)).unwrap().delays.objective_units(Norm::P(2.0));
        assert!(sol.objective <= opt * (1.0 + 1e-7));
    }
}

#[test]
fn breakpoint_grid_is_exact() {
    for seed in 0..3 {
        let inst = small(seed, 4);
        for p in [1.0, 2.0] {
            let full = TimeGrid::integer_range(&inst, 1, 1.0).unwrap();
            let a = solve_lp(&build_lp(&inst, p, 1, full, 1.0).unwrap()).unwrap().objective;
            let b = solve_tree_lp(&inst, p, 1).unwrap().objective;
            assert!((a - b).abs() <= 1e-6 * a.max(1.0), "seed {seed} p {p}: {a} vs {b}");
        }
    }
}

#[test]
fn geometric_points_do_not_change_the_optimum() {
    let inst = small(5, 5);
    let geo = Geometric::from_offset(&inst, 2.0, 0.3).unwrap();
    let bp = TimeGrid::breakpoints(&inst, 1, 1.0).unwrap();
    let joint = bp.clone().with_geometric(&geo);
    assert!(joint.times[0].len() > bp.times[0].len());
    let a = solve_lp(&build_lp(&inst, 2.0, 1, bp, 1.0).unwrap()).unwrap().objective;
    let b = solve_lp(&build_lp(&inst, 2.0, 1, joint, 1.0).unwrap()).unwrap().objective;
    assert!((a - b).abs() <= 1e-6 * a.max(1.0));
}

#[test]
fn pivot_rules_agree() {
    let inst = generate_instance(2, 5, InstanceKind::RandomMetric).unwrap();
    let grid = TimeGrid::breakpoints(&inst, 1, 1.0).unwrap();
    let model = build_lp(&inst, 2.0, 1, grid, 1.0).unwrap();
    let a = solve_lp_with(&model, PivotRule::Bland).unwrap().objective;
    let b = solve_lp_with(&model, PivotRule::Dantzig).unwrap().objective;
    assert!((a - b).abs() <= 1e-6 * a.max(1.0));
}

#[test]
fn rounding_runs_are_valid_and_reproducible() {
    let inst = generate_instance(8, 6, InstanceKind::RandomMetric).unwrap();
    let sol = solve_tree_lp(&inst, 2.0, 1).unwrap();
    let geo = Geometric::from_offset(&inst, 2.5, 0.2).unwrap();
    let a = lp_round(&sol, &inst, geo, 3).unwrap();
    let b = lp_round(&sol, &inst, geo, 3).unwrap();
    assert_eq!(a.delays, b.delays);
    for pick in &a.picks {
        assert!(pick.walk_length as f64 <= 2.0 * sol.eta * pick.budget * (1.0 + 1e-9));
    }
    let mut seen: Vec<usize> = a.routes.routes.concat();
    seen.sort_unstable();
    assert_eq!(seen, (0..6).collect::<Vec<_>>());

    let runs = round_samples(&sol, &inst, 2.5, 16, 11, None).unwrap();
    let again = round_samples(&sol, &inst, 2.5, 16, 11, None).unwrap();
    assert!(runs.iter().zip(&again).all(|(x, y)| x.delays == y.delays));
    let amp = amplify_runs(&sol, &inst, 2.5, 16, 11, Norm::P(2.0)).unwrap();
    let best = runs.iter().map(|r| r.delays.norm(Norm::P(2.0))).fold(f64::INFINITY, f64::min);
    assert_eq!(amp.best_objective, best);
}

#[test]
fn diagnostics_shape() {
    let inst = generate_instance(8, 5, InstanceKind::RandomMetric).unwrap();
    let sol = solve_tree_lp(&inst, 2.0, 1).unwrap();
    let geo = Geometric::from_offset(&inst, 2.5, 0.5).unwrap();
    let d = diagnose(&sol, &inst, geo, 400, 1).unwrap();
    assert_eq!(d.p_hat.len(), 5);
    for row in &d.p_hat {
        // Every vertex is covered by the last iteration and probabilities never increase.
        assert_eq!(*row.last().unwrap(), 0.0);
        assert!(row.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
    assert_eq!(d.check_recurrence(false, 3.0).violations, 0);
}

#[test]
fn sparse_export() {
    let inst = small(1, 4);
    let sol = solve_tree_lp(&inst, 1.0, 1).unwrap();
    let v = sol.to_sparse_json();
    assert!(v["z"].as_array().unwrap().iter().all(|z| z["value"].as_f64().unwrap() > 0.0));
    assert_eq!(v["starts"][0].as_u64().unwrap() as usize, inst.start());
}

#[test]
fn constants() {
    let m = multi_constant(2.0).unwrap();
    assert!((m.value - 119.2065).abs() < 1e-3, "{}", m.value);
    assert!((m.c_star - 1.3844).abs() < 1e-3);
    assert!(m.c_star < std::f64::consts::E.sqrt());
    // c = 1.834 lies outside (1, e^{1/2}), so it cannot be the minimiser.
    assert!(1.834 > std::f64::consts::E.sqrt());
    let (bound, inner) = theta_bound(1.0);
    assert!((inner - 1.26802).abs() < 1e-5);
    assert!(bound <= 17.94);
    assert!(g_p(2.0, 1.3) > m.value && g_p(2.0, 1.5) > m.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lp_lower_bound_property(seed in any::<u64>(), n in 2usize..6, p in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0)]) {
        let inst = generate_instance(seed, n, InstanceKind::RandomMetric).unwrap();
        let sol = solve_tree_lp(&inst, p, 1).unwrap();
        let opt = exact_lp_tsp(&inst, Norm::P(p)).unwrap().delays.objective_units(Norm::P(p));
        prop_assert!(sol.objective <= opt * (1.0 + 1e-7) + 1e-7);
        prop_assert!(sol.objective >= 0.0);
    }
}
