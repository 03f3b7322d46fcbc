use lptsp_core::exact::{exact_line_lp_tsp, exact_lp_tsp};
use lptsp_core::metric::{generate_instance, InstanceKind, MetricInstance};
use lptsp_core::routes::{visit_times, Norm};
use lptsp_core::segmented::{
    implied_eps, loss_bound, opt_prime_ratios, reduce_lp_tsp, schedule, segmented_feasible, verify_schedule,
    SegmentedSpec,
};
use proptest::prelude::*;

fn orders(rest: &mut Vec<usize>, at: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if at == rest.len() {
        return f(rest);
    }
    for i in at..rest.len() {
        rest.swap(at, i);
        let hit = orders(rest, at + 1, f);
        rest.swap(at, i);
        if hit {
            return true;
        }
    }
    false
}

fn brute_force(inst: &MetricInstance, spec: &[(usize, u64)]) -> bool {
    let s = inst.start();
    let mut rest: Vec<usize> = (0..inst.n).filter(|&v| v != s).collect();
    orders(&mut rest, 0, &mut |o| {
        let mut times = vec![0u64];
        let (mut t, mut prev) = (0, s);
        for &v in o {
            t += inst.d(prev, v);
            prev = v;
            times.push(t);
        }
        spec.iter().all(|&(c, d)| times[c - 1] <= d)
    })
}

fn kind() -> impl Strategy<Value = InstanceKind> {
    prop_oneof![Just(InstanceKind::RandomMetric), Just(InstanceKind::Line), Just(InstanceKind::Tree)]
}

#[test]
fn implied_grid() {
    for k in 1..6 {
        assert!(((1.0 + implied_eps(k)).powi(k as i32) - 3.0).abs() < 1e-12);
    }
    assert!((loss_bound(1.0, 2, 1.0) - 4.0).abs() < 1e-12);
}

#[test]
fn reduction_schedule_is_consistent() {
    for seed in 0..6 {
        let inst = generate_instance(seed, 7, InstanceKind::Line).unwrap();
        for k in [1, 2, 3] {
            let out = reduce_lp_tsp(&inst, Norm::P(2.0), k).unwrap();
            let tours = schedule(&inst, &out.table).unwrap();
            verify_schedule(&inst, &out.table, &tours).unwrap();
            assert!(out.objective <= out.bound * (1.0 + 1e-9));
            let opt = exact_line_lp_tsp(&inst, Norm::P(2.0)).unwrap().objective;
            assert!(out.objective >= opt * (1.0 - 1e-12));
            assert_eq!(out.per_residue.len(), k);
        }
    }
}

#[test]
fn reduction_on_a_general_metric() {
    let inst = generate_instance(4, 6, InstanceKind::RandomMetric).unwrap();
    let out = reduce_lp_tsp(&inst, Norm::P(1.0), 2).unwrap();
    let opt = exact_lp_tsp(&inst, Norm::P(1.0)).unwrap().objective;
    assert!(out.objective >= opt * (1.0 - 1e-12));
    assert!(out.objective <= 2.0 * opt);
    assert!(reduce_lp_tsp(&inst, Norm::Inf, 2).is_err());
    assert!(reduce_lp_tsp(&inst, Norm::P(1.0), 0).is_err());
}

#[test]
fn shifted_optimum_respects_the_loss_bound() {
    for seed in 0..8 {
        let inst = generate_instance(seed, 8, InstanceKind::RandomMetric).unwrap();
        for p in [1.0, 2.0] {
            let opt = exact_lp_tsp(&inst, Norm::P(p)).unwrap();
            for k in [2, 3, 6] {
                let r = opt_prime_ratios(&inst, &opt.route, p, k);
                let mean = r.iter().sum::<f64>() / k as f64;
                assert!(r.iter().all(|&x| x >= 1.0 - 1e-12));
                assert!(mean <= loss_bound(p, k, implied_eps(k)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn feasibility_matches_brute_force(
        seed in any::<u64>(),
        n in 2usize..8,
        kind in kind(),
        raw in prop::collection::vec((1usize..8, 0u64..400), 1..4),
    ) {
        let inst = generate_instance(seed, n, kind).unwrap();
        let mut spec: Vec<(usize, u64)> = raw.into_iter().map(|(c, d)| (1 + c % n, d)).collect();
        spec.sort_unstable();
        spec.dedup_by_key(|s| s.0);
        for i in 1..spec.len() {
            spec[i].1 = spec[i].1.max(spec[i - 1].1);
        }
        let got = segmented_feasible(&inst, &SegmentedSpec::new(spec.clone()).unwrap()).unwrap();
        prop_assert_eq!(got.is_some(), brute_force(&inst, &spec));
        if let Some(route) = got {
            let t = visit_times(&route, &inst).profile();
            prop_assert!(spec.iter().all(|&(c, d)| t[c - 1] <= d));
        }
    }
}
