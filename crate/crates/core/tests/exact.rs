use lptsp_core::exact::{
    enumerate_lp_tsp, exact_line_lp_tsp, exact_lp_tsp, exact_multi_lp_tsp, k_path_profile, min_k_tree,
};
use lptsp_core::instances;
use lptsp_core::ktree::{good_k_tree, good_k_trees, heuristic_k_tree, TreeProvider};
use lptsp_core::metric::{generate_instance, InstanceKind, MetricInstance};
use lptsp_core::routes::Norm;
use proptest::prelude::*;

/// All orders of `rest` by recursive swapping.
fn for_each_order(rest: &mut Vec<usize>, at: usize, f: &mut impl FnMut(&[usize])) {
    if at == rest.len() {
        f(rest);
        return;
    }
    for i in at..rest.len() {
        rest.swap(at, i);
        for_each_order(rest, at + 1, f);
        rest.swap(at, i);
    }
}

fn norm_of_order(inst: &MetricInstance, start: usize, order: &[usize], norm: Norm) -> f64 {
    let (mut t, mut prev) = (0u64, start);
    let mut times = vec![0.0];
    for &v in order {
        t += inst.d(prev, v);
        prev = v;
        times.push(inst.scale.to_original(t as f64));
    }
    norm.eval(&times)
}

fn brute_force(inst: &MetricInstance, norm: Norm) -> f64 {
    let s = inst.start();
    let mut rest: Vec<usize> = (0..inst.n).filter(|&v| v != s).collect();
    let mut best = f64::INFINITY;
    for_each_order(&mut rest, 0, &mut |o| best = best.min(norm_of_order(inst, s, o, norm)));
    best
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn fig1_routes() {
    let inst = instances::fig1(1000).unwrap();
    assert_eq!(exact_lp_tsp(&inst, Norm::P(2.0)).unwrap().route.order, vec![0, 1, 2, 3]);
    let l1 = exact_lp_tsp(&inst, Norm::P(1.0)).unwrap();
    assert_eq!(l1.route.order, vec![0, 2, 3, 1]);
    assert_eq!(l1.delays.per_vertex.iter().sum::<u64>(), 8001);
    assert_eq!(exact_line_lp_tsp(&inst, Norm::P(2.0)).unwrap().route.order, vec![0, 1, 2, 3]);
    assert_eq!(exact_line_lp_tsp(&inst, Norm::P(1.0)).unwrap().route.order, vec![0, 2, 3, 1]);
}

#[test]
fn fig1_l2_tends_to_sqrt_26() {
    let mut prev = f64::INFINITY;
    for den in [10u64, 100, 1000, 100_000] {
        let v = exact_lp_tsp(&instances::fig1(den).unwrap(), Norm::P(2.0)).unwrap().objective;
        assert!(v < prev && v > 26f64.sqrt());
        prev = v;
    }
    assert!((prev - 26f64.sqrt()).abs() < 1e-3);
}

#[test]
fn single_vertex() {
    let inst = generate_instance(1, 1, InstanceKind::RandomMetric).unwrap();
    let s = exact_lp_tsp(&inst, Norm::P(2.0)).unwrap();
    assert_eq!(s.route.order, vec![0]);
    assert_eq!(s.objective, 0.0);
}

#[test]
fn appendix_line_l1_optimum() {
    let inst = instances::appendix_a();
    let opt = exact_line_lp_tsp(&inst, Norm::P(1.0)).unwrap();
    assert_eq!(opt.delays.per_vertex.iter().sum::<u64>(), GOLDEN_APPENDIX_L1);
}

const GOLDEN_APPENDIX_L1: u64 = 67044;

#[test]
fn exact_k_trees_are_no_longer_than_k_paths() {
    for seed in 0..10 {
        let inst = generate_instance(seed, 8, InstanceKind::RandomMetric).unwrap();
        let paths = k_path_profile(&inst, inst.start()).unwrap();
        for (k, tree) in good_k_trees(&inst, inst.start(), TreeProvider::Exact).unwrap().iter().enumerate() {
            tree.validate(&inst).unwrap();
            assert_eq!(tree.size(), k + 1);
            assert!(tree.total_length <= paths[k]);
            assert_eq!(tree.doubled_walk().len(), 2 * tree.size() - 1);
        }
    }
}

#[test]
fn heuristic_trees_are_valid() {
    for seed in 0..10 {
        let inst = generate_instance(seed, 10, InstanceKind::RandomMetric).unwrap();
        for k in 1..=10 {
            let h = heuristic_k_tree(&inst, inst.start(), k);
            h.validate(&inst).unwrap();
            assert!(h.size() >= k);
            assert!(h.vertices.contains(&inst.start()));
            let exact = good_k_tree(&inst, inst.start(), k, TreeProvider::Exact).unwrap();
            assert!(h.total_length >= exact.total_length);
        }
    }
}

/// Kruskal on `vertices`.
fn kruskal(inst: &MetricInstance, vertices: &[usize]) -> u64 {
    let mut edges = Vec::new();
    for (a, &u) in vertices.iter().enumerate() {
        for &v in &vertices[a + 1..] {
            edges.push((inst.d(u, v), u, v));
        }
    }
    edges.sort_unstable();
    let mut comp: Vec<usize> = (0..inst.n).collect();
    fn find(c: &mut Vec<usize>, x: usize) -> usize {
        if c[x] != x {
            let r = find(c, c[x]);
            c[x] = r;
        }
        c[x]
    }
    let mut total = 0;
    for (w, u, v) in edges {
        let (a, b) = (find(&mut comp, u), find(&mut comp, v));
        if a != b {
            comp[a] = b;
            total += w;
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn held_karp_matches_brute_force(seed in any::<u64>(), n in 1usize..8, p in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(f64::INFINITY)]) {
        let inst = generate_instance(seed, n, InstanceKind::RandomMetric).unwrap();
        let norm = if p.is_finite() { Norm::P(p) } else { Norm::Inf };
        let want = brute_force(&inst, norm);
        let dp = exact_lp_tsp(&inst, norm).unwrap();
        prop_assert!(close(dp.objective, want), "dp {} vs brute {}", dp.objective, want);
        let en = enumerate_lp_tsp(&inst, norm).unwrap();
        prop_assert!(close(en.objective, want));
    }

    #[test]
    fn line_dp_matches_held_karp(seed in any::<u64>(), n in 1usize..10, p in prop_oneof![Just(1.0), Just(2.0), Just(2.5), Just(f64::INFINITY)]) {
        let inst = generate_instance(seed, n, InstanceKind::Line).unwrap();
        let norm = if p.is_finite() { Norm::P(p) } else { Norm::Inf };
        let line = exact_line_lp_tsp(&inst, norm).unwrap();
        let general = exact_lp_tsp(&inst, norm).unwrap();
        prop_assert!(close(line.objective, general.objective), "line {} vs general {}", line.objective, general.objective);
    }

    #[test]
    fn multi_vehicle_matches_brute_force(seed in any::<u64>(), n in 2usize..7, p in prop_oneof![Just(1.0), Just(2.0)]) {
        let base = generate_instance(seed, n, InstanceKind::RandomMetric).unwrap();
        let inst = base.with_starts(vec![0, 1]).unwrap();
        let norm = Norm::P(p);
        let got = exact_multi_lp_tsp(&inst, norm).unwrap();
        // Brute force: every assignment of the other vertices, best order per vehicle.
        let rest: Vec<usize> = (2..n).collect();
        let mut best = f64::INFINITY;
        for code in 0..(1usize << rest.len()) {
            let mut parts = [Vec::new(), Vec::new()];
            for (j, &v) in rest.iter().enumerate() {
                parts[(code >> j) & 1].push(v);
            }
            let mut total = 0.0;
            for (i, part) in parts.iter_mut().enumerate() {
                let mut b = f64::INFINITY;
                for_each_order(part, 0, &mut |o| b = b.min(norm_of_order(&inst, i, o, norm).powf(p)));
                total += b;
            }
            best = best.min(total.powf(1.0 / p));
        }
        prop_assert!(close(got.objective, best), "exact {} vs brute {}", got.objective, best);
    }

    #[test]
    fn k_path_profile_matches_brute_force(seed in any::<u64>(), n in 1usize..8) {
        let inst = generate_instance(seed, n, InstanceKind::RandomMetric).unwrap();
        let s = inst.start();
        let profile = k_path_profile(&inst, s).unwrap();
        let mut want = vec![u64::MAX; n];
        want[0] = 0;
        let mut rest: Vec<usize> = (0..n).filter(|&v| v != s).collect();
        for_each_order(&mut rest, 0, &mut |o| {
            let (mut t, mut prev) = (0u64, s);
            for (k, &v) in o.iter().enumerate() {
                t += inst.d(prev, v);
                prev = v;
                want[k + 1] = want[k + 1].min(t);
            }
        });
        prop_assert_eq!(profile, want);
    }

    #[test]
    fn min_k_tree_matches_subset_kruskal(seed in any::<u64>(), n in 1usize..9, k in 1usize..9) {
        let inst = generate_instance(seed, n, InstanceKind::RandomMetric).unwrap();
        let k = k.min(n);
        let s = inst.start();
        let mut want = u64::MAX;
        for mask in 0..(1usize << n) {
            if mask & (1 << s) == 0 || mask.count_ones() as usize != k {
                continue;
            }
            let vs: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
            want = want.min(kruskal(&inst, &vs));
        }
        prop_assert_eq!(min_k_tree(&inst, s, k).unwrap().total_length, want);
    }
}
