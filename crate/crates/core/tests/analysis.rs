use lptsp_core::analysis::{
    allnorm_lower_bound, cross_check_optima, emit_report, simple_instance_delays, simple_lower_bound,
    turnpoint_candidates, NormGrid, ReportFormat,
};
use lptsp_core::instances;
use lptsp_core::metric::MetricInstance;
use lptsp_core::routes::Norm;
use proptest::prelude::*;
use sha2::{Digest, Sha256};

#[test]
fn fig1_candidates_include_both_optima() {
    let inst = instances::fig1(1000).unwrap();
    let c = turnpoint_candidates(&inst).unwrap();
    assert_eq!(c.len(), 3);
    assert_eq!(c[0].route.order, vec![0, 1, 2, 3]);
    assert_eq!(c[2].route.order, vec![0, 2, 3, 1]);
    let r = allnorm_lower_bound(&inst, &NormGrid::default()).unwrap();
    assert!(r.min_max > 1.0);
    let csv = emit_report(&r, ReportFormat::Csv);
    assert_eq!(csv.lines().count(), 1 + 3 * r.norms.len());
}

#[test]
fn appendix_report() {
    let inst = instances::appendix_a();
    let r = allnorm_lower_bound(&inst, &NormGrid::default()).unwrap();
    assert_eq!(r.candidates.len(), 149);
    assert!((1.77..=1.80).contains(&r.min_max), "{}", r.min_max);
    for c in &r.candidates {
        assert!(c.ratios.iter().all(|&x| x >= 1.0 - 1e-9));
    }
    let csv = emit_report(&r, ReportFormat::Csv);
    let digest = hex::encode(Sha256::digest(csv.as_bytes()));
    assert_eq!(digest, GOLDEN_APPENDIX_CSV);
}

const GOLDEN_APPENDIX_CSV: &str = "0d658b42d75b949bace3528d403bf3ac9ec23299a2d3792e5092a1067632619e";

#[test]
fn norm_grid_is_configurable() {
    let inst = instances::appendix_a();
    let small: NormGrid = "1,inf".parse().unwrap();
    let r = allnorm_lower_bound(&inst, &small).unwrap();
    let full = allnorm_lower_bound(&inst, &NormGrid::default()).unwrap();
    assert!(r.min_max <= full.min_max + 1e-12);
    assert!(NormGrid::default().is_standard());
}

#[test]
fn json_report_mirrors_struct() {
    let inst = instances::fig1(1000).unwrap();
    let r = allnorm_lower_bound(&inst, &NormGrid::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&emit_report(&r, ReportFormat::Json)).unwrap();
    assert_eq!(v["candidates"].as_array().unwrap().len(), 3);
    assert!((v["min_max"].as_f64().unwrap() - r.min_max).abs() < 1e-15);
}

#[test]
fn simple_bound_values() {
    let b = simple_lower_bound(2100, 1e-3).unwrap();
    assert!(b.min >= 1.67);
    // Independent evaluation of the displayed ratios with b^n computed directly.
    let bb: f64 = 1.001;
    let bn = bb.powi(2100);
    let r_inf = (2.0 * bn - 1.0) / (bn + 1.0);
    let q = bb.powi(2101) / (bb - 1.0);
    let n = 2100.0;
    let r_1 = (1.0 + 2.0 * n + q - n - 1.0) / (q - n - 1.0 + 2.0 * bn - 1.0);
    assert!((b.r_inf - r_inf).abs() < 1e-12);
    assert!((b.r_1 - r_1).abs() < 1e-12);
    assert!((b.min - 1.672403).abs() < 1e-6, "{}", b.min);
    assert!(simple_lower_bound(1_000_000, 1e-3).unwrap().r_inf > 1.99);
    assert!(simple_lower_bound(0, 1e-3).is_err());
    assert!(simple_lower_bound(3, 0.0).is_err());
}

#[test]
fn simple_bound_matches_delay_vectors() {
    for n in 1..=20 {
        for eps in [1e-3, 0.1, 0.5, 2.0] {
            let b = simple_lower_bound(n, eps).unwrap();
            let (rf, lf) = simple_instance_delays(n, eps);
            let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            let sum = |v: &[f64]| v.iter().sum::<f64>();
            assert!((max(&rf) / max(&lf) - b.r_inf).abs() < 1e-9);
            assert!((sum(&lf) / sum(&rf) - b.r_1_exact).abs() < 1e-9);
        }
    }
}

fn one_left_instance(left: i64, right: Vec<i64>) -> MetricInstance {
    let mut pos = vec![0, -left];
    pos.extend(right);
    MetricInstance::line("one-left", pos, vec![0]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn candidates_attain_exact_optima(left in 1i64..50, right in prop::collection::vec(0i64..60, 1..8)) {
        let inst = one_left_instance(left, right);
        let grid: NormGrid = "1,1.5,2,3,4,8,inf".parse().unwrap();
        for (nrm, cand, exact) in cross_check_optima(&inst, &grid).unwrap() {
            prop_assert!((cand - exact).abs() <= 1e-9 * exact.max(1.0), "{nrm}: candidates {cand} vs exact {exact}");
        }
    }

    #[test]
    fn min_max_grows_with_the_grid(left in 1i64..50, right in prop::collection::vec(0i64..60, 1..8), extra in 1.0f64..20.0) {
        let inst = one_left_instance(left, right);
        let base = NormGrid::new(vec![Norm::P(1.0), Norm::Inf]).unwrap();
        let more = NormGrid::new(vec![Norm::P(1.0), Norm::Inf, Norm::P(extra)]).unwrap();
        let a = allnorm_lower_bound(&inst, &base).unwrap().min_max;
        let b = allnorm_lower_bound(&inst, &more).unwrap().min_max;
        prop_assert!(a <= b + 1e-12);
    }
}
