//! One test per acceptance criterion; each prints a PASS/FAIL line.

use std::io::Write;

use lptsp_core::certify;

fn check(id: usize) {
    let outcome = certify::run(id).expect("known criterion");
    // Written to the raw handle so the line shows up without --nocapture.
    let _ = writeln!(std::io::stderr(), "{}", outcome.line());
    assert!(outcome.passed, "{}", outcome.line());
}

#[test]
fn criterion_01_four_point_example() {
    check(1);
}

#[test]
fn criterion_02_two_route_lower_bound() {
    check(2);
}

#[test]
fn criterion_03_line_instance_150_points() {
    check(3);
}

#[test]
fn criterion_04_all_norm_eight_certificate() {
    check(4);
}

#[test]
fn criterion_05_powers_of_two_line() {
    check(5);
}

#[test]
fn criterion_06_l2_covering_expectation() {
    check(6);
}

#[test]
fn criterion_07_lp_covering_ratios() {
    check(7);
}

#[test]
fn criterion_08_closed_form_constants() {
    check(8);
}

#[test]
fn criterion_09_tree_lp_and_rounding() {
    check(9);
}

#[test]
fn criterion_10_coverage_recurrences() {
    check(10);
}

#[test]
fn criterion_11_segmented_and_reduction() {
    check(11);
}

#[test]
fn criterion_12_submajorization_norm_bounds() {
    check(12);
}
