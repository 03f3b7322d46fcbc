//! Fixtures shared by the benchmarks.

use lptsp_core::{generate_instance, InstanceKind, MetricInstance};

pub fn random_metric(n: usize) -> MetricInstance {
    generate_instance(7, n, InstanceKind::RandomMetric).expect("generator accepts n >= 1")
}

pub fn line(n: usize) -> MetricInstance {
    generate_instance(7, n, InstanceKind::Line).expect("generator accepts n >= 1")
}
