//! Named instances used by the examples and the acceptance suite.

use crate::error::{Error, Result};
use crate::metric::{MetricInstance, Scale};

const APPENDIX_A: &str = include_str!("../data/appendix_a.json");
const FIG1: &str = include_str!("../data/fig1.json");

/// Four points on a line: S = 0, A = -(1+ε), B = 1, C = 2, with ε = 1/den.
///
/// Distances are stored in units of 1/den, so S..A is `den + 1` units.
/// Vertex order is S, A, B, C.
pub fn fig1(den: u64) -> Result<MetricInstance> {
    if den == 0 {
        return Err(Error::invalid("den must be positive"));
    }
    let d = den as i64;
    Ok(MetricInstance::line("fig1", vec![0, -(d + 1), d, 2 * d], vec![0])?
        .with_scale(Scale::new(1, den)?))
}

/// The shipped copy of the four-point example (ε = 1/1000).
pub fn fig1_shipped() -> MetricInstance {
    MetricInstance::from_json_str(FIG1).expect("shipped fig1 instance parses")
}

/// The 150-point line instance, starting at x = 200.
pub fn appendix_a() -> MetricInstance {
    MetricInstance::from_json_str(APPENDIX_A).expect("shipped appendix instance parses")
}

/// Start at 0 and points 1, 2, 4, ..., 2^(n-1).
pub fn powers_of_two(n: usize) -> Result<MetricInstance> {
    if n == 0 || n > 62 {
        return Err(Error::invalid("need 1 <= n <= 62"));
    }
    let mut pos = vec![0i64];
    pos.extend((0..n).map(|i| 1i64 << i));
    MetricInstance::line(format!("pow2-{n}"), pos, vec![0])
}

/// Look up a built-in instance by name.
pub fn builtin(name: &str) -> Option<MetricInstance> {
    match name {
        "fig1" => Some(fig1_shipped()),
        "appendixA" | "appendix_a" => Some(appendix_a()),
        "pow2" => powers_of_two(12).ok(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_fig1_matches_constructor() {
        assert_eq!(fig1_shipped().checksum(), fig1(1000).unwrap().checksum());
    }

    #[test]
    fn appendix_shape() {
        let a = appendix_a();
        assert_eq!(a.n, 150);
        assert_eq!(a.start(), 1);
        assert_eq!(a.d(0, 1), 200);
    }
}
