//! Instance-size caps for the exponential solvers.
//!
//! Defaults can be overridden with `LPTSP_WORK_CAP`, either as a single number
//! (applied to every vertex-count cap) or as `key=value` pairs separated by commas,
//! e.g. `LPTSP_WORK_CAP=exact=14,lp=9`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Limits {
    /// Held-Karp style Pareto DP.
    pub exact: usize,
    /// Brute-force permutation enumeration.
    pub permutation: usize,
    /// Min-k-path profile and good-k-tree certification.
    pub k_path: usize,
    /// Exact min-k-tree (subset MST table).
    pub k_tree: usize,
    /// Exact multi-vehicle enumeration.
    pub multi: usize,
    pub multi_vehicles: usize,
    /// Time-indexed tree LP.
    pub lp: usize,
    pub lp_vehicles: usize,
    /// Deadline-gated segmented-TSP oracle.
    pub segmented: usize,
    /// Labels kept by the line DP for general p.
    pub line_labels: usize,
    /// DP cells expanded by the segmented reduction.
    pub reduction_work: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            exact: 12,
            permutation: 9,
            k_path: 16,
            k_tree: 14,
            multi: 8,
            multi_vehicles: 3,
            lp: 7,
            lp_vehicles: 2,
            segmented: 14,
            line_labels: 4_000_000,
            reduction_work: 50_000_000,
        }
    }
}

static CURRENT: OnceLock<Limits> = OnceLock::new();

impl Limits {
    /// Process-wide limits: defaults merged with `LPTSP_WORK_CAP` (read once).
    pub fn current() -> &'static Limits {
        CURRENT.get_or_init(|| {
            let mut limits = Limits::default();
            if let Ok(spec) = std::env::var("LPTSP_WORK_CAP") {
                if let Err(e) = limits.apply(&spec) {
                    eprintln!("ignoring LPTSP_WORK_CAP: {e}");
                }
            }
            limits
        })
    }

    /// Apply an override string in the `LPTSP_WORK_CAP` format.
    pub fn apply(&mut self, spec: &str) -> Result<()> {
        let spec = spec.trim();
        if let Ok(n) = spec.parse::<usize>() {
            self.exact = n;
            self.permutation = n;
            self.k_path = n;
            self.k_tree = n;
            self.multi = n;
            self.lp = n;
            self.segmented = n;
            return Ok(());
        }
        for part in spec.split(',').filter(|s| !s.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value, got '{part}'")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad number in '{part}'")))?;
            let slot = match key.trim() {
                "exact" => &mut self.exact,
                "permutation" => &mut self.permutation,
                "k_path" => &mut self.k_path,
                "k_tree" => &mut self.k_tree,
                "multi" => &mut self.multi,
                "multi_vehicles" => &mut self.multi_vehicles,
                "lp" => &mut self.lp,
                "lp_vehicles" => &mut self.lp_vehicles,
                "segmented" => &mut self.segmented,
                "line_labels" => &mut self.line_labels,
                "reduction_work" => &mut self.reduction_work,
                other => return Err(Error::invalid(format!("unknown cap '{other}'"))),
            };
            *slot = value;
        }
        Ok(())
    }
}

pub(crate) fn check(what: &'static str, actual: usize, limit: usize) -> Result<()> {
    if actual > limit {
        Err(Error::Capacity {
            what,
            actual,
            limit,
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_override() {
        let mut l = Limits::default();
        l.apply("10").unwrap();
        assert_eq!(l.exact, 10);
        assert_eq!(l.lp, 10);
        assert_eq!(l.line_labels, Limits::default().line_labels);
    }

    #[test]
    fn keyed_override() {
        let mut l = Limits::default();
        l.apply("exact=13, lp_vehicles=3").unwrap();
        assert_eq!(l.exact, 13);
        assert_eq!(l.lp_vehicles, 3);
        assert!(l.apply("bogus=1").is_err());
        assert!(l.apply("exact").is_err());
    }
}
