//! Lower-bound constructions for All-Norm TSP on the line and their reports.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::exact_line_lp_tsp;
use crate::metric::{Geometry, MetricInstance};
use crate::routes::{visit_times, Norm, Route};

/// Norms against which a single route is compared.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormGrid {
    pub norms: Vec<Norm>,
}

impl Default for NormGrid {
    fn default() -> Self {
        let ps = [1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0];
        let mut norms: Vec<Norm> = ps.iter().map(|&p| Norm::P(p)).collect();
        norms.push(Norm::Inf);
        NormGrid { norms }
    }
}

impl NormGrid {
    pub fn new(norms: Vec<Norm>) -> Result<NormGrid> {
        if norms.is_empty() {
            return Err(Error::invalid("norm grid must not be empty"));
        }
        Ok(NormGrid { norms })
    }

    /// True when the grid holds both `L_1` and `L_∞`.
    pub fn is_standard(&self) -> bool {
        self.norms.contains(&Norm::P(1.0)) && self.norms.contains(&Norm::Inf)
    }
}

impl FromStr for NormGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<NormGrid> {
        let norms = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Norm>>>()?;
        NormGrid::new(norms)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub id: usize,
    /// Number of right-side vertices visited before the detour to the left.
    pub turn: usize,
    pub route: Route,
}

fn line_positions(inst: &MetricInstance) -> Result<&[i64]> {
    match &inst.geometry {
        Geometry::Line { positions } => Ok(positions),
        _ => Err(Error::invalid("instance must have line geometry")),
    }
}

/// Routes that sweep right through the first `r` right-side vertices, go to the
/// single left vertex, and then finish the right side, for `r = 0..=n_right`.
pub fn turnpoint_candidates(inst: &MetricInstance) -> Result<Vec<Candidate>> {
    let pos = line_positions(inst)?;
    let s = inst.start();
    let left: Vec<usize> = (0..inst.n).filter(|&v| pos[v] < pos[s]).collect();
    if left.len() != 1 {
        return Err(Error::invalid(format!(
            "expected exactly one vertex left of the start, found {}",
            left.len()
        )));
    }
    let mut right: Vec<usize> = (0..inst.n).filter(|&v| v != s && pos[v] >= pos[s]).collect();
    right.sort_by_key(|&v| (pos[v], v));
    (0..=right.len())
        .map(|r| {
            let mut order = vec![s];
            order.extend(&right[..r]);
            order.push(left[0]);
            order.extend(&right[r..]);
            Ok(Candidate {
                id: r,
                turn: r,
                route: Route::new(order, inst)?,
            })
        })
        .collect()
}

/// Visit times by moving along the line coordinates directly.
pub fn simulate_line(inst: &MetricInstance, route: &Route) -> Result<Vec<u64>> {
    let pos = line_positions(inst)?;
    let mut times = vec![0u64; inst.n];
    let mut here = pos[route.start()];
    let mut t = 0u64;
    for &v in &route.order[1..] {
        t += here.abs_diff(pos[v]);
        here = pos[v];
        times[v] = t;
    }
    Ok(times)
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateRatios {
    pub id: usize,
    pub turn: usize,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub instance: String,
    pub norms: Vec<Norm>,
    /// Best candidate norm for each grid norm, original units.
    pub optima: Vec<f64>,
    pub candidates: Vec<CandidateRatios>,
    /// `min` over candidates of `max` over norms.
    pub min_max: f64,
    pub argmin: Option<usize>,
}

/// Ratios of every turnpoint candidate against the best candidate per norm.
pub fn allnorm_lower_bound(inst: &MetricInstance, grid: &NormGrid) -> Result<RatioReport> {
    let candidates = turnpoint_candidates(inst)?;
    for c in &candidates {
        let sim = simulate_line(inst, &c.route)?;
        if sim != visit_times(&c.route, inst).per_vertex {
            return Err(Error::structural(format!("candidate {} disagrees with line simulation", c.id)));
        }
    }
    Ok(ratio_report(inst, grid, &candidates))
}

/// Report over an arbitrary candidate family.
pub fn ratio_report(inst: &MetricInstance, grid: &NormGrid, candidates: &[Candidate]) -> RatioReport {
    let values: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|c| {
            let d = visit_times(&c.route, inst);
            grid.norms.iter().map(|&nrm| d.norm(nrm)).collect()
        })
        .collect();
    let optima: Vec<f64> = (0..grid.norms.len())
        .map(|q| values.iter().map(|v| v[q]).fold(f64::INFINITY, f64::min))
        .collect();
    let rows: Vec<CandidateRatios> = candidates
        .iter()
        .zip(&values)
        .map(|(c, v)| {
            let ratios: Vec<f64> = v
                .iter()
                .zip(&optima)
                .map(|(&x, &o)| if o > 0.0 { x / o } else if x == 0.0 { 1.0 } else { f64::INFINITY })
                .collect();
            let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
            CandidateRatios {
                id: c.id,
                turn: c.turn,
                ratios,
                max_ratio,
            }
        })
        .collect();
    let best = rows.iter().min_by(|a, b| a.max_ratio.total_cmp(&b.max_ratio));
    RatioReport {
        instance: inst.name.clone(),
        norms: grid.norms.clone(),
        optima,
        min_max: best.map_or(1.0, |b| b.max_ratio),
        argmin: best.map(|b| b.id),
        candidates: rows,
    }
}

/// Per-norm candidate optimum next to the exact line-DP optimum.
pub fn cross_check_optima(inst: &MetricInstance, grid: &NormGrid) -> Result<Vec<(Norm, f64, f64)>> {
    let report = allnorm_lower_bound(inst, grid)?;
    grid.norms
        .iter()
        .zip(&report.optima)
        .map(|(&nrm, &cand)| Ok((nrm, cand, exact_line_lp_tsp(inst, nrm)?.objective)))
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimpleBound {
    pub n: usize,
    pub eps: f64,
    /// `L_∞` ratio of the right-first route to the left-first route.
    pub r_inf: f64,
    /// `L_1` ratio of the left-first route to the right-first route, closed form
    /// with the `1/(b-1)` terms dropped.
    pub r_1: f64,
    /// The same ratio computed exactly.
    pub r_1_exact: f64,
    pub min: f64,
    pub min_exact: f64,
}

/// Two-route bound on the instance with start `0`, one point at `-1` and points
/// `b^i - 1` for `i = 1..=n`, `b = 1 + ε`.
///
/// Everything is evaluated after dividing by `b^n`, so large `n` does not overflow.
pub fn simple_lower_bound(n: usize, eps: f64) -> Result<SimpleBound> {
    if n == 0 || !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("need n >= 1 and eps > 0"));
    }
    let b = 1.0 + eps;
    let x = (-(n as f64) * b.ln()).exp(); // b^{-n}
    let nx = n as f64 * x;
    let q = b / (b - 1.0); // b^{n+1}/(b-1) after scaling
    let tail = x / (b - 1.0); // 1/(b-1) after scaling
    let r_inf = (2.0 - x) / (1.0 + x);
    let r_1 = (nx + q) / (q - nx + 2.0 - 2.0 * x);
    let r_1_exact = (nx + q - tail) / (q - nx + 2.0 - 2.0 * x - tail);
    Ok(SimpleBound {
        n,
        eps,
        r_inf,
        r_1,
        r_1_exact,
        min: r_inf.min(r_1),
        min_exact: r_inf.min(r_1_exact),
    })
}

/// Visit times of the right-first and left-first routes on the simple instance,
/// by direct simulation on real coordinates.
pub fn simple_instance_delays(n: usize, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let b = 1.0f64 + eps;
    let right: Vec<f64> = (1..=n).map(|i| b.powi(i as i32) - 1.0).collect();
    let walk = |order: &[f64]| {
        let (mut here, mut t) = (0.0f64, 0.0f64);
        let mut out = vec![0.0];
        for &x in order {
            t += (x - here).abs();
            here = x;
            out.push(t);
        }
        out
    };
    let mut rf: Vec<f64> = right.clone();
    rf.push(-1.0);
    let mut lf = vec![-1.0];
    lf.extend(&right);
    (walk(&rf), walk(&lf))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::invalid(format!("unknown format '{other}'"))),
        }
    }
}

pub fn emit_report(report: &RatioReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serialises") + "\n",
        ReportFormat::Csv => {
            let mut out = String::from("route_id,norm,ratio\n");
            for c in &report.candidates {
                for (nrm, r) in report.norms.iter().zip(&c.ratios) {
                    let _ = writeln!(out, "{},{},{:.12}", c.id, nrm, r);
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_instance_has_two_candidates() {
        let inst = MetricInstance::line("two", vec![-1, 0, 1], vec![1]).unwrap();
        assert_eq!(turnpoint_candidates(&inst).unwrap().len(), 2);
    }

    #[test]
    fn symmetric_instance_has_unit_min_max() {
        // One point each side at the same distance: both candidates are mirror images.
        let inst = MetricInstance::line("sym", vec![-1, 0, 1], vec![1]).unwrap();
        let r = allnorm_lower_bound(&inst, &NormGrid::default()).unwrap();
        assert!((r.min_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_precondition() {
        let inst = MetricInstance::line("l", vec![0, 1, 2], vec![0]).unwrap();
        assert!(turnpoint_candidates(&inst).is_err());
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = RatioReport {
            instance: "x".into(),
            norms: vec![Norm::P(1.0)],
            optima: vec![],
            candidates: vec![],
            min_max: 1.0,
            argmin: None,
        };
        assert_eq!(emit_report(&r, ReportFormat::Csv), "route_id,norm,ratio\n");
    }

    #[test]
    fn grid_parsing() {
        let g: NormGrid = "1, 2,inf".parse().unwrap();
        assert_eq!(g.norms, vec![Norm::P(1.0), Norm::P(2.0), Norm::Inf]);
        assert!(g.is_standard());
        assert!("".parse::<NormGrid>().is_err());
    }
}
