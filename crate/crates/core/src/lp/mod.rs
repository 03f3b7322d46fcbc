//! Time-indexed tree LP for single- and multi-vehicle `L_p` TSP, its randomized
//! rounding and the constants of the rounding analysis.
//!
//! Columns are enumerated explicitly: for vehicle `i` and time `t`, every vertex
//! set `S ∋ s_i` whose minimum spanning tree has length at most `η·t`.
//! The column family only changes at the distinct subset-MST lengths of each
//! vehicle. Any mass placed at a time between two of these breakpoints can be
//! moved down to the lower one without losing feasibility, so those breakpoints
//! form an exact time set. Times needed by the rounding (`t_j = b·c^j`) either
//! join the grid at build time or are read off by step extension.

pub mod simplex;

mod round;

pub use round::{
    amplify, amplify_runs, diagnose, lp_round, round_samples, AmplifyOutcome, Geometric, Pick, RecurrenceCheck,
    RoundingDiagnostics, RoundingRun, SampleStats,
};

use serde::Serialize;
use serde_json::{json, Value};

use crate::cover::golden_min;
use crate::error::{Error, Result};
use crate::exact::subset_mst_table;
use crate::limits::{check, Limits};
use crate::metric::MetricInstance;
use simplex::{LinearProgram, PivotRule, Relation};

/// Per-vehicle sorted time lists, each beginning at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    pub times: Vec<Vec<f64>>,
}

impl TimeGrid {
    /// Distinct subset-MST lengths (divided by `η`) for each of the first `k` starts.
    pub fn breakpoints(inst: &MetricInstance, k: usize, eta: f64) -> Result<TimeGrid> {
        let tables = vehicle_tables(inst, k)?;
        let times = tables
            .iter()
            .map(|table| {
                let mut t: Vec<u64> = table.iter().copied().filter(|&l| l != u64::MAX).collect();
                t.sort_unstable();
                t.dedup();
                t.into_iter().map(|l| l as f64 / eta).collect()
            })
            .collect();
        Ok(TimeGrid { times })
    }

    /// Every integer time `0..=H` where `H` is the largest breakpoint.
    pub fn integer_range(inst: &MetricInstance, k: usize, eta: f64) -> Result<TimeGrid> {
        let bp = Self::breakpoints(inst, k, eta)?;
        let h = bp.horizon().ceil() as u64;
        Ok(TimeGrid {
            times: vec![(0..=h).map(|t| t as f64).collect(); k],
        })
    }

    pub fn vehicles(&self) -> usize {
        self.times.len()
    }

    pub fn horizon(&self) -> f64 {
        self.times.iter().filter_map(|t| t.last().copied()).fold(0.0, f64::max)
    }

    /// Add `b·c^j` for `j = 0, 1, …` up to the first point at or past the horizon.
    pub fn with_geometric(mut self, geo: &Geometric) -> TimeGrid {
        let h = self.horizon();
        let mut points = Vec::new();
        let mut j = 0;
        loop {
            let t = geo.t(j);
            points.push(t);
            if t >= h {
                break;
            }
            j += 1;
        }
        for list in &mut self.times {
            list.extend(&points);
            list.sort_by(f64::total_cmp);
            list.dedup();
        }
        self
    }

    /// Index of the largest grid time `≤ t` for vehicle `i`.
    pub fn floor_index(&self, i: usize, t: f64) -> usize {
        let list = &self.times[i];
        let tol = 1e-9 * t.abs().max(1.0);
        list.partition_point(|&x| x <= t + tol).saturating_sub(1)
    }
}

fn vehicle_tables(inst: &MetricInstance, k: usize) -> Result<Vec<Vec<u64>>> {
    let limits = Limits::current();
    check("LP vertices", inst.n, limits.lp)?;
    check("LP vehicles", k, limits.lp_vehicles)?;
    if k == 0 || k > inst.vehicles() {
        return Err(Error::invalid(format!(
            "K = {k} vehicles requested but the instance has {} start(s)",
            inst.vehicles()
        )));
    }
    inst.starts[..k].iter().map(|&s| subset_mst_table(inst, s)).collect()
}

/// Tree column `z_{S,t,i}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeColumn {
    pub vehicle: usize,
    pub time_index: usize,
    /// Vertex set as a bitmask; always contains the vehicle's start.
    pub mask: u32,
    pub tree_length: u64,
}

impl TreeColumn {
    pub fn contains(&self, v: usize) -> bool {
        self.mask & (1 << v) != 0
    }

    pub fn vertices(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|&v| self.contains(v)).collect()
    }
}

/// The LP together with its variable layout.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub n: usize,
    pub p: f64,
    pub eta: f64,
    pub starts: Vec<usize>,
    pub grid: TimeGrid,
    pub columns: Vec<TreeColumn>,
    /// `[i][ti]` → half-open range into `columns`.
    col_range: Vec<Vec<(usize, usize)>>,
    /// `[i][ti][v]` → LP variable for `x_{v,t,i}` if `v` is reachable by then.
    x_var: Vec<Vec<Vec<Option<usize>>>>,
    z_offset: usize,
    pub program: LinearProgram,
    /// Objective coefficients are `(t / time_scale)^p`.
    time_scale: f64,
}

impl LpModel {
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.program.constraints.len()
    }
}

/// Build `LP^η` over `grid` for the first `k` starts of `inst`.
pub fn build_lp(inst: &MetricInstance, p: f64, k: usize, grid: TimeGrid, eta: f64) -> Result<LpModel> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("LP exponent must be a finite p >= 1, got {p}")));
    }
    if !(eta >= 1.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be >= 1, got {eta}")));
    }
    if grid.vehicles() != k {
        return Err(Error::invalid("time grid has the wrong number of vehicles"));
    }
    let n = inst.n;
    let tables = vehicle_tables(inst, k)?;
    let starts = inst.starts[..k].to_vec();
    let time_scale = grid.horizon().max(1.0);
    let tol = |t: f64| 1e-9 * t.max(1.0);

    let mut columns = Vec::new();
    let mut col_range = vec![Vec::new(); k];
    for (i, table) in tables.iter().enumerate() {
        for (ti, &t) in grid.times[i].iter().enumerate() {
            let begin = columns.len();
            for (mask, &len) in table.iter().enumerate() {
                if len != u64::MAX && len as f64 <= eta * t + tol(eta * t) {
                    columns.push(TreeColumn {
                        vehicle: i,
                        time_index: ti,
                        mask: mask as u32,
                        tree_length: len,
                    });
                }
            }
            col_range[i].push((begin, columns.len()));
        }
    }

    let mut program = LinearProgram::new(0);
    let mut x_var = vec![Vec::new(); k];
    for i in 0..k {
        for &t in &grid.times[i] {
            let row: Vec<Option<usize>> = (0..n)
                .map(|v| {
                    let reach = inst.d(starts[i], v) as f64;
                    (reach <= eta * t + tol(eta * t)).then(|| program.add_var((t / time_scale).powf(p)))
                })
                .collect();
            x_var[i].push(row);
        }
    }
    let z_offset = program.num_vars;
    for _ in &columns {
        program.add_var(0.0);
    }

    for v in 0..n {
        let coeffs: Vec<(usize, f64)> = x_var
            .iter()
            .flat_map(|per_t| per_t.iter().filter_map(move |row| row[v]))
            .map(|x| (x, 1.0))
            .collect();
        program.add_constraint(coeffs, Relation::Ge, 1.0);
    }
    for i in 0..k {
        for &(a, b) in &col_range[i] {
            program.add_constraint((a..b).map(|c| (z_offset + c, 1.0)).collect(), Relation::Le, eta);
        }
    }
    for i in 0..k {
        for ti in 0..grid.times[i].len() {
            let (a, b) = col_range[i][ti];
            for v in 0..n {
                if x_var[i][ti][v].is_none() {
                    continue;
                }
                let mut coeffs: Vec<(usize, f64)> = (a..b)
                    .filter(|&c| columns[c].contains(v))
                    .map(|c| (z_offset + c, 1.0))
                    .collect();
                for tp in 0..=ti {
                    if let Some(x) = x_var[i][tp][v] {
                        coeffs.push((x, -1.0));
                    }
                }
                program.add_constraint(coeffs, Relation::Ge, 0.0);
            }
        }
    }

    Ok(LpModel {
        n,
        p,
        eta,
        starts,
        grid,
        columns,
        col_range,
        x_var,
        z_offset,
        program,
        time_scale,
    })
}

/// Optimal fractional solution `(x, z)` of the tree LP.
#[derive(Debug, Clone, Serialize)]
pub struct FractionalSolution {
    pub n: usize,
    pub p: f64,
    pub eta: f64,
    pub starts: Vec<usize>,
    pub grid: TimeGrid,
    pub columns: Vec<TreeColumn>,
    /// `[i][ti]` → half-open range into `columns`.
    pub col_range: Vec<Vec<(usize, usize)>>,
    /// `x[i][ti][v]`.
    pub x: Vec<Vec<Vec<f64>>>,
    pub z: Vec<f64>,
    /// `Σ t^p x` in units^p.
    pub objective: f64,
}

pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Solve with Bland's rule.
pub fn solve_lp(model: &LpModel) -> Result<FractionalSolution> {
    solve_lp_with(model, PivotRule::Bland)
}

pub fn solve_lp_with(model: &LpModel, rule: PivotRule) -> Result<FractionalSolution> {
    let sol = match simplex::solve(&model.program, rule) {
        Ok(s) => s,
        Err(Error::Infeasible) | Err(Error::Unbounded) => {
            return Err(Error::structural("tree LP reported infeasible or unbounded"))
        }
        Err(e) => return Err(e),
    };
    let viol = model.program.max_violation(&sol.x);
    if viol > FEASIBILITY_TOL {
        return Err(Error::structural(format!("LP solution violates a constraint by {viol:e}")));
    }
    let k = model.starts.len();
    let x: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|i| {
            model.x_var[i]
                .iter()
                .map(|row| row.iter().map(|var| var.map_or(0.0, |j| sol.x[j])).collect())
                .collect()
        })
        .collect();
    let z: Vec<f64> = (0..model.columns.len()).map(|c| sol.x[model.z_offset + c]).collect();
    let objective = sol.objective * model.time_scale.powf(model.p);
    let fs = FractionalSolution {
        n: model.n,
        p: model.p,
        eta: model.eta,
        starts: model.starts.clone(),
        grid: model.grid.clone(),
        columns: model.columns.clone(),
        col_range: model.col_range.clone(),
        x,
        z,
        objective,
    };
    fs.check_feasibility(FEASIBILITY_TOL)?;
    Ok(fs)
}

impl FractionalSolution {
    pub fn vehicles(&self) -> usize {
        self.starts.len()
    }

    /// `y_{v,t,i} = Σ_{t' ≤ t} x_{v,t',i}`.
    pub fn y(&self, i: usize, ti: usize, v: usize) -> f64 {
        self.x[i][..=ti].iter().map(|row| row[v]).sum()
    }

    /// `1 - Σ_i y_{v,t,i}` at an arbitrary time, reading each vehicle at its grid floor.
    pub fn w(&self, v: usize, t: f64) -> f64 {
        let covered: f64 = (0..self.vehicles())
            .map(|i| self.y(i, self.grid.floor_index(i, t), v))
            .sum();
        1.0 - covered
    }

    pub fn columns_at(&self, i: usize, ti: usize) -> (&[TreeColumn], &[f64]) {
        let (a, b) = self.col_range[i][ti];
        (&self.columns[a..b], &self.z[a..b])
    }

    /// Largest violation of the three constraint families; errors above `tol`.
    pub fn check_feasibility(&self, tol: f64) -> Result<f64> {
        let k = self.vehicles();
        let mut worst = 0.0f64;
        for v in 0..self.n {
            let total: f64 = (0..k).map(|i| self.x[i].iter().map(|row| row[v]).sum::<f64>()).sum();
            worst = worst.max(1.0 - total);
        }
        for i in 0..k {
            for ti in 0..self.grid.times[i].len() {
                let (cols, z) = self.columns_at(i, ti);
                worst = worst.max(z.iter().sum::<f64>() - self.eta);
                for v in 0..self.n {
                    let supply: f64 = cols.iter().zip(z).filter(|(c, _)| c.contains(v)).map(|(_, &z)| z).sum();
                    worst = worst.max(self.y(i, ti, v) - supply);
                }
            }
        }
        let negative = self
            .x
            .iter()
            .flatten()
            .flatten()
            .chain(&self.z)
            .fold(0.0f64, |m, &v| m.max(-v));
        worst = worst.max(negative);
        if worst > tol {
            return Err(Error::structural(format!("fractional solution infeasible by {worst:e}")));
        }
        Ok(worst)
    }

    /// Recompute `Σ t^p x` from the stored values.
    pub fn recompute_objective(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.vehicles() {
            for (ti, row) in self.x[i].iter().enumerate() {
                let t = self.grid.times[i][ti];
                total += t.powf(self.p) * row.iter().sum::<f64>();
            }
        }
        total
    }

    /// Sparse export: entries above `1e-9`.
    pub fn to_sparse_json(&self) -> Value {
        let mut x = Vec::new();
        for i in 0..self.vehicles() {
            for (ti, row) in self.x[i].iter().enumerate() {
                for (v, &val) in row.iter().enumerate() {
                    if val > 1e-9 {
                        x.push(json!({"vehicle": i, "t": self.grid.times[i][ti], "v": v, "value": val}));
                    }
                }
            }
        }
        let z: Vec<Value> = self
            .columns
            .iter()
            .zip(&self.z)
            .filter(|(_, &val)| val > 1e-9)
            .map(|(c, &val)| {
                json!({
                    "vehicle": c.vehicle,
                    "t": self.grid.times[c.vehicle][c.time_index],
                    "vertices": c.vertices(self.n),
                    "tree_length": c.tree_length,
                    "value": val,
                })
            })
            .collect();
        json!({
            "p": self.p,
            "eta": self.eta,
            "starts": self.starts,
            "objective": self.objective,
            "x": x,
            "z": z,
        })
    }
}

/// Convenience: build on the breakpoint grid with `η = 1` and solve.
pub fn solve_tree_lp(inst: &MetricInstance, p: f64, k: usize) -> Result<FractionalSolution> {
    let grid = TimeGrid::breakpoints(inst, k, 1.0)?;
    solve_lp(&build_lp(inst, p, k, grid, 1.0)?)
}

/// Multi-vehicle rounding factor
/// `g_p(c) = (e-1) 2^{p-1} (c^{2p}-1) / (p (c-1)^p (e - c^p) ln c)` on `(1, e^{1/p})`.
pub fn g_p(p: f64, c: f64) -> f64 {
    let e = std::f64::consts::E;
    (e - 1.0) * 2f64.powf(p - 1.0) * (c.powf(2.0 * p) - 1.0)
        / (p * (c - 1.0).powf(p) * (e - c.powf(p)) * c.ln())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MultiConstant {
    pub p: f64,
    pub c_star: f64,
    /// `min g_p`, the bound on `E‖ℓ‖_p^p / LP`.
    pub value: f64,
    /// `value^{1/p}`, the approximation factor.
    pub factor: f64,
    /// `2p / ln θ · inner^{1/p}` with `θ = 1.152`.
    pub theta_bound: f64,
    pub theta_inner: f64,
}

pub const THETA: f64 = 1.152;

pub fn multi_constant(p: f64) -> Result<MultiConstant> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p must be a finite value >= 1, got {p}")));
    }
    let hi = std::f64::consts::E.powf(1.0 / p);
    let (c_star, value) = golden_min(|c| g_p(p, c), 1.0 + 1e-9, hi - 1e-9, 1e-11);
    let (bound, inner) = theta_bound(p);
    Ok(MultiConstant {
        p,
        c_star,
        value,
        factor: value.powf(1.0 / p),
        theta_bound: bound,
        theta_inner: inner,
    })
}

/// Closed-form bound at `θ = c^p = 1.152`:
/// `(2p / ln θ) · ((e-1)(θ²-1) / (2 ln θ (e-θ)))^{1/p}`, using `c - 1 ≥ ln c = ln θ / p`.
pub fn theta_bound(p: f64) -> (f64, f64) {
    let e = std::f64::consts::E;
    let th = THETA;
    let inner = (e - 1.0) * (th * th - 1.0) / (2.0 * th.ln() * (e - th));
    (2.0 * p / th.ln() * inner.powf(1.0 / p), inner)
}
