//! LP-ROUND: per geometric budget `t_j`, each vehicle samples one tree column with
//! probability `z/η` (or idles), doubles it and walks it in a random direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{FractionalSolution, FEASIBILITY_TOL};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::exact::tree_on;
use crate::metric::MetricInstance;
use crate::routes::{multi_visit_times, DelayVector, MultiRoute, Norm};

/// Budgets `t_j = b·c^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometric {
    pub b: f64,
    pub c: f64,
}

impl Geometric {
    pub fn new(b: f64, c: f64) -> Result<Geometric> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!("base b must be positive, got {b}")));
        }
        if !(c > 1.0 && c.is_finite()) {
            return Err(Error::invalid(format!("ratio c must exceed 1, got {c}")));
        }
        Ok(Geometric { b, c })
    }

    /// `b = d_min · c^u`.
    pub fn from_offset(inst: &MetricInstance, c: f64, u: f64) -> Result<Geometric> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::invalid(format!("offset u must lie in [0, 1), got {u}")));
        }
        let dmin = inst.min_positive_distance().unwrap_or(1) as f64;
        Geometric::new(dmin * c.powf(u), c)
    }

    pub fn t(&self, j: usize) -> f64 {
        self.b * self.c.powi(j as i32)
    }

    /// Number of budgets up to and including the first one at or past `horizon`.
    pub fn points_until(&self, horizon: f64) -> usize {
        let mut j = 0;
        while self.t(j) < horizon {
            j += 1;
        }
        j + 1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Pick {
    pub iteration: usize,
    pub vehicle: usize,
    pub budget: f64,
    /// Index into the solution's columns, or `None` when the vehicle idles.
    pub column: Option<usize>,
    pub reversed: bool,
    pub walk_length: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundingRun {
    pub geometric: Geometric,
    pub routes: MultiRoute,
    pub delays: DelayVector,
    /// Iteration in which each vertex was first covered; `-1` for starts and
    /// vertices at distance zero from a start.
    pub covered_at: Vec<i64>,
    pub iterations: usize,
    pub picks: Vec<Pick>,
}

fn check_capacity(sol: &FractionalSolution) -> Result<()> {
    for i in 0..sol.vehicles() {
        for ti in 0..sol.grid.times[i].len() {
            let total: f64 = sol.columns_at(i, ti).1.iter().sum();
            if total > sol.eta + FEASIBILITY_TOL {
                return Err(Error::invalid(format!(
                    "capacity violated for vehicle {i} at t = {}: Σz = {total} > η = {}",
                    sol.grid.times[i][ti], sol.eta
                )));
            }
        }
    }
    Ok(())
}

/// One rounding run with directions and tree choices from `seed`.
pub fn lp_round(sol: &FractionalSolution, inst: &MetricInstance, geo: Geometric, seed: u64) -> Result<RoundingRun> {
    check_capacity(sol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    round_with(sol, inst, geo, &mut rng)
}

fn round_with(sol: &FractionalSolution, inst: &MetricInstance, geo: Geometric, rng: &mut ChaCha8Rng) -> Result<RoundingRun> {
    let n = inst.n;
    if sol.n != n {
        return Err(Error::invalid("fractional solution and instance differ in size"));
    }
    let k = sol.vehicles();
    let mut covered_at = vec![i64::MAX; n];
    let mut routes: Vec<Vec<usize>> = sol.starts.iter().map(|&s| vec![s]).collect();
    let mut in_route: Vec<Vec<bool>> = vec![vec![false; n]; k];
    for (i, &s) in sol.starts.iter().enumerate() {
        covered_at[s] = -1;
        in_route[i][s] = true;
    }
    for (i, &s) in sol.starts.iter().enumerate() {
        for v in 0..n {
            if covered_at[v] == i64::MAX && inst.d(s, v) == 0 {
                covered_at[v] = -1;
                routes[i].push(v);
                in_route[i][v] = true;
            }
        }
    }
    let mut uncovered = covered_at.iter().filter(|&&c| c == i64::MAX).count();
    let cap = geo.points_until(sol.grid.horizon()) + 2000;
    let mut picks = Vec::new();
    let mut j = 0usize;
    while uncovered > 0 {
        if j >= cap {
            return Err(Error::structural(format!("rounding did not cover all vertices in {cap} iterations")));
        }
        let t = geo.t(j);
        let mut newly = Vec::new();
        for i in 0..k {
            let ti = sol.grid.floor_index(i, t);
            let (a, _) = sol.col_range[i][ti];
            let (cols, z) = sol.columns_at(i, ti);
            let r = rng.gen::<f64>() * sol.eta;
            let mut acc = 0.0;
            let mut chosen = None;
            for (c, &zc) in z.iter().enumerate() {
                acc += zc.max(0.0);
                if r < acc {
                    chosen = Some(c);
                    break;
                }
            }
            let Some(c) = chosen else {
                picks.push(Pick {
                    iteration: j,
                    vehicle: i,
                    budget: t,
                    column: None,
                    reversed: false,
                    walk_length: 0,
                });
                continue;
            };
            let col = &cols[c];
            let tree = tree_on(inst, sol.starts[i], col.vertices(n), false);
            let mut walk = tree.doubled_walk();
            let reversed = rng.gen_bool(0.5);
            if reversed {
                walk.reverse();
            }
            let walk_length = 2 * tree.total_length;
            if walk_length as f64 > 2.0 * sol.eta * t * (1.0 + 1e-9) {
                return Err(Error::structural(format!(
                    "sampled walk of length {walk_length} exceeds 2·η·t = {}",
                    2.0 * sol.eta * t
                )));
            }
            for &v in &walk {
                if covered_at[v] == i64::MAX && !in_route[i][v] {
                    routes[i].push(v);
                    in_route[i][v] = true;
                    newly.push(v);
                }
            }
            picks.push(Pick {
                iteration: j,
                vehicle: i,
                budget: t,
                column: Some(a + c),
                reversed,
                walk_length,
            });
        }
        for v in newly {
            if covered_at[v] == i64::MAX {
                covered_at[v] = j as i64;
                uncovered -= 1;
            }
        }
        j += 1;
    }
    let routes = MultiRoute { routes };
    let delays = multi_visit_times(&routes, inst);
    Ok(RoundingRun {
        geometric: geo,
        routes,
        delays,
        covered_at,
        iterations: j,
        picks,
    })
}

/// Statistic of many independent rounding runs.
#[derive(Debug, Clone, Serialize)]
pub struct SampleStats {
    /// `‖ℓ^R‖_p^p` (units^p) of each run.
    pub values: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
}

impl SampleStats {
    pub fn from_values(values: Vec<f64>) -> SampleStats {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        SampleStats {
            values,
            mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Independent runs; sample `i` uses seed `derive_seed(seed, i)` and draws its
/// offset `u` from that stream unless `fixed_u` is given.
pub fn round_samples(
    sol: &FractionalSolution,
    inst: &MetricInstance,
    c: f64,
    samples: usize,
    seed: u64,
    fixed_u: Option<f64>,
) -> Result<Vec<RoundingRun>> {
    check_capacity(sol)?;
    if samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    (0..samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, idx as u64));
            let u = match fixed_u {
                Some(u) => u,
                None => rng.gen::<f64>(),
            };
            let geo = Geometric::from_offset(inst, c, u)?;
            round_with(sol, inst, geo, &mut rng)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplifyOutcome {
    pub runs: usize,
    pub best: RoundingRun,
    /// Norm of the best run, original units.
    pub best_objective: f64,
    /// Mean of `‖ℓ‖_p^p` over the runs, original units^p.
    pub mean_pow: f64,
}

/// Best of `⌈2 ln n / τ⌉` runs (at least one).
pub fn amplify(sol: &FractionalSolution, inst: &MetricInstance, c: f64, tau: f64, seed: u64, norm: Norm) -> Result<AmplifyOutcome> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!("tau must lie in (0, 1), got {tau}")));
    }
    let runs = ((2.0 * (inst.n as f64).ln() / tau).ceil() as usize).max(1);
    amplify_runs(sol, inst, c, runs, seed, norm)
}

pub fn amplify_runs(sol: &FractionalSolution, inst: &MetricInstance, c: f64, runs: usize, seed: u64, norm: Norm) -> Result<AmplifyOutcome> {
    let all = round_samples(sol, inst, c, runs, seed, None)?;
    let norms: Vec<f64> = all.iter().map(|r| r.delays.norm(norm)).collect();
    let pow = |x: f64| norm.exponent().map_or(x, |p| x.powf(p));
    let mean_pow = norms.iter().map(|&x| pow(x)).sum::<f64>() / runs as f64;
    let (idx, &best_objective) = norms
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("runs > 0");
    let best = all.into_iter().nth(idx).expect("index in range");
    Ok(AmplifyOutcome {
        runs,
        best,
        best_objective,
        mean_pow,
    })
}

/// Empirical coverage probabilities for a fixed budget sequence.
///
/// Column `0` stands for the zero sweep (iteration `-1`), column `j + 1` for
/// iteration `j`.
#[derive(Debug, Clone, Serialize)]
pub struct RoundingDiagnostics {
    pub samples: usize,
    pub geometric: Geometric,
    /// `p̂[v][j+1]`: fraction of runs in which `v` is still uncovered after iteration `j`.
    pub p_hat: Vec<Vec<f64>>,
    /// `w[v][j+1] = max(0, 1 - Σ_i y_{v,t_j,i})`, with `t_{-1} = 0`.
    pub w: Vec<Vec<f64>>,
    pub eta: f64,
}

pub fn diagnose(sol: &FractionalSolution, inst: &MetricInstance, geo: Geometric, samples: usize, seed: u64) -> Result<RoundingDiagnostics> {
    check_capacity(sol)?;
    if samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let runs: Vec<RoundingRun> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, idx as u64));
            round_with(sol, inst, geo, &mut rng)
        })
        .collect::<Result<_>>()?;
    let iterations = runs
        .iter()
        .map(|r| r.iterations)
        .max()
        .unwrap_or(0)
        .max(geo.points_until(sol.grid.horizon()));
    let cols = iterations + 1;
    let n = inst.n;
    let mut p_hat = vec![vec![0.0; cols]; n];
    for run in &runs {
        for v in 0..n {
            for (idx, slot) in p_hat[v].iter_mut().enumerate() {
                let j = idx as i64 - 1;
                if run.covered_at[v] > j {
                    *slot += 1.0;
                }
            }
        }
    }
    for row in &mut p_hat {
        for x in row.iter_mut() {
            *x /= samples as f64;
        }
    }
    let w = (0..n)
        .map(|v| {
            (0..cols)
                .map(|idx| {
                    let t = if idx == 0 { 0.0 } else { geo.t(idx - 1) };
                    sol.w(v, t).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    Ok(RoundingDiagnostics {
        samples,
        geometric: geo,
        p_hat,
        w,
        eta: sol.eta,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest `(p̂_j - bound) / stderr` seen (negative when every check has slack).
    pub worst_z: f64,
}

impl RoundingDiagnostics {
    pub fn iterations(&self) -> usize {
        self.p_hat.first().map_or(0, |r| r.len() - 1)
    }

    /// Check `p̂_j ≤ A·w_j + B·p̂_{j-1}` within `sigmas` standard errors, where
    /// `(A, B) = (1/η, 1 - 1/η)` for one vehicle and `(1 - e^{-1/η}, e^{-1/η})` for several.
    pub fn check_recurrence(&self, multi: bool, sigmas: f64) -> RecurrenceCheck {
        let (a, b) = if multi {
            let e = (-1.0 / self.eta).exp();
            (1.0 - e, e)
        } else {
            (1.0 / self.eta, 1.0 - 1.0 / self.eta)
        };
        let n = self.samples as f64;
        let mut checked = 0;
        let mut violations = 0;
        let mut worst_z = f64::NEG_INFINITY;
        for (p, w) in self.p_hat.iter().zip(&self.w) {
            for idx in 1..p.len() {
                let bound = a * w[idx] + b * p[idx - 1];
                let var = p[idx] * (1.0 - p[idx]) / n + b * b * p[idx - 1] * (1.0 - p[idx - 1]) / n;
                let se = var.sqrt().max(1.0 / n);
                let excess = p[idx] - bound;
                checked += 1;
                worst_z = worst_z.max(excess / se);
                if excess > sigmas * se + 1e-12 {
                    violations += 1;
                }
            }
        }
        RecurrenceCheck {
            checked,
            violations,
            worst_z,
        }
    }
}
