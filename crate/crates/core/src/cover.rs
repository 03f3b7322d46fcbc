//! Geometric covering: concatenate doubled good-k-trees with budgets `b·c^i`.
//!
//! With `b` the smallest positive distance, `c = 2` and fixed directions this is
//! the All-Norm route. With `b = d_min·c^u` for random `u` and random directions
//! it is the randomized `L_p` route, derandomised by a grid over `u` and the
//! direction patterns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::k_path_profile;
use crate::ktree::{good_k_trees, KTree, TreeProvider};
use crate::metric::MetricInstance;
use crate::routes::{shortcut, submajorization_ratio, visit_times, walk_arrival_times, DelayVector, Norm, Route};

#[derive(Debug, Clone, Serialize)]
pub struct Subtour {
    pub iteration: usize,
    pub budget: f64,
    /// Number of vertices of the tree used.
    pub k: usize,
    pub tree_length: u64,
    pub walk: Vec<usize>,
    pub walk_length: u64,
    pub reversed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverSchedule {
    pub b: f64,
    pub c: f64,
    /// Vertices at distance zero from the start, visited before any subtour.
    pub zero_sweep: Vec<usize>,
    pub subtours: Vec<Subtour>,
    pub final_route: Route,
}

impl CoverSchedule {
    pub fn delays(&self, inst: &MetricInstance) -> DelayVector {
        visit_times(&self.final_route, inst)
    }

    /// First-arrival times along the concatenated walk, before shortcutting.
    pub fn walk_delays(&self, inst: &MetricInstance) -> DelayVector {
        DelayVector::new(walk_arrival_times(&self.walk(inst.start()), inst), inst.scale)
    }

    /// Concatenated walk (start, zero sweep, then every subtour).
    pub fn walk(&self, start: usize) -> Vec<usize> {
        let mut walk = vec![start];
        walk.extend(&self.zero_sweep);
        for st in &self.subtours {
            walk.extend(&st.walk);
        }
        walk
    }
}

/// Good k-trees for every `k`, reused across many route constructions.
#[derive(Debug, Clone)]
pub struct Cover<'a> {
    inst: &'a MetricInstance,
    trees: Vec<KTree>,
    dmin: u64,
}

impl<'a> Cover<'a> {
    pub fn new(inst: &'a MetricInstance, provider: TreeProvider) -> Result<Self> {
        let trees = good_k_trees(inst, inst.start(), provider)?;
        Ok(Self::with_trees(inst, trees))
    }

    pub fn with_trees(inst: &'a MetricInstance, trees: Vec<KTree>) -> Self {
        let dmin = inst.min_positive_distance().unwrap_or(1);
        Cover { inst, trees, dmin }
    }

    pub fn trees(&self) -> &[KTree] {
        &self.trees
    }

    fn zero_sweep(&self) -> Vec<usize> {
        let s = self.inst.start();
        (0..self.inst.n).filter(|&v| v != s && self.inst.d(s, v) == 0).collect()
    }

    /// Unoriented subtours for base `b` and ratio `c`, until every vertex is covered.
    pub fn subtours(&self, b: f64, c: f64) -> Result<Vec<Subtour>> {
        let inst = self.inst;
        let n = inst.n;
        let mut covered = vec![false; n];
        covered[inst.start()] = true;
        for v in self.zero_sweep() {
            covered[v] = true;
        }
        let mut remaining = covered.iter().filter(|&&c| !c).count();
        let span = (n as f64 * inst.max_distance().max(1) as f64 / b).max(1.0);
        let cap = (span.ln() / c.ln()).ceil().max(0.0) as usize + 2;
        let mut out = Vec::new();
        let mut i = 0usize;
        while remaining > 0 {
            if i > cap {
                return Err(Error::structural(format!("covering did not finish within {cap} iterations")));
            }
            let budget = b * c.powi(i as i32);
            let tree = self
                .trees
                .iter()
                .rev()
                .find(|t| t.total_length as f64 <= budget * (1.0 + 1e-12))
                .unwrap_or(&self.trees[0]);
            let walk = tree.doubled_walk();
            let walk_length = 2 * tree.total_length;
            debug_assert!(walk_length as f64 <= 2.0 * budget * (1.0 + 1e-12));
            for &v in &walk {
                if !covered[v] {
                    covered[v] = true;
                    remaining -= 1;
                }
            }
            out.push(Subtour {
                iteration: i,
                budget,
                k: tree.size(),
                tree_length: tree.total_length,
                walk,
                walk_length,
                reversed: false,
            });
            i += 1;
        }
        Ok(out)
    }

    fn assemble(&self, b: f64, c: f64, mut subtours: Vec<Subtour>, reverse: impl Fn(usize) -> bool) -> Result<CoverSchedule> {
        for (idx, st) in subtours.iter_mut().enumerate() {
            if reverse(idx) {
                st.walk.reverse();
                st.reversed = true;
            }
        }
        let zero_sweep = self.zero_sweep();
        let mut walk = vec![self.inst.start()];
        walk.extend(&zero_sweep);
        for st in &subtours {
            walk.extend(&st.walk);
        }
        let final_route = shortcut(&walk, self.inst)?;
        Ok(CoverSchedule {
            b,
            c,
            zero_sweep,
            subtours,
            final_route,
        })
    }

    /// Deterministic All-Norm route: `b = d_min`, `c = 2`, no reversals.
    pub fn all_norm(&self) -> Result<CoverSchedule> {
        let b = self.dmin as f64;
        let subtours = self.subtours(b, 2.0)?;
        let schedule = self.assemble(b, 2.0, subtours, |_| false)?;
        if self.trees.iter().all(|t| t.certified) {
            let lower = k_path_profile(self.inst, self.inst.start())?;
            let rho = submajorization_ratio(&schedule.walk_delays(self.inst), &lower)?;
            if rho > 8.0 + 1e-9 {
                return Err(Error::structural(format!("All-Norm route has T_k / L_k = {rho} > 8")));
            }
        }
        Ok(schedule)
    }

    /// Randomised route with offset `u ∈ [0, 1)` and fair-coin directions from `seed`.
    pub fn randomized(&self, c: f64, u: f64, seed: u64) -> Result<CoverSchedule> {
        check_c(c)?;
        if !(0.0..1.0).contains(&u) {
            return Err(Error::invalid(format!("offset u must lie in [0, 1), got {u}")));
        }
        let b = self.dmin as f64 * c.powf(u);
        let subtours = self.subtours(b, c)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coins: Vec<bool> = (0..subtours.len()).map(|_| rng.gen_bool(0.5)).collect();
        self.assemble(b, c, subtours, |i| coins[i])
    }

    /// Best route over the grid `u = l/m` and all direction patterns (all `2^S`
    /// when there are at most 12 non-trivial subtours, else the two uniform ones).
    pub fn derandomized(&self, norm: Norm, c: f64, m: usize) -> Result<Derandomized> {
        check_c(c)?;
        if m == 0 {
            return Err(Error::invalid("grid size m must be positive"));
        }
        let per_u: Vec<Result<GridPoint>> = (0..m)
            .into_par_iter()
            .map(|l| self.grid_point(norm, c, l as f64 / m as f64))
            .collect();
        let mut points = Vec::with_capacity(m);
        for p in per_u {
            points.push(p?);
        }
        let best = points
            .iter()
            .min_by(|a, b| a.best_objective.total_cmp(&b.best_objective))
            .expect("m > 0");
        let schedule = {
            let b = self.dmin as f64 * c.powf(best.u);
            let subtours = self.subtours(b, c)?;
            let flips = best.pattern.clone();
            self.assemble(b, c, subtours, |i| flips[i])?
        };
        let mean_objective_pow = points.iter().map(|p| p.mean_objective_pow).sum::<f64>() / m as f64;
        Ok(Derandomized {
            objective: best.best_objective,
            u: best.u,
            schedule,
            mean_objective_pow,
            grid: points.iter().map(|p| (p.u, p.mean_objective_pow)).collect(),
        })
    }

    fn grid_point(&self, norm: Norm, c: f64, u: f64) -> Result<GridPoint> {
        let b = self.dmin as f64 * c.powf(u);
        let subtours = self.subtours(b, c)?;
        let nontrivial: Vec<usize> = subtours
            .iter()
            .enumerate()
            .filter(|(_, s)| s.walk_length > 0)
            .map(|(i, _)| i)
            .collect();
        let s = nontrivial.len();
        let patterns: Vec<u64> = if s <= 12 {
            (0..(1u64 << s)).collect()
        } else {
            vec![0, (1u64 << s.min(63)) - 1]
        };
        let pow = |objective: f64| match norm.exponent() {
            Some(p) => objective.powf(p),
            None => objective,
        };
        let mut best: Option<(f64, Vec<bool>)> = None;
        let mut total = 0.0;
        for &pat in &patterns {
            let mut flips = vec![false; subtours.len()];
            for (bit, &idx) in nontrivial.iter().enumerate() {
                flips[idx] = (pat >> bit) & 1 == 1 || (s > 12 && pat != 0);
            }
            let route = self.route_for(&subtours, &flips)?;
            let objective = visit_times(&route, self.inst).norm(norm);
            total += pow(objective);
            if best.as_ref().is_none_or(|(o, _)| objective < *o) {
                best = Some((objective, flips));
            }
        }
        let (best_objective, pattern) = best.expect("at least one pattern");
        Ok(GridPoint {
            u,
            best_objective,
            pattern,
            mean_objective_pow: total / patterns.len() as f64,
        })
    }

    fn route_for(&self, subtours: &[Subtour], flips: &[bool]) -> Result<Route> {
        let mut walk = vec![self.inst.start()];
        walk.extend(self.zero_sweep());
        for (st, &f) in subtours.iter().zip(flips) {
            if f {
                walk.extend(st.walk.iter().rev());
            } else {
                walk.extend(&st.walk);
            }
        }
        shortcut(&walk, self.inst)
    }
}

struct GridPoint {
    u: f64,
    best_objective: f64,
    pattern: Vec<bool>,
    mean_objective_pow: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Derandomized {
    /// Norm of the best route found, original units.
    pub objective: f64,
    pub u: f64,
    pub schedule: CoverSchedule,
    /// Grid average of `‖T‖_p^p` (of `‖T‖_∞` for `p = ∞`), each grid point averaged
    /// over its direction patterns.
    pub mean_objective_pow: f64,
    pub grid: Vec<(f64, f64)>,
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 1.0 && c < std::f64::consts::E) {
        return Err(Error::invalid(format!("c must lie in (1, e), got {c}")));
    }
    Ok(())
}

/// All-Norm route with `b = d_min`, `c = 2`.
pub fn all_norm_route(inst: &MetricInstance, provider: TreeProvider) -> Result<CoverSchedule> {
    Cover::new(inst, provider)?.all_norm()
}

/// Randomised `L_p` route for offset `u` and direction seed `seed`.
pub fn lp_cover_route(inst: &MetricInstance, c: f64, u: f64, seed: u64, provider: TreeProvider) -> Result<CoverSchedule> {
    Cover::new(inst, provider)?.randomized(c, u, seed)
}

pub fn derandomized_best(inst: &MetricInstance, norm: Norm, c: f64, m: usize, provider: TreeProvider) -> Result<Derandomized> {
    Cover::new(inst, provider)?.derandomized(norm, c, m)
}

/// Expected-cost factor of the randomised covering route:
/// `2^{p-1}(c^{2p} - 1) / (p (c-1)^p ln c)`.
pub fn f_p(p: f64, c: f64) -> f64 {
    2f64.powf(p - 1.0) * (c.powf(2.0 * p) - 1.0) / (p * (c - 1.0).powf(p) * c.ln())
}

/// Minimiser of [`f_p`] over `c ∈ (1, e)` by golden-section search.
pub fn tune_c(p: f64) -> (f64, f64) {
    golden_min(|c| f_p(p, c), 1.0 + 1e-9, std::f64::consts::E - 1e-9, 1e-10)
}

/// Golden-section search for a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    let candidates = [(x, f(x)), (lo, f(lo)), (hi, f(hi))];
    candidates
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}
