//! Segmented-TSP (visit at least `n_i` vertices by deadline `t_i`) and the dynamic
//! program that reduces `L_p` TSP to polynomially many segmented-TSP calls.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{check, Limits};
use crate::metric::{Geometry, MetricInstance};
use crate::routes::{shortcut, visit_times, Norm, Route};

/// Requirements `(n_i, t_i)`: at least `n_i` distinct vertices (the start counts)
/// by time `t_i` (integer units).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedSpec {
    pub segments: Vec<(usize, u64)>,
}

impl SegmentedSpec {
    pub fn new(segments: Vec<(usize, u64)>) -> Result<SegmentedSpec> {
        for w in segments.windows(2) {
            if w[0].0 > w[1].0 || w[0].1 > w[1].1 {
                return Err(Error::invalid("segment counts and deadlines must be non-decreasing"));
            }
        }
        Ok(SegmentedSpec { segments })
    }

    fn validate(&self, n: usize) -> Result<()> {
        SegmentedSpec::new(self.segments.clone())?;
        if let Some(&(ni, _)) = self.segments.last() {
            if ni > n {
                return Err(Error::invalid(format!("segment requires {ni} vertices but n = {n}")));
            }
        }
        Ok(())
    }

    fn target(&self) -> usize {
        self.segments.last().map_or(0, |s| s.0)
    }

    /// Deadline that applies when the `count`-th distinct vertex is reached.
    fn deadline_for(&self, count: usize) -> u64 {
        self.segments
            .iter()
            .filter(|s| s.0 == count)
            .map(|s| s.1)
            .min()
            .unwrap_or(u64::MAX)
    }

    /// Check a route against the spec using its prefix visit times.
    pub fn satisfied_by(&self, route: &Route, inst: &MetricInstance) -> bool {
        let times = visit_times(route, inst);
        let mut prefix: Vec<u64> = route.order.iter().map(|&v| times.per_vertex[v]).collect();
        prefix.sort_unstable();
        self.segments
            .iter()
            .all(|&(ni, ti)| ni == 0 || prefix.get(ni - 1).is_some_and(|&t| t <= ti))
    }
}

/// Exact segmented-TSP: a witnessing route, or `None` if infeasible.
///
/// Uses an interval DP on line instances and a `(set, last)` bitmask DP otherwise.
pub fn segmented_feasible(inst: &MetricInstance, spec: &SegmentedSpec) -> Result<Option<Route>> {
    spec.validate(inst.n)?;
    if inst.is_line() {
        Ok(line_feasible(inst, spec))
    } else {
        check("segmented-TSP vertices", inst.n, Limits::current().segmented)?;
        Ok(bitmask_feasible(inst, spec))
    }
}

fn bitmask_feasible(inst: &MetricInstance, spec: &SegmentedSpec) -> Option<Route> {
    let n = inst.n;
    let s = inst.start();
    let target = spec.target().max(1);
    let full = 1usize << n;
    let mut best = vec![u64::MAX; full * n];
    let mut parent = vec![u8::MAX; full * n];
    best[(1 << s) * n + s] = 0;
    let mut goal = None;
    if target == 1 {
        goal = Some(((1usize) << s, s));
    }
    'outer: for mask in 0..full {
        if mask & (1 << s) == 0 {
            continue;
        }
        let count = mask.count_ones() as usize;
        if count >= target {
            continue;
        }
        for last in 0..n {
            let cur = best[mask * n + last];
            if cur == u64::MAX {
                continue;
            }
            let deadline = spec.deadline_for(count + 1);
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let len = cur + inst.d(last, next);
                if len > deadline {
                    continue;
                }
                let nm = mask | (1 << next);
                let slot = nm * n + next;
                if len < best[slot] {
                    best[slot] = len;
                    parent[slot] = last as u8;
                }
                if count + 1 >= target && goal.is_none() {
                    // Every parent on this chain lies in an already processed mask.
                    goal = Some((nm, next));
                    break 'outer;
                }
            }
        }
    }
    let (mut mask, mut last) = goal?;
    let mut seq = vec![last];
    while last != s || mask != 1 << s {
        let p = parent[mask * n + last];
        if p == u8::MAX {
            break;
        }
        mask &= !(1 << last);
        last = p as usize;
        seq.push(last);
    }
    seq.reverse();
    extend_route(inst, seq)
}

fn extend_route(inst: &MetricInstance, mut seq: Vec<usize>) -> Option<Route> {
    let mut seen = vec![false; inst.n];
    for &v in &seq {
        seen[v] = true;
    }
    seq.extend((0..inst.n).filter(|&v| !seen[v]));
    Route::new(seq, inst).ok()
}

fn line_feasible(inst: &MetricInstance, spec: &SegmentedSpec) -> Option<Route> {
    let Geometry::Line { positions } = &inst.geometry else {
        unreachable!("checked by caller")
    };
    let n = inst.n;
    let mut sorted: Vec<usize> = (0..n).collect();
    sorted.sort_by_key(|&v| (positions[v], v));
    let pos: Vec<i64> = sorted.iter().map(|&v| positions[v]).collect();
    let si = sorted.iter().position(|&v| v == inst.start()).unwrap();
    let target = spec.target().max(1);
    let at = |l: usize, r: usize, side: usize| (l * n + r) * 2 + side;
    let mut best = vec![u64::MAX; n * n * 2];
    let mut from = vec![usize::MAX; n * n * 2];
    best[at(si, si, 0)] = 0;
    let mut goal = if target == 1 { Some(at(si, si, 0)) } else { None };
    for len in 1..n {
        if goal.is_some() {
            break;
        }
        let deadline = spec.deadline_for(len + 1);
        for l in 0..=(n - len) {
            let r = l + len - 1;
            if l > si || r < si {
                continue;
            }
            for side in 0..2 {
                let cur = best[at(l, r, side)];
                if cur == u64::MAX {
                    continue;
                }
                let here = if side == 0 { l } else { r };
                let mut moves = Vec::with_capacity(2);
                if l > 0 {
                    moves.push((l - 1, at(l - 1, r, 0)));
                }
                if r + 1 < n {
                    moves.push((r + 1, at(l, r + 1, 1)));
                }
                for (dest, state) in moves {
                    let t = cur + pos[here].abs_diff(pos[dest]);
                    if t <= deadline && t < best[state] {
                        best[state] = t;
                        from[state] = at(l, r, side);
                    }
                }
            }
        }
        if len + 1 >= target {
            goal = (0..=(n - len - 1))
                .flat_map(|l| [at(l, l + len, 0), at(l, l + len, 1)])
                .find(|&st| best[st] != u64::MAX);
        }
    }
    let mut state = goal?;
    let mut seq = Vec::new();
    loop {
        let side = state % 2;
        let (l, r) = ((state / 2) / n, (state / 2) % n);
        seq.push(sorted[if side == 0 { l } else { r }]);
        if from[state] == usize::MAX {
            break;
        }
        state = from[state];
    }
    seq.reverse();
    extend_route(inst, seq)
}

/// `⌈(3p)^p (1+ε) / ε²⌉`, at least 1, with the DP work estimate `n^k`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SegmentsNeeded {
    pub k: u64,
    /// `k · log10 n`, the order of the transition enumeration.
    pub work_log10: f64,
    pub within_budget: bool,
}

pub fn segments_needed(p: f64, eps: f64, n: usize) -> Result<SegmentsNeeded> {
    if !(p >= 1.0) || !(eps > 0.0) {
        return Err(Error::invalid("need p >= 1 and eps > 0"));
    }
    let raw = (3.0 * p).powf(p) * (1.0 + eps) / (eps * eps);
    let k = if raw.is_finite() { (raw - 1e-9).ceil().max(1.0) as u64 } else { u64::MAX };
    let work_log10 = k as f64 * (n.max(2) as f64).log10();
    let within_budget = work_log10 <= (Limits::current().reduction_work as f64).log10();
    Ok(SegmentsNeeded {
        k,
        work_log10,
        within_budget,
    })
}

/// Upper bound `1 + (3p)^p (1+ε) / (k ε)` on `E_j ‖T^{Opt'}‖_p^p / ‖T^{Opt}‖_p^p`.
pub fn loss_bound(p: f64, k: usize, eps: f64) -> f64 {
    1.0 + (3.0 * p).powf(p) * (1.0 + eps) / (k as f64 * eps)
}

/// Grid step implied by `k`: `(1+ε)^k = 3`.
pub fn implied_eps(k: usize) -> f64 {
    3f64.powf(1.0 / k as f64) - 1.0
}

/// Budgets `λ_i = base·(1+ε)^{-j}·c^i` shared by the reduction and the loss check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Budgets {
    pub base: f64,
    pub eps: f64,
    pub k: usize,
    pub j: usize,
}

impl Budgets {
    pub fn new(inst: &MetricInstance, k: usize, j: usize) -> Budgets {
        let eps = implied_eps(k);
        let c = (1.0 + eps).powi(k as i32);
        let base = inst.min_positive_distance().unwrap_or(1) as f64 / c;
        Budgets { base, eps, k, j }
    }

    pub fn c(&self) -> f64 {
        (1.0 + self.eps).powi(self.k as i32)
    }

    /// `λ_i`, with `λ_{-1} = 0`.
    pub fn lambda(&self, i: i64) -> f64 {
        if i < 0 {
            return 0.0;
        }
        self.base * (1.0 + self.eps).powi(-(self.j as i32)) * self.c().powi(i as i32)
    }

    /// Deadline for the `r`-th block (1-based) of sub-tour `i`: `λ_i (1+ε)^{r-k}`.
    pub fn block_deadline(&self, i: i64, r: usize) -> f64 {
        self.lambda(i) * (1.0 + self.eps).powi(r as i32 - self.k as i32)
    }
}

/// `T'_v = T_v + 3λ_{i-1}` where `i` is the first sub-tour whose budget covers `T_v`.
/// Returns `‖T'‖_p^p / ‖T‖_p^p` for each residue `j`.
pub fn opt_prime_ratios(inst: &MetricInstance, route: &Route, p: f64, k: usize) -> Vec<f64> {
    let times = visit_times(route, inst).per_vertex;
    let base: f64 = times.iter().map(|&t| (t as f64).powf(p)).sum();
    (0..k)
        .map(|j| {
            let b = Budgets::new(inst, k, j);
            let shifted: f64 = times
                .iter()
                .map(|&t| {
                    let t = t as f64;
                    if t == 0.0 {
                        return 0.0;
                    }
                    let mut i = 0i64;
                    while b.lambda(i) < t {
                        i += 1;
                    }
                    (t + 3.0 * b.lambda(i - 1)).powf(p)
                })
                .sum();
            if base == 0.0 {
                1.0
            } else {
                shifted / base
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionTable {
    pub budgets: Budgets,
    /// `λ_i` for the levels computed.
    pub lambdas: Vec<f64>,
    /// `d[i][d]`, units^p; `f64::INFINITY` when unreachable.
    pub d: Vec<Vec<f64>>,
    /// `(d', m_1..m_k)` chosen for each finite entry.
    #[serde(skip)]
    parent: Vec<Vec<Option<(usize, Vec<usize>)>>>,
    pub seg_calls: usize,
}

impl ReductionTable {
    /// Level with the smallest finite `D[i][n]`.
    pub fn best_level(&self) -> Option<(usize, f64)> {
        let n = self.d.first()?.len() - 1;
        self.d
            .iter()
            .enumerate()
            .map(|(i, row)| (i, row[n]))
            .filter(|(_, v)| v.is_finite())
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionOutcome {
    pub route: Route,
    /// Norm of the returned route, original units.
    pub objective: f64,
    /// `D[·][n]^{1/p}` for the best residue, original units.
    pub bound: f64,
    pub k: usize,
    pub eps: f64,
    pub best_j: usize,
    /// Bound per residue `j`.
    pub per_residue: Vec<f64>,
    pub seg_calls: usize,
    pub table: ReductionTable,
}

/// Segmented-TSP oracle keyed by the spec.
struct SegOracle<'a> {
    inst: &'a MetricInstance,
    memo: HashMap<Vec<(usize, u64)>, bool>,
    calls: usize,
}

impl<'a> SegOracle<'a> {
    fn feasible(&mut self, segments: &[(usize, u64)]) -> Result<bool> {
        if let Some(&f) = self.memo.get(segments) {
            return Ok(f);
        }
        self.calls += 1;
        let spec = SegmentedSpec {
            segments: segments.to_vec(),
        };
        let f = segmented_feasible(self.inst, &spec)?.is_some();
        self.memo.insert(segments.to_vec(), f);
        Ok(f)
    }
}

fn units(deadline: f64) -> u64 {
    (deadline + 1e-9 * deadline.max(1.0)).floor().max(0.0) as u64
}

/// Segment list for sub-tour `i` with `d'` earlier vertices and blocks `m`.
fn deadlines(b: &Budgets, i: i64, dprev: usize, m: &[usize]) -> Vec<(usize, u64)> {
    let mut segs = vec![(dprev, units(b.lambda(i - 1)))];
    let mut count = dprev;
    for (r, &mr) in m.iter().enumerate() {
        count += mr;
        segs.push((count, units(b.block_deadline(i, r + 1))));
    }
    segs
}

fn build_table(inst: &MetricInstance, p: f64, b: Budgets, work: &mut usize) -> Result<ReductionTable> {
    let n = inst.n;
    let s = inst.start();
    let k = b.k;
    let cap = Limits::current().reduction_work;
    let zeros = (0..n).filter(|&v| inst.d(s, v) == 0).count();
    let horizon = 2.0 * (0..n).map(|v| inst.d(s, v) as f64).sum::<f64>();
    let mut oracle = SegOracle {
        inst,
        memo: HashMap::new(),
        calls: 0,
    };
    let mut prev = vec![f64::INFINITY; n + 1];
    for slot in prev.iter_mut().take(zeros + 1) {
        *slot = 0.0;
    }
    let mut d_rows = Vec::new();
    let mut parents = Vec::new();
    let mut lambdas = Vec::new();
    let mut i = 0i64;
    loop {
        let mut row = vec![f64::INFINITY; n + 1];
        let mut par: Vec<Option<(usize, Vec<usize>)>> = vec![None; n + 1];
        let offset = 3.0 * b.lambda(i - 1);
        let charges: Vec<f64> = (1..=k).map(|r| (offset + b.block_deadline(i, r)).powf(p)).collect();
        for dprev in 0..=n {
            if !prev[dprev].is_finite() {
                continue;
            }
            // Depth-first over (m_1, ..., m_k); an infeasible prefix prunes its subtree.
            let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
            while let Some(m) = stack.pop() {
                *work += 1;
                check("reduction DP work", *work, cap)?;
                let segs = deadlines(&b, i, dprev, &m);
                let mut pruned = segs.clone();
                pruned.retain(|&(c, _)| c > 0);
                if !oracle.feasible(&pruned)? {
                    continue;
                }
                if m.len() == k {
                    let total: usize = m.iter().sum();
                    let cost = prev[dprev] + m.iter().zip(&charges).map(|(&mr, &ch)| mr as f64 * ch).sum::<f64>();
                    let d = dprev + total;
                    if cost < row[d] {
                        row[d] = cost;
                        par[d] = Some((dprev, m.clone()));
                    }
                    continue;
                }
                let used: usize = dprev + m.iter().sum::<usize>();
                for mr in (0..=(n - used)).rev() {
                    let mut next = m.clone();
                    next.push(mr);
                    stack.push(next);
                }
            }
        }
        d_rows.push(row.clone());
        parents.push(par);
        lambdas.push(b.lambda(i));
        let done = b.lambda(i - 1) >= horizon;
        prev = row;
        if done {
            break;
        }
        i += 1;
    }
    Ok(ReductionTable {
        budgets: b,
        lambdas,
        d: d_rows,
        parent: parents,
        seg_calls: oracle.calls,
    })
}

/// Reduce `L_p` TSP to segmented-TSP with `k` blocks per sub-tour and `ε` implied
/// by `(1+ε)^k = 3`; the best residue `j ∈ 0..k` is returned.
pub fn reduce_lp_tsp(inst: &MetricInstance, norm: Norm, k: usize) -> Result<ReductionOutcome> {
    let p = norm
        .exponent()
        .ok_or_else(|| Error::invalid("the reduction needs a finite p"))?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !inst.is_line() {
        check("segmented-TSP vertices", inst.n, Limits::current().segmented)?;
    }
    let mut work = 0usize;
    let mut per_residue = Vec::with_capacity(k);
    let mut best: Option<(f64, ReductionTable)> = None;
    for j in 0..k {
        let table = build_table(inst, p, Budgets::new(inst, k, j), &mut work)?;
        let (_, value) = table
            .best_level()
            .ok_or_else(|| Error::structural("reduction table has no finite entry"))?;
        let bound = inst.scale.to_original(value.powf(1.0 / p));
        per_residue.push(bound);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, table));
        }
    }
    let (value, table) = best.expect("k >= 1");
    let bound = inst.scale.to_original(value.powf(1.0 / p));
    let route = reconstruct(inst, &table)?;
    let objective = visit_times(&route, inst).norm(norm);
    if objective > bound * (1.0 + 1e-9) + 1e-9 {
        return Err(Error::structural(format!(
            "reconstructed route norm {objective} exceeds DP bound {bound}"
        )));
    }
    Ok(ReductionOutcome {
        route,
        objective,
        bound,
        k,
        eps: table.budgets.eps,
        best_j: table.budgets.j,
        per_residue,
        seg_calls: table.seg_calls,
        table,
    })
}

/// A sub-tour of the reconstructed schedule.
#[derive(Debug, Clone, Serialize)]
pub struct SubTour {
    pub level: usize,
    pub start_time: f64,
    pub prefix: Vec<usize>,
    pub segments: Vec<(usize, u64)>,
}

/// Sub-tours chosen by the table, outermost last.
pub fn schedule(inst: &MetricInstance, table: &ReductionTable) -> Result<Vec<SubTour>> {
    let n = inst.n;
    let (level, _) = table
        .best_level()
        .ok_or_else(|| Error::structural("reduction table has no finite entry"))?;
    let mut tours = Vec::new();
    let mut d = n;
    let mut i = level as i64;
    while i >= 0 {
        let Some((dprev, m)) = table.parent[i as usize][d].clone() else {
            break;
        };
        let total: usize = m.iter().sum();
        if total > 0 {
            let mut segs = deadlines(&table.budgets, i, dprev, &m);
            segs.retain(|&(c, _)| c > 0);
            let spec = SegmentedSpec::new(segs.clone())?;
            let witness = segmented_feasible(inst, &spec)?
                .ok_or_else(|| Error::structural("memoised feasible spec became infeasible"))?;
            let prefix = witness.order[..(dprev + total).max(1)].to_vec();
            tours.push(SubTour {
                level: i as usize,
                start_time: 3.0 * table.budgets.lambda(i - 1),
                prefix,
                segments: segs,
            });
        }
        d = dprev;
        i -= 1;
    }
    tours.reverse();
    Ok(tours)
}

fn reconstruct(inst: &MetricInstance, table: &ReductionTable) -> Result<Route> {
    let tours = schedule(inst, table)?;
    verify_schedule(inst, table, &tours)?;
    let s = inst.start();
    let mut walk = vec![s];
    for t in &tours {
        walk.extend(&t.prefix);
        walk.push(s);
    }
    walk.extend(0..inst.n);
    shortcut(&walk, inst)
}

/// Re-simulate the waiting schedule: every sub-tour meets its own deadlines and
/// is back at the start before the next one begins.
pub fn verify_schedule(inst: &MetricInstance, table: &ReductionTable, tours: &[SubTour]) -> Result<()> {
    let s = inst.start();
    let mut clock = 0.0f64;
    for t in tours {
        if clock > t.start_time + 1e-9 * t.start_time.max(1.0) {
            return Err(Error::structural(format!(
                "sub-tour at level {} starts at {} but the previous one returns at {clock}",
                t.level, t.start_time
            )));
        }
        let mut len = 0u64;
        let mut times = vec![0u64];
        for w in t.prefix.windows(2) {
            len += inst.d(w[0], w[1]);
            times.push(len);
        }
        for &(count, deadline) in &t.segments {
            if count > 0 && times[count - 1] > deadline {
                return Err(Error::structural(format!(
                    "sub-tour at level {} misses deadline {deadline} for {count} vertices",
                    t.level
                )));
            }
        }
        let lambda = table.budgets.lambda(t.level as i64);
        if len as f64 > lambda * (1.0 + 1e-9) {
            return Err(Error::structural("sub-tour prefix exceeds its budget"));
        }
        let back = t.prefix.last().map_or(0, |&v| inst.d(v, s));
        clock = t.start_time + (len + back) as f64;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_counts_as_visited() {
        let inst = MetricInstance::line("l", vec![0, 5, 9], vec![0]).unwrap();
        let spec = SegmentedSpec::new(vec![(1, 0)]).unwrap();
        assert!(segmented_feasible(&inst, &spec).unwrap().is_some());
    }

    #[test]
    fn forced_line_examples() {
        let inst = MetricInstance::line("l", vec![0, 1, 2], vec![0]).unwrap();
        let ok = SegmentedSpec::new(vec![(3, 2)]).unwrap();
        let route = segmented_feasible(&inst, &ok).unwrap().unwrap();
        assert!(ok.satisfied_by(&route, &inst));
        let bad = SegmentedSpec::new(vec![(3, 1)]).unwrap();
        assert!(segmented_feasible(&inst, &bad).unwrap().is_none());
    }

    #[test]
    fn rejects_non_monotone_spec() {
        assert!(SegmentedSpec::new(vec![(2, 5), (1, 6)]).is_err());
        assert!(SegmentedSpec::new(vec![(1, 5), (2, 4)]).is_err());
    }

    #[test]
    fn segments_needed_formula() {
        assert_eq!(segments_needed(1.0, 1.0, 10).unwrap().k, 6);
        let s = segments_needed(2.0, 0.5, 10).unwrap();
        assert_eq!(s.k, 216);
        assert!(!s.within_budget);
        assert_eq!(segments_needed(1.0, 1e6, 10).unwrap().k, 1);
    }
}
