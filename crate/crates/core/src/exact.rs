//! Exact solvers used as oracles on small instances.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ktree::KTree;
use crate::limits::{check, Limits};
use crate::metric::{Geometry, MetricInstance};
use crate::routes::{multi_visit_times, visit_times, DelayVector, MultiRoute, Norm, Route};

#[derive(Debug, Clone, Serialize)]
pub struct ExactSolution {
    pub route: Route,
    pub delays: DelayVector,
    /// Norm of the visit-time vector in original units.
    pub objective: f64,
}

impl ExactSolution {
    fn from_route(route: Route, inst: &MetricInstance, norm: Norm) -> Self {
        let delays = visit_times(&route, inst);
        let objective = delays.norm(norm);
        ExactSolution { route, delays, objective }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactMultiSolution {
    pub routes: MultiRoute,
    pub delays: DelayVector,
    pub objective: f64,
}

/// Cost increment when a vertex is reached at time `t`.
#[inline]
fn term(norm: Norm, t: u64) -> f64 {
    match norm {
        Norm::Inf => 0.0,
        Norm::P(p) if p == 1.0 => t as f64,
        Norm::P(p) => (t as f64).powf(p),
    }
}

#[inline]
fn combine(norm: Norm, cost: f64, t: u64) -> f64 {
    match norm {
        Norm::Inf => t as f64,
        _ => cost + term(norm, t),
    }
}

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Label {
    len: u64,
    cost: f64,
    prev_last: u32,
    prev_idx: u32,
}

/// Lexicographic comparison of sets encoded as bitmasks over a sorted ground set.
#[inline]
pub(crate) fn mask_lex_less(a: u64, b: u64) -> bool {
    let x = a ^ b;
    x != 0 && a & (x & x.wrapping_neg()) != 0
}

/// Exact `L_p` TSP on a general metric via a Pareto dynamic program over
/// `(visited set, last vertex)` with labels `(length, Σ t^p)`.
///
/// Ties in the objective are broken toward the lexicographically smaller route.
pub fn exact_lp_tsp(inst: &MetricInstance, norm: Norm) -> Result<ExactSolution> {
    let n = inst.n;
    check("exact DP vertices", n, Limits::current().exact)?;
    let s = inst.start();
    let others: Vec<usize> = (0..n).filter(|&v| v != s).collect();
    let m = others.len();
    if m == 0 {
        return Ok(ExactSolution::from_route(Route::new(vec![s], inst)?, inst, norm));
    }
    let full = (1usize << m) - 1;
    let mut table: Vec<Vec<Label>> = vec![Vec::new(); (full + 1) * m];
    let idx = |mask: usize, last: usize| mask * m + last;

    let reconstruct = |table: &Vec<Vec<Label>>, mut mask: usize, mut last: usize, mut li: u32| -> Vec<usize> {
        let mut seq = Vec::with_capacity(m + 1);
        loop {
            seq.push(others[last]);
            let lab = table[idx(mask, last)][li as usize];
            if lab.prev_last == NO_PARENT {
                break;
            }
            mask &= !(1 << last);
            last = lab.prev_last as usize;
            li = lab.prev_idx;
        }
        seq.push(s);
        seq.reverse();
        seq
    };

    for j in 0..m {
        let len = inst.d(s, others[j]);
        table[idx(1 << j, j)].push(Label {
            len,
            cost: combine(norm, 0.0, len),
            prev_last: NO_PARENT,
            prev_idx: 0,
        });
    }

    for mask in 1..=full {
        for last in 0..m {
            if mask & (1 << last) == 0 {
                continue;
            }
            let count = table[idx(mask, last)].len();
            for li in 0..count {
                let lab = table[idx(mask, last)][li];
                for next in 0..m {
                    if mask & (1 << next) != 0 {
                        continue;
                    }
                    let len = lab.len + inst.d(others[last], others[next]);
                    let cost = combine(norm, lab.cost, len);
                    let cand = Label {
                        len,
                        cost,
                        prev_last: last as u32,
                        prev_idx: li as u32,
                    };
                    let target = idx(mask | (1 << next), next);
                    insert_label(&mut table, target, cand, |tbl, old| {
                        // Exact tie: keep the lexicographically smaller prefix.
                        let a = reconstruct(tbl, mask, last, li as u32);
                        let b = reconstruct(tbl, mask, old.prev_last as usize, old.prev_idx);
                        a < b
                    });
                }
            }
        }
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for last in 0..m {
        for (li, lab) in table[idx(full, last)].iter().enumerate() {
            let better = match &best {
                None => true,
                Some((c, _)) if lab.cost < *c => true,
                Some((c, seq)) if lab.cost == *c => reconstruct(&table, full, last, li as u32) < *seq,
                _ => false,
            };
            if better {
                best = Some((lab.cost, reconstruct(&table, full, last, li as u32)));
            }
        }
    }
    let (_, order) = best.ok_or_else(|| Error::structural("exact DP produced no complete route"))?;
    Ok(ExactSolution::from_route(Route::new(order, inst)?, inst, norm))
}

/// Insert into a Pareto frontier sorted by length (costs strictly decreasing).
/// `prefer_new` decides exact ties.
fn insert_label(
    table: &mut Vec<Vec<Label>>,
    target: usize,
    cand: Label,
    prefer_new: impl Fn(&Vec<Vec<Label>>, &Label) -> bool,
) {
    let dominated = table[target]
        .iter()
        .position(|old| old.len <= cand.len && old.cost <= cand.cost);
    if let Some(k) = dominated {
        let old = table[target][k];
        if old.len == cand.len && old.cost == cand.cost && prefer_new(table, &old) {
            table[target][k] = cand;
        }
        return;
    }
    let frontier = &mut table[target];
    frontier.retain(|old| !(old.len >= cand.len && old.cost >= cand.cost));
    let pos = frontier.partition_point(|old| old.len < cand.len);
    frontier.insert(pos, cand);
}

/// Brute-force enumeration of all `(n-1)!` routes, in lexicographic order.
pub fn enumerate_lp_tsp(inst: &MetricInstance, norm: Norm) -> Result<ExactSolution> {
    check("permutation enumeration vertices", inst.n, Limits::current().permutation)?;
    let s = inst.start();
    let others: Vec<usize> = (0..inst.n).filter(|&v| v != s).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in others.iter().copied().permutations(others.len()) {
        let (mut len, mut cost, mut prev) = (0u64, 0.0f64, s);
        for &v in &perm {
            len += inst.d(prev, v);
            cost = combine(norm, cost, len);
            prev = v;
        }
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            let mut order = vec![s];
            order.extend(perm);
            best = Some((cost, order));
        }
    }
    let order = best.map(|b| b.1).unwrap_or_else(|| vec![s]);
    Ok(ExactSolution::from_route(Route::new(order, inst)?, inst, norm))
}

/// `L_k` for `k = 1..=n`: the shortest path from `root` visiting exactly `k` vertices.
/// Entry `k - 1` holds `L_k`.
pub fn k_path_profile(inst: &MetricInstance, root: usize) -> Result<Vec<u64>> {
    let n = inst.n;
    check("k-path profile vertices", n, Limits::current().k_path)?;
    let others: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    let m = others.len();
    let mut profile = vec![u64::MAX; n];
    profile[0] = 0;
    if m == 0 {
        return Ok(profile);
    }
    let full = (1usize << m) - 1;
    let mut best = vec![u64::MAX; (full + 1) * m];
    for j in 0..m {
        best[(1 << j) * m + j] = inst.d(root, others[j]);
    }
    for mask in 1..=full {
        let k = mask.count_ones() as usize + 1;
        for last in 0..m {
            let cur = best[mask * m + last];
            if cur == u64::MAX {
                continue;
            }
            profile[k - 1] = profile[k - 1].min(cur);
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let slot = &mut best[(mask | (1 << next)) * m + next];
                *slot = (*slot).min(cur + inst.d(others[last], others[next]));
            }
        }
    }
    Ok(profile)
}

/// `L_k` for a single `k`.
pub fn min_k_path(inst: &MetricInstance, root: usize, k: usize) -> Result<u64> {
    if k == 0 || k > inst.n {
        return Err(Error::invalid(format!("k must be in 1..={}", inst.n)));
    }
    Ok(k_path_profile(inst, root)?[k - 1])
}

/// Prim's algorithm on the given vertex set. Ties go to the smaller vertex index.
/// Returns the edges (parent, child) and total length.
pub(crate) fn mst(inst: &MetricInstance, vertices: &[usize]) -> (Vec<(usize, usize)>, u64) {
    let k = vertices.len();
    if k <= 1 {
        return (Vec::new(), 0);
    }
    let mut in_tree = vec![false; k];
    let mut key = vec![u64::MAX; k];
    let mut parent = vec![usize::MAX; k];
    key[0] = 0;
    let mut edges = Vec::with_capacity(k - 1);
    let mut total = 0;
    for _ in 0..k {
        let mut u = usize::MAX;
        for i in 0..k {
            if !in_tree[i] && (u == usize::MAX || key[i] < key[u]) {
                u = i;
            }
        }
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            edges.push((vertices[parent[u]], vertices[u]));
            total += key[u];
        }
        for i in 0..k {
            if !in_tree[i] {
                let d = inst.d(vertices[u], vertices[i]);
                if d < key[i] {
                    key[i] = d;
                    parent[i] = u;
                }
            }
        }
    }
    (edges, total)
}

fn mst_length(inst: &MetricInstance, vertices: &[usize], key: &mut [u64], used: &mut [bool]) -> u64 {
    let k = vertices.len();
    if k <= 1 {
        return 0;
    }
    key[..k].fill(u64::MAX);
    used[..k].fill(false);
    key[0] = 0;
    let mut total = 0;
    for _ in 0..k {
        let mut u = usize::MAX;
        for i in 0..k {
            if !used[i] && (u == usize::MAX || key[i] < key[u]) {
                u = i;
            }
        }
        used[u] = true;
        total += key[u];
        for i in 0..k {
            if !used[i] {
                let d = inst.d(vertices[u], vertices[i]);
                if d < key[i] {
                    key[i] = d;
                }
            }
        }
    }
    total
}

/// MST length of every vertex subset containing `root`.
///
/// The table is indexed by a bitmask over all `n` vertices with `root`'s bit set;
/// entries for masks without `root` are `u64::MAX`.
pub fn subset_mst_table(inst: &MetricInstance, root: usize) -> Result<Vec<u64>> {
    let n = inst.n;
    check("subset MST vertices", n, Limits::current().k_tree.max(Limits::current().lp))?;
    let mut table = vec![u64::MAX; 1 << n];
    let mut verts = Vec::with_capacity(n);
    let mut key = vec![0u64; n];
    let mut used = vec![false; n];
    for mask in 0..(1usize << n) {
        if mask & (1 << root) == 0 {
            continue;
        }
        verts.clear();
        verts.extend((0..n).filter(|&v| mask & (1 << v) != 0));
        table[mask] = mst_length(inst, &verts, &mut key, &mut used);
    }
    Ok(table)
}

pub(crate) fn mask_vertices(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&v| mask & (1 << v) != 0).collect()
}

/// Minimum spanning tree of `vertices` as a [`KTree`] rooted at `root`.
pub(crate) fn tree_on(inst: &MetricInstance, root: usize, vertices: Vec<usize>, certified: bool) -> KTree {
    let mut order = vec![root];
    order.extend(vertices.iter().copied().filter(|&v| v != root));
    let (edges, total_length) = mst(inst, &order);
    let mut vertices = vertices;
    vertices.sort_unstable();
    KTree {
        root,
        vertices,
        edges,
        total_length,
        certified,
    }
}

/// Cheapest tree on exactly `k` vertices containing `root`; ties go to the
/// lexicographically smallest vertex set.
pub fn min_k_tree(inst: &MetricInstance, root: usize, k: usize) -> Result<KTree> {
    let table = subset_mst_table(inst, root)?;
    min_k_tree_from_table(inst, root, k, &table)
}

pub(crate) fn min_k_tree_from_table(inst: &MetricInstance, root: usize, k: usize, table: &[u64]) -> Result<KTree> {
    if k == 0 || k > inst.n {
        return Err(Error::invalid(format!("k must be in 1..={}", inst.n)));
    }
    let mut best: Option<(u64, usize)> = None;
    for (mask, &len) in table.iter().enumerate() {
        if len == u64::MAX || mask.count_ones() as usize != k {
            continue;
        }
        let better = match best {
            None => true,
            Some((bl, bm)) => len < bl || (len == bl && mask_lex_less(mask as u64, bm as u64)),
        };
        if better {
            best = Some((len, mask));
        }
    }
    let (_, mask) = best.ok_or_else(|| Error::structural("no subset of the requested size"))?;
    Ok(tree_on(inst, root, mask_vertices(mask, inst.n), true))
}

/// Exact `L_p` TSP on a line by an interval DP over `(left, right, side)`.
///
/// `p = 1` and `p = ∞` use additive cost-to-go recurrences; other `p` keep Pareto
/// labels `(time, Σ t^p)` per state.
pub fn exact_line_lp_tsp(inst: &MetricInstance, norm: Norm) -> Result<ExactSolution> {
    let positions = match &inst.geometry {
        Geometry::Line { positions } => positions,
        _ => return Err(Error::invalid("exact line solver needs line geometry")),
    };
    let n = inst.n;
    let mut sorted: Vec<usize> = (0..n).collect();
    sorted.sort_by_key(|&v| (positions[v], v));
    let pos: Vec<i64> = sorted.iter().map(|&v| positions[v]).collect();
    let si = sorted.iter().position(|&v| v == inst.start()).expect("start present");
    let gap = |a: usize, b: usize| pos[a].abs_diff(pos[b]);

    let visit_order: Vec<usize> = match norm {
        Norm::P(p) if p == 1.0 => line_additive(n, si, &gap, true),
        Norm::Inf => line_additive(n, si, &gap, false),
        Norm::P(p) => line_pareto(n, si, &gap, p)?,
    };
    let order = visit_order.into_iter().map(|i| sorted[i]).collect();
    Ok(ExactSolution::from_route(Route::new(order, inst)?, inst, norm))
}

/// Sequence of sorted indices; `weighted` multiplies each move by the number of
/// vertices still unvisited (total latency), otherwise the cost is the travel time.
fn line_additive(n: usize, si: usize, gap: &impl Fn(usize, usize) -> u64, weighted: bool) -> Vec<usize> {
    const UNSET: u128 = u128::MAX;
    let at = |l: usize, r: usize, side: usize| (l * n + r) * 2 + side;
    let mut g = vec![UNSET; n * n * 2];
    let mut choice = vec![0u8; n * n * 2];
    for len in (1..=n).rev() {
        for l in 0..=(n - len) {
            let r = l + len - 1;
            if l > si || r < si {
                continue;
            }
            let remaining = (n - len) as u128;
            for side in 0..2 {
                let cur = if side == 0 { l } else { r };
                if remaining == 0 {
                    g[at(l, r, side)] = 0;
                    continue;
                }
                let w = if weighted { remaining } else { 1 };
                let mut best = UNSET;
                let mut pick = 0u8;
                if l > 0 {
                    let c = gap(cur, l - 1) as u128 * w + g[at(l - 1, r, 0)];
                    best = c;
                    pick = 0;
                }
                if r + 1 < n {
                    let c = gap(cur, r + 1) as u128 * w + g[at(l, r + 1, 1)];
                    if c < best {
                        best = c;
                        pick = 1;
                    }
                }
                g[at(l, r, side)] = best;
                choice[at(l, r, side)] = pick;
            }
        }
    }
    let mut seq = vec![si];
    let (mut l, mut r, mut side) = (si, si, 0usize);
    while r - l + 1 < n {
        if choice[at(l, r, side)] == 0 {
            l -= 1;
            side = 0;
            seq.push(l);
        } else {
            r += 1;
            side = 1;
            seq.push(r);
        }
    }
    seq
}

#[derive(Clone, Copy)]
struct LineLabel {
    time: u64,
    cost: f64,
    parent: u32,
    parent_idx: u32,
}

fn line_pareto(n: usize, si: usize, gap: &impl Fn(usize, usize) -> u64, p: f64) -> Result<Vec<usize>> {
    let cap = Limits::current().line_labels;
    let at = |l: usize, r: usize, side: usize| (l * n + r) * 2 + side;
    let mut labels: Vec<Vec<LineLabel>> = vec![Vec::new(); n * n * 2];
    labels[at(si, si, 0)].push(LineLabel {
        time: 0,
        cost: 0.0,
        parent: u32::MAX,
        parent_idx: 0,
    });
    let mut total = 1usize;
    for len in 1..n {
        for l in 0..=(n - len) {
            let r = l + len - 1;
            if l > si || r < si {
                continue;
            }
            for side in 0..2 {
                let state = at(l, r, side);
                let cur = if side == 0 { l } else { r };
                for li in 0..labels[state].len() {
                    let lab = labels[state][li];
                    let mut moves = Vec::with_capacity(2);
                    if l > 0 {
                        moves.push((l - 1, at(l - 1, r, 0)));
                    }
                    if r + 1 < n {
                        moves.push((r + 1, at(l, r + 1, 1)));
                    }
                    for (dest, next_state) in moves {
                        let time = lab.time + gap(cur, dest);
                        let cand = LineLabel {
                            time,
                            cost: lab.cost + (time as f64).powf(p),
                            parent: state as u32,
                            parent_idx: li as u32,
                        };
                        let frontier = &mut labels[next_state];
                        if frontier.iter().any(|o| o.time <= cand.time && o.cost <= cand.cost) {
                            continue;
                        }
                        let before = frontier.len();
                        frontier.retain(|o| !(o.time >= cand.time && o.cost >= cand.cost));
                        total = total + 1 + frontier.len() - before;
                        frontier.push(cand);
                        check("line DP labels", total, cap)?;
                    }
                }
            }
        }
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for side in 0..2 {
        let state = at(0, n - 1, side);
        for (li, lab) in labels[state].iter().enumerate() {
            if best.is_none_or(|b| lab.cost < b.0) {
                best = Some((lab.cost, state, li));
            }
        }
    }
    let (_, mut state, mut li) = best.ok_or_else(|| Error::structural("line DP produced no route"))?;
    let mut seq = Vec::with_capacity(n);
    loop {
        let side = state % 2;
        let lr = state / 2;
        let (l, r) = (lr / n, lr % n);
        seq.push(if side == 0 { l } else { r });
        let lab = labels[state][li];
        if lab.parent == u32::MAX {
            break;
        }
        state = lab.parent as usize;
        li = lab.parent_idx as usize;
    }
    seq.reverse();
    Ok(seq)
}

/// Exact multi-vehicle `L_p` TSP by enumerating vertex-to-vehicle assignments and,
/// per vehicle, visiting orders. Vehicle `i` starts at `inst.starts[i]`.
pub fn exact_multi_lp_tsp(inst: &MetricInstance, norm: Norm) -> Result<ExactMultiSolution> {
    let limits = Limits::current();
    check("multi-vehicle exact vertices", inst.n, limits.multi)?;
    check("multi-vehicle exact vehicles", inst.vehicles(), limits.multi_vehicles)?;
    let k = inst.vehicles();
    let rest: Vec<usize> = (0..inst.n).filter(|v| !inst.starts.contains(v)).collect();
    let r = rest.len();

    // best[i][mask] = (cost, order) for vehicle i serving the subset `mask` of `rest`.
    let mut best: Vec<Vec<(f64, Vec<usize>)>> = Vec::with_capacity(k);
    for &s in &inst.starts {
        let mut per = Vec::with_capacity(1 << r);
        for mask in 0..(1usize << r) {
            let subset: Vec<usize> = (0..r).filter(|&j| mask & (1 << j) != 0).map(|j| rest[j]).collect();
            let mut b: Option<(f64, Vec<usize>)> = None;
            for perm in subset.iter().copied().permutations(subset.len()) {
                let (mut len, mut cost, mut prev) = (0u64, 0.0f64, s);
                for &v in &perm {
                    len += inst.d(prev, v);
                    cost = combine(norm, cost, len);
                    prev = v;
                }
                if b.as_ref().is_none_or(|(c, _)| cost < *c) {
                    b = Some((cost, perm));
                }
            }
            per.push(b.expect("at least the empty permutation"));
        }
        best.push(per);
    }

    let mut choice: Option<(f64, Vec<usize>)> = None;
    let total = k.checked_pow(r as u32).ok_or_else(|| Error::invalid("too many assignments"))?;
    let mut assign = vec![0usize; r];
    for code in 0..total {
        let mut c = code;
        for j in (0..r).rev() {
            assign[j] = c % k;
            c /= k;
        }
        let mut masks = vec![0usize; k];
        for (j, &a) in assign.iter().enumerate() {
            masks[a] |= 1 << j;
        }
        let cost = match norm {
            Norm::Inf => (0..k).map(|i| best[i][masks[i]].0).fold(0.0, f64::max),
            _ => (0..k).map(|i| best[i][masks[i]].0).sum(),
        };
        if choice.as_ref().is_none_or(|(bc, _)| cost < *bc) {
            choice = Some((cost, masks));
        }
    }
    let (_, masks) = choice.expect("at least one assignment");
    let routes = inst
        .starts
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut route = vec![s];
            route.extend(best[i][masks[i]].1.iter().copied());
            route
        })
        .collect();
    let routes = MultiRoute::new(routes, inst)?;
    let delays = multi_visit_times(&routes, inst);
    let objective = delays.norm(norm);
    Ok(ExactMultiSolution { routes, delays, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{generate_instance, InstanceKind};

    #[test]
    fn lex_mask_order() {
        // {0,3} < {1,2}
        assert!(mask_lex_less(0b1001, 0b0110));
        assert!(!mask_lex_less(0b0110, 0b1001));
        assert!(!mask_lex_less(0b11, 0b11));
    }

    #[test]
    fn dp_matches_enumeration_small() {
        for seed in 0..5 {
            let inst = generate_instance(seed, 7, InstanceKind::RandomMetric).unwrap();
            for norm in [Norm::P(1.0), Norm::P(2.0), Norm::Inf] {
                let a = exact_lp_tsp(&inst, norm).unwrap();
                let b = enumerate_lp_tsp(&inst, norm).unwrap();
                assert!((a.objective - b.objective).abs() <= 1e-9 * b.objective.max(1.0));
            }
        }
    }

    #[test]
    fn k_path_profile_is_monotone() {
        let inst = generate_instance(3, 8, InstanceKind::RandomMetric).unwrap();
        let prof = k_path_profile(&inst, 0).unwrap();
        assert_eq!(prof[0], 0);
        assert!(prof.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn capacity_errors() {
        let inst = generate_instance(0, 13, InstanceKind::RandomMetric).unwrap();
        assert!(matches!(exact_lp_tsp(&inst, Norm::P(1.0)), Err(Error::Capacity { .. })));
        assert!(matches!(enumerate_lp_tsp(&inst, Norm::P(1.0)), Err(Error::Capacity { .. })));
    }
}
